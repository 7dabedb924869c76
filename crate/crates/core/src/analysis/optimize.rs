//! Maximization of the secrecy objectives over `(r0, P)` with
//! `0 < r0 <= r0_max` and `0 < P <= P_max`.
//!
//! A coarse grid (linear in `r0`, log-spaced in `P`) locates the basin, then
//! golden-section steps alternate between `r0` and `log P` inside the
//! neighbouring grid cells. Grid ties go to the smallest `r0`, then the
//! smallest `P`.

use serde::{Deserialize, Serialize};

use super::{ce_rate, cs_rayleigh, domain, AnalysisError, OperatingPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    /// Secrecy rate with Gaussian inputs.
    Cs,
    /// Erasure-wiretap secrecy rate; depends on `rc`.
    Ce,
}

impl Objective {
    pub fn evaluate(self, r0: f64, power: f64, rc: f64) -> f64 {
        match self {
            Objective::Cs => cs_rayleigh(r0, power).unwrap_or(0.0),
            Objective::Ce => ce_rate(&OperatingPoint {
                r0,
                rc,
                power,
                k: 1,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub r0_max: f64,
    /// Grid points in `(0, r0_max]`.
    pub r0_steps: usize,
    /// Log-spaced power points ending at `P_max`.
    pub power_points: usize,
    /// Decades below `P_max` spanned by the power grid.
    pub power_decades: f64,
    /// Alternating refinement passes.
    pub refine_passes: usize,
}

impl Default for SearchBox {
    fn default() -> Self {
        Self {
            r0_max: 25.0,
            r0_steps: 500,
            power_points: 16,
            power_decades: 3.0,
            refine_passes: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub r0: f64,
    pub power: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub argmax_r0: f64,
    pub argmax_power: f64,
    pub value: f64,
    /// Coarse grid evaluations; `value` is at least every entry.
    pub trace: Vec<GridPoint>,
    /// The objective is zero everywhere on the grid.
    pub degenerate: bool,
}

/// Golden-section search for a maximum of a unimodal `f` on `[lo, hi]`.
/// Returns `(x, f(x))` for the best point seen.
pub fn golden_section_max<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

pub fn optimize_rate(
    objective: Objective,
    p_max: f64,
    rc: f64,
    search: &SearchBox,
) -> Result<Optimum, AnalysisError> {
    if !(p_max > 0.0 && p_max.is_finite()) {
        return Err(domain("p_max", p_max));
    }
    if search.r0_steps == 0
        || search.power_points == 0
        || search.r0_max.is_nan()
        || search.r0_max <= 0.0
    {
        return Err(domain("search box", search.r0_max));
    }
    let dr = search.r0_max / search.r0_steps as f64;
    let r0_grid: Vec<f64> = (1..=search.r0_steps).map(|i| i as f64 * dr).collect();
    let powers: Vec<f64> = if search.power_points == 1 {
        vec![p_max]
    } else {
        let last = (search.power_points - 1) as f64;
        (0..search.power_points)
            .map(|i| p_max * 10f64.powf(-search.power_decades * (last - i as f64) / last))
            .collect()
    };

    let mut trace = Vec::with_capacity(r0_grid.len() * powers.len());
    let mut best = (0usize, 0usize, f64::NEG_INFINITY);
    for (i, &r0) in r0_grid.iter().enumerate() {
        for (j, &p) in powers.iter().enumerate() {
            let value = objective.evaluate(r0, p, rc);
            trace.push(GridPoint {
                r0,
                power: p,
                value,
            });
            if value > best.2 {
                best = (i, j, value);
            }
        }
    }
    let (bi, bj, grid_best) = best;
    if grid_best <= 0.0 {
        return Ok(Optimum {
            argmax_r0: r0_grid[bi],
            argmax_power: powers[bj],
            value: objective.evaluate(r0_grid[bi], powers[bj], rc),
            trace,
            degenerate: true,
        });
    }

    let r0_lo = (r0_grid[bi] - dr).max(dr * 1e-3);
    let r0_hi = (r0_grid[bi] + dr).min(search.r0_max);
    let lp_lo = powers[bj.saturating_sub(1)].ln();
    let lp_hi = powers[(bj + 1).min(powers.len() - 1)].ln();

    let (mut r0, mut p, mut value) = (r0_grid[bi], powers[bj], grid_best);
    for _ in 0..search.refine_passes {
        let (r, v) = golden_section_max(|x| objective.evaluate(x, p, rc), r0_lo, r0_hi, 1e-10);
        if v > value {
            r0 = r;
            value = v;
        }
        if lp_hi > lp_lo {
            let (lp, v) =
                golden_section_max(|x| objective.evaluate(r0, x.exp(), rc), lp_lo, lp_hi, 1e-10);
            if v > value {
                p = lp.exp().min(p_max);
                value = objective.evaluate(r0, p, rc);
            }
        }
    }
    // Golden-section never evaluates the bracket ends; P_max itself is a
    // common maximizer.
    let at_cap = objective.evaluate(r0, p_max, rc);
    if at_cap > value {
        p = p_max;
        value = at_cap;
    }

    Ok(Optimum {
        argmax_r0: r0,
        argmax_power: p,
        value,
        trace,
        degenerate: false,
    })
}
