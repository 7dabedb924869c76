//! Sample-mean estimators for the closed forms. They draw gains through
//! [`crate::fading`] and use the threshold predicates directly, so they
//! accept any mean gains in the [`ChannelSpec`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::OperatingPoint;
use crate::fading::{
    bob_decodes, eve_erased, mutual_info, sample_block, sample_exponential, ChannelSpec,
};

/// Sample mean with its standard error. `std_err` is infinite when fewer
/// than two samples were drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub trials: u64,
}

impl McEstimate {
    /// `(estimate - reference) / std_err`.
    pub fn z_score(&self, reference: f64) -> f64 {
        let d = self.mean - reference;
        if d == 0.0 {
            0.0
        } else {
            d / self.std_err
        }
    }

    pub fn within(&self, reference: f64, sigmas: f64) -> bool {
        (self.mean - reference).abs() <= sigmas * self.std_err
    }
}

#[derive(Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn finish(self) -> McEstimate {
        let std_err = if self.n < 2 {
            f64::INFINITY
        } else {
            (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
        };
        McEstimate {
            mean: self.mean,
            std_err,
            trials: self.n,
        }
    }
}

/// Estimates `Pr(r0 <= log2(1+h_b P)) · E[r0 - log2(1+h_e P)]^+` using the
/// power and mean gains in `spec`. Each trial draws an independent block
/// and scores `1{Bob decodes} · [r0 - log2(1+h_e P)]^+`.
pub fn cs_objective_mc<R: Rng + ?Sized>(
    r0: f64,
    spec: &ChannelSpec,
    trials: u64,
    rng: &mut R,
) -> McEstimate {
    let p = spec.power();
    let mut m = Moments::default();
    for _ in 0..trials {
        let g = sample_block(spec, rng);
        let y = if bob_decodes(r0, g.h_b, p) {
            (r0 - mutual_info(g.h_e, p)).max(0.0)
        } else {
            0.0
        };
        m.push(y);
    }
    m.finish()
}

/// Estimates `r0 · Pr(Bob decodes) · Pr(Eve erased)` at `pt`; `spec`
/// supplies the mean gains and `pt.power` the power.
pub fn ce_objective_mc<R: Rng + ?Sized>(
    pt: &OperatingPoint,
    spec: &ChannelSpec,
    trials: u64,
    rng: &mut R,
) -> McEstimate {
    let mut m = Moments::default();
    for _ in 0..trials {
        let g = sample_block(spec, rng);
        let hit = bob_decodes(pt.r0, g.h_b, pt.power) && eve_erased(pt.r0, pt.rc, g.h_e, pt.power);
        m.push(if hit { pt.r0 } else { 0.0 });
    }
    m.finish()
}

/// Estimates the outage in its min form,
/// `Pr(min_j log2(1 + h_e(j) P) > r0 - rc)` over `k` i.i.d. Eve gains.
pub fn p_out_mc<R: Rng + ?Sized>(
    pt: &OperatingPoint,
    spec: &ChannelSpec,
    trials: u64,
    rng: &mut R,
) -> McEstimate {
    let mut m = Moments::default();
    for _ in 0..trials {
        let min_rate = (0..pt.k)
            .map(|_| mutual_info(sample_exponential(spec.mean_gain_eve(), rng), pt.power))
            .fold(f64::INFINITY, f64::min);
        m.push(if min_rate > pt.r0 - pt.rc { 1.0 } else { 0.0 });
    }
    m.finish()
}

/// Counts Bernoulli trials (fresh Bob gains) until `k` successes, averaged
/// over `trials` runs. Runs until done; callers keep the success
/// probability away from zero.
pub fn transmissions_mc<R: Rng + ?Sized>(
    pt: &OperatingPoint,
    spec: &ChannelSpec,
    trials: u64,
    rng: &mut R,
) -> McEstimate {
    let mut m = Moments::default();
    for _ in 0..trials {
        let mut sent = 0u64;
        let mut acked = 0u32;
        while acked < pt.k {
            sent += 1;
            if bob_decodes(
                pt.r0,
                sample_exponential(spec.mean_gain_bob(), rng),
                pt.power,
            ) {
                acked += 1;
            }
        }
        m.push(sent as f64);
    }
    m.finish()
}
