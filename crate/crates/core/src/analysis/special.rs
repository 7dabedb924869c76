//! Exponential integral `E1(x) = ∫_x^∞ e^{-t}/t dt`.
//!
//! Power series for `x <= 1`, modified-Lentz continued fraction above.

use super::{domain, AnalysisError};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_SWITCH: f64 = 1.0;
const EPS: f64 = 1e-16;
const MAX_ITER: usize = 500;

/// `E1(x)` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> Result<f64, AnalysisError> {
    check(x)?;
    if x <= SERIES_SWITCH {
        Ok(series(x))
    } else {
        Ok(continued_fraction_scaled(x) * (-x).exp())
    }
}

/// `e^x E1(x)` without forming either factor, so it stays finite where
/// `E1` underflows or `e^x` overflows. Tends to `1/x` as `x` grows.
pub fn exp_integral_e1_scaled(x: f64) -> Result<f64, AnalysisError> {
    check(x)?;
    if x <= SERIES_SWITCH {
        Ok(series(x) * x.exp())
    } else {
        Ok(continued_fraction_scaled(x))
    }
}

fn check(x: f64) -> Result<(), AnalysisError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(domain("x", x))
    }
}

// E1(x) = -γ - ln x - Σ_{n≥1} (-x)^n / (n · n!)
fn series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for n in 1..MAX_ITER {
        let nf = n as f64;
        term *= -x / nf;
        let contrib = term / nf;
        sum += contrib;
        if contrib.abs() < EPS * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

// e^x E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- ...)))
fn continued_fraction_scaled(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}
