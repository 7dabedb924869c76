use std::f64::consts::LN_2;

use super::special::exp_integral_e1_scaled;
use super::{domain, exp_flushed, AnalysisError, OperatingPoint, RateReport};

/// `(2^r - 1) / p`, the gain threshold for rate `r`. Infinite when `p = 0`.
fn gain_threshold(r: f64, power: f64) -> f64 {
    (r * LN_2).exp_m1() / power
}

/// Probability that Bob's unit-mean Rayleigh channel supports rate `r0`,
/// `exp(-(2^r0 - 1)/P)`.
pub fn bob_success_probability(r0: f64, power: f64) -> f64 {
    exp_flushed(-gain_threshold(r0, power)).0
}

/// Secrecy-rate objective at fixed `(r0, P)` for symmetric unit-mean
/// Rayleigh links:
///
/// `exp(-(2^r0-1)/P) · { r0 - e^{1/P}/ln 2 · [E1(1/P) - E1(2^r0/P)] }`
///
/// The braced term is `E[r0 - log2(1 + h_e P)]^+`. It is evaluated through
/// `e^x E1(x)` so that small `P` does not overflow.
pub fn cs_rayleigh(r0: f64, power: f64) -> Result<f64, AnalysisError> {
    cs_rayleigh_asymmetric(r0, power, 1.0, 1.0)
}

/// [`cs_rayleigh`] with Rayleigh links of arbitrary mean gain. Only the
/// products `E[h_b] P` and `E[h_e] P` matter.
pub fn cs_rayleigh_asymmetric(
    r0: f64,
    power: f64,
    mean_gain_bob: f64,
    mean_gain_eve: f64,
) -> Result<f64, AnalysisError> {
    if !(r0 >= 0.0 && r0.is_finite()) {
        return Err(domain("r0", r0));
    }
    if !(power > 0.0 && power.is_finite()) {
        return Err(domain("power", power));
    }
    for g in [mean_gain_bob, mean_gain_eve] {
        if !(g > 0.0 && g.is_finite()) {
            return Err(domain("mean gain", g));
        }
    }
    if r0 == 0.0 {
        return Ok(0.0);
    }
    let (success, _) = exp_flushed(-gain_threshold(r0, power * mean_gain_bob));
    if success == 0.0 {
        return Ok(0.0);
    }
    let pe = power * mean_gain_eve;
    let threshold = gain_threshold(r0, pe);
    let a = 1.0 / pe;
    let b = a + threshold;
    // e^{a}[E1(a) - E1(b)] = S(a) - S(b) e^{-(b-a)}, S(x) = e^x E1(x).
    let gap = exp_integral_e1_scaled(a)? - exp_integral_e1_scaled(b)? * (-threshold).exp();
    let brace = (r0 - gap / LN_2).max(0.0);
    Ok(success * brace)
}

/// Erasure-wiretap objective at `pt`:
/// `r0 · Pr(Bob decodes) · Pr(Eve erased)`, zero when `rc >= r0`.
pub fn ce_rate(pt: &OperatingPoint) -> f64 {
    if pt.rc >= pt.r0 {
        return 0.0;
    }
    let success = bob_success_probability(pt.r0, pt.power);
    let erased = -(-gain_threshold(pt.r0 - pt.rc, pt.power)).exp_m1();
    pt.r0 * success * erased
}

/// Natural log of the secrecy outage probability,
/// `-(k/P)(2^{r0-rc} - 1)`; zero when `rc >= r0`.
pub fn log_p_out(pt: &OperatingPoint) -> f64 {
    if pt.rc >= pt.r0 {
        return 0.0;
    }
    -f64::from(pt.k) * gain_threshold(pt.r0 - pt.rc, pt.power)
}

/// Probability that Eve decodes all `k` key-carrying frames.
pub fn p_out(pt: &OperatingPoint) -> f64 {
    exp_flushed(log_p_out(pt)).0
}

/// Expected transmissions to deliver `k` frames, `k · exp((2^r0-1)/P)`.
/// Infinite when `P = 0`.
pub fn avg_transmissions(pt: &OperatingPoint) -> f64 {
    f64::from(pt.k) * gain_threshold(pt.r0, pt.power).exp()
}

/// Key bits per channel use, `(r0/k) · exp(-(2^r0-1)/P)`.
pub fn key_rate(pt: &OperatingPoint) -> f64 {
    pt.r0 / f64::from(pt.k) * bob_success_probability(pt.r0, pt.power)
}

pub fn rate_report(pt: &OperatingPoint) -> RateReport {
    let threshold = gain_threshold(pt.r0, pt.power);
    let (_, success_flushed) = exp_flushed(-threshold);
    let (p_out, pout_flushed) = exp_flushed(log_p_out(pt));
    let cs = if pt.power > 0.0 {
        cs_rayleigh(pt.r0, pt.power).unwrap_or(0.0)
    } else {
        0.0
    };
    RateReport {
        cs,
        ce: ce_rate(pt),
        p_out,
        n0: avg_transmissions(pt),
        rk: key_rate(pt),
        underflow: success_flushed || pout_flushed,
    }
}
