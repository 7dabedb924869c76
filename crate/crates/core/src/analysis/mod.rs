//! Closed-form secrecy quantities for symmetric unit-mean Rayleigh fading,
//! their optimizers, and Monte Carlo estimators that check them.
//!
//! Exponentials that can underflow (success probabilities at low SNR,
//! outage at large `k`) are formed in log space and exponentiated last.
//! Anything below [`UNDERFLOW_FLOOR`] is reported as exactly zero, and
//! [`RateReport::underflow`] records that it happened.

mod closed_form;
mod monte_carlo;
mod optimize;
mod special;
mod tradeoff;

pub use closed_form::{
    avg_transmissions, bob_success_probability, ce_rate, cs_rayleigh, cs_rayleigh_asymmetric,
    key_rate, log_p_out, p_out, rate_report,
};
pub use monte_carlo::{ce_objective_mc, cs_objective_mc, p_out_mc, transmissions_mc, McEstimate};
pub use optimize::{golden_section_max, optimize_rate, GridPoint, Objective, Optimum, SearchBox};
pub use special::{exp_integral_e1, exp_integral_e1_scaled};
pub use tradeoff::{tradeoff_sweep, TradeoffCurve, TradeoffPoint, DEFAULT_K_CAP};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Values below this are flushed to zero.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("{name} out of domain: {value}")]
    Domain { name: &'static str, value: f64 },
    #[error("k must be at least 1")]
    ZeroFrames,
    #[error("target outage must lie in (0, 1], got {0}")]
    Target(f64),
}

pub(crate) fn domain(name: &'static str, value: f64) -> AnalysisError {
    AnalysisError::Domain { name, value }
}

/// One configuration of the finite-`k` scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// Transmission rate, bits per channel use.
    pub r0: f64,
    /// Genie side-information rate given to Eve, bits per channel use.
    pub rc: f64,
    /// Linear transmit power (equal to the average SNR at unit mean gain).
    pub power: f64,
    /// Number of ACKed frames that carry key parts.
    pub k: u32,
}

impl OperatingPoint {
    pub fn new(r0: f64, rc: f64, power: f64, k: u32) -> Result<Self, AnalysisError> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(domain("r0", r0));
        }
        if !(rc >= 0.0 && rc.is_finite()) {
            return Err(domain("rc", rc));
        }
        if !(power >= 0.0 && power.is_finite()) {
            return Err(domain("power", power));
        }
        if k == 0 {
            return Err(AnalysisError::ZeroFrames);
        }
        Ok(Self { r0, rc, power, k })
    }

    pub fn with_k(self, k: u32) -> Result<Self, AnalysisError> {
        Self::new(self.r0, self.rc, self.power, k)
    }
}

/// Every analytic quantity at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// Secrecy-rate objective at this `(r0, power)`.
    pub cs: f64,
    /// Erasure-wiretap objective at this point.
    pub ce: f64,
    pub p_out: f64,
    /// Expected frame transmissions to collect `k` ACKs.
    pub n0: f64,
    /// Key bits per channel use, `r0 / n0`.
    pub rk: f64,
    /// Some component was flushed to zero.
    pub underflow: bool,
}

/// `exp(log_value)`, flushed to zero below the floor. The flag is set when
/// flushing happened.
pub(crate) fn exp_flushed(log_value: f64) -> (f64, bool) {
    let v = log_value.exp();
    if v < UNDERFLOW_FLOOR {
        (0.0, log_value.is_finite())
    } else {
        (v, false)
    }
}
