//! Outage versus key-rate curves for the finite-`k` XOR scheme.

use serde::{Deserialize, Serialize};

use super::{domain, exp_flushed, key_rate, log_p_out, AnalysisError, OperatingPoint};

/// Largest `k` a sweep will try before giving up on the target.
pub const DEFAULT_K_CAP: u32 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub k: u32,
    pub key_rate: f64,
    pub p_out: f64,
    /// Natural log of `p_out`, exact even where `p_out` flushes to zero.
    pub log_p_out: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub r0: f64,
    pub rc: f64,
    pub power: f64,
    /// `r0 > rc`; otherwise Eve decodes every frame and `p_out = 1` for all `k`.
    pub feasible: bool,
    /// The last point meets the target outage.
    pub reached_target: bool,
    pub points: Vec<TradeoffPoint>,
}

impl TradeoffCurve {
    /// Interpolated `ln p_out` at a given key rate, linear between adjacent
    /// sweep points. `None` outside the swept key-rate range.
    pub fn log_p_out_at(&self, rate: f64) -> Option<f64> {
        self.points.windows(2).find_map(|w| {
            let (hi, lo) = (&w[0], &w[1]);
            if rate <= hi.key_rate && rate >= lo.key_rate {
                let t = (hi.key_rate - rate) / (hi.key_rate - lo.key_rate);
                Some(hi.log_p_out + t * (lo.log_p_out - hi.log_p_out))
            } else {
                None
            }
        })
    }

    /// The first point whose outage meets `target`.
    pub fn first_meeting(&self, target: f64) -> Option<&TradeoffPoint> {
        let lt = target.ln();
        self.points.iter().find(|p| p.log_p_out <= lt)
    }
}

/// For each `r0`, emits `(k, R_k, P_out)` for `k = 1, 2, ...` until
/// `P_out <= target`, or until `k_cap`. Infeasible rates (`r0 <= rc`) get a
/// single `k = 1` point with `P_out = 1`.
pub fn tradeoff_sweep(
    rc: f64,
    power: f64,
    r0_list: &[f64],
    target: f64,
    k_cap: u32,
) -> Result<Vec<TradeoffCurve>, AnalysisError> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(AnalysisError::Target(target));
    }
    if !(power > 0.0 && power.is_finite()) {
        return Err(domain("power", power));
    }
    let log_target = target.ln();
    r0_list
        .iter()
        .map(|&r0| {
            let base = OperatingPoint::new(r0, rc, power, 1)?;
            let feasible = r0 > rc;
            let mut points = Vec::new();
            let mut reached = false;
            for k in 1..=k_cap.max(1) {
                let pt = OperatingPoint { k, ..base };
                let lp = log_p_out(&pt);
                points.push(TradeoffPoint {
                    k,
                    key_rate: key_rate(&pt),
                    p_out: exp_flushed(lp).0,
                    log_p_out: lp,
                });
                if lp <= log_target {
                    reached = true;
                    break;
                }
                if !feasible {
                    break;
                }
            }
            Ok(TradeoffCurve {
                r0,
                rc,
                power,
                feasible,
                reached_target: reached,
                points,
            })
        })
        .collect()
}
