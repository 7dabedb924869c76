use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::link::{Link, LinkConfig, PacketSpec};
use super::{ConvCodeSpec, FecError};
use crate::fading::{sample_block, ChannelSpec};
use crate::rng::{derive_seed, stream};

/// Fewest packets per (scheme, SNR) point accepted by [`fig4_experiment`].
pub const MIN_TRIALS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub code: ConvCodeSpec,
    pub link: LinkConfig,
    pub trials_per_point: u64,
    /// Required Eve full-intercept probability.
    pub target: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            code: ConvCodeSpec::k7(),
            link: LinkConfig::default(),
            trials_per_point: MIN_TRIALS,
            target: 1e-10,
            seed: 0,
        }
    }
}

/// Estimates for one scheme at one SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemePoint {
    pub scheme: String,
    pub snr_db: f64,
    pub trials: u64,
    /// Bob packet success probability.
    pub p: f64,
    /// Eve packet success probability, Genie included.
    pub q: f64,
    /// Smallest `k` with `q^k <= target`; `None` when infeasible.
    pub k_star: Option<u64>,
    /// Transmitted information bits per channel use.
    pub r0_eff: f64,
    /// `r0_eff * p / k_star`, zero when infeasible.
    pub key_rate: f64,
    pub key_rate_std_err: f64,
    /// `q` is within one trial of 1, so no finite `k` is supported.
    pub infeasible: bool,
}

/// Smallest `k >= 1` with `q^k <= target`, `None` if `q >= 1`.
pub fn required_parts(q: f64, target: f64) -> Option<u64> {
    if q <= target {
        return Some(1);
    }
    if q >= 1.0 {
        return None;
    }
    let (lq, lt) = (q.ln(), target.ln());
    // Absorbs rounding when q^k lands exactly on the target.
    let lt = lt + 1e-12 * lt.abs();
    let mut k = (lt / lq).ceil().max(1.0) as u64;
    while k as f64 * lq > lt {
        k += 1;
    }
    while k > 1 && (k - 1) as f64 * lq <= lt {
        k -= 1;
    }
    Some(k)
}

/// Monte-Carlo estimate of `p`, `q` and the key rate for one scheme at
/// average SNR `snr_db` over symmetric Rayleigh block fading. Packet `i`
/// uses stream `i` of a seed derived from the scheme and SNR, so results
/// do not depend on the order in which points are requested.
pub fn estimate_scheme_point(
    packet: PacketSpec,
    snr_db: f64,
    cfg: &ExperimentConfig,
) -> Result<SchemePoint, FecError> {
    if !(cfg.target > 0.0 && cfg.target < 1.0) {
        return Err(FecError::Config(format!(
            "target {} outside (0, 1)",
            cfg.target
        )));
    }
    if cfg.trials_per_point == 0 {
        return Err(FecError::TooFewTrials { got: 0, min: 1 });
    }
    if !snr_db.is_finite() {
        return Err(FecError::Config(format!("SNR {snr_db} dB is not finite")));
    }
    let link = Link::new(packet, &cfg.code, cfg.link)?;
    let power = crate::db_to_linear(snr_db);
    let channel = ChannelSpec::symmetric(power).map_err(|e| FecError::Config(e.to_string()))?;
    let name = packet.to_string();
    let seed = derive_seed(
        derive_seed(cfg.seed, fnv1a(name.as_bytes())),
        snr_db.to_bits(),
    );

    let n = cfg.trials_per_point;
    let (bob, eve) = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let gains = sample_block(&channel, &mut rng);
            let o = link.simulate(gains, power, &mut rng);
            (u64::from(o.bob_ok), u64::from(o.eve_ok))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    let nf = n as f64;
    let (p, q) = (bob as f64 / nf, eve as f64 / nf);
    let r0_eff = link.effective_rate();
    let infeasible = q >= 1.0 - 1.0 / nf;
    let k_star = if infeasible {
        None
    } else {
        required_parts(q, cfg.target)
    };
    let key_rate = k_star.map_or(0.0, |k| r0_eff * p / k as f64);
    let key_rate_std_err = key_rate_sigma(bob, eve, n, r0_eff, cfg.target);
    Ok(SchemePoint {
        scheme: name,
        snr_db,
        trials: n,
        p,
        q,
        k_star,
        r0_eff,
        key_rate,
        key_rate_std_err,
        infeasible,
    })
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3)
    })
}

/// Delta-method spread of `r0_eff * p * ln q / ln target`, the continuous
/// relaxation of the key rate, using Agresti-Coull adjusted proportions so
/// the result stays finite at `q` near 0 or 1.
fn key_rate_sigma(bob: u64, eve: u64, n: u64, r0_eff: f64, target: f64) -> f64 {
    let n4 = n as f64 + 4.0;
    let p = (bob as f64 + 2.0) / n4;
    let q = (eve as f64 + 2.0) / n4;
    let var_p = p * (1.0 - p) / n4;
    let var_q = q * (1.0 - q) / n4;
    let lt = -target.ln();
    let dp = r0_eff * (-q.ln()) / lt;
    let dq = r0_eff * p / (q * lt);
    (dp * dp * var_p + dq * dq * var_q).sqrt()
}

/// Every scheme over every SNR, scheme-major.
pub fn fig4_experiment(
    schemes: &[PacketSpec],
    snr_db: &[f64],
    cfg: &ExperimentConfig,
) -> Result<Vec<SchemePoint>, FecError> {
    if cfg.trials_per_point < MIN_TRIALS {
        return Err(FecError::TooFewTrials {
            got: cfg.trials_per_point,
            min: MIN_TRIALS,
        });
    }
    let mut out = Vec::with_capacity(schemes.len() * snr_db.len());
    for &s in schemes {
        for &snr in snr_db {
            out.push(estimate_scheme_point(s, snr, cfg)?);
        }
    }
    Ok(out)
}

/// Whether `values` rise to an interior peak and then fall, allowing each
/// step against the trend to be explained by `sigmas` combined standard
/// errors.
pub fn is_unimodal(values: &[f64], std_errs: &[f64], sigmas: f64) -> bool {
    let n = values.len();
    if n < 3 || std_errs.len() != n {
        return false;
    }
    let peak = (0..n).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    if peak == 0 || peak == n - 1 {
        return false;
    }
    let slack = |i: usize, j: usize| sigmas * std_errs[i].hypot(std_errs[j]);
    let rising = (1..=peak).all(|i| values[i] + slack(i, i - 1) >= values[i - 1]);
    let falling = (peak + 1..n).all(|i| values[i] <= values[i - 1] + slack(i, i - 1));
    rising && falling
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fec::link::Modulation;

    fn cfg(trials: u64) -> ExperimentConfig {
        ExperimentConfig {
            trials_per_point: trials,
            ..Default::default()
        }
    }

    #[test]
    fn required_parts_examples() {
        assert_eq!(required_parts(0.0, 1e-10), Some(1));
        assert_eq!(required_parts(0.1, 1e-10), Some(10));
        assert_eq!(required_parts(0.5, 1e-10), Some(34));
        assert_eq!(required_parts(0.99, 1e-10), Some(2292));
        assert_eq!(required_parts(1.0, 1e-10), None);
        for q in [0.3, 0.77, 0.9999] {
            let k = required_parts(q, 1e-6).unwrap();
            assert!(q.powf(k as f64) <= 1e-6 * (1.0 + 1e-12));
            assert!(k == 1 || q.powf((k - 1) as f64) > 1e-6);
        }
    }

    #[test]
    fn deterministic_and_order_independent() {
        let s = PacketSpec::new(240, Modulation::Bpsk, true);
        let a = estimate_scheme_point(s, 10.0, &cfg(400)).unwrap();
        let b = estimate_scheme_point(s, 10.0, &cfg(400)).unwrap();
        assert_eq!(a, b);
        let other = PacketSpec::new(240, Modulation::Qpsk, true);
        let c = estimate_scheme_point(other, 10.0, &cfg(400)).unwrap();
        assert_ne!(a.p, c.p);
    }

    #[test]
    fn noiseless_limit_is_infeasible() {
        let s = PacketSpec::new(240, Modulation::Bpsk, true);
        let pt = estimate_scheme_point(s, 60.0, &cfg(300)).unwrap();
        assert!(pt.p > 0.99);
        assert!(pt.infeasible);
        assert_eq!(pt.k_star, None);
        assert_eq!(pt.key_rate, 0.0);
        assert!(pt.key_rate_std_err.is_finite());
    }

    #[test]
    fn effective_rate_is_nominal() {
        let c = cfg(10);
        let bpsk =
            estimate_scheme_point(PacketSpec::new(24, Modulation::Bpsk, true), 0.0, &c).unwrap();
        let qpsk =
            estimate_scheme_point(PacketSpec::new(24, Modulation::Qpsk, false), 0.0, &c).unwrap();
        assert_eq!(bpsk.r0_eff, 0.5);
        assert_eq!(qpsk.r0_eff, 2.0);
    }

    #[test]
    fn bad_configurations() {
        let s = PacketSpec::new(240, Modulation::Bpsk, true);
        assert!(matches!(
            fig4_experiment(&[s], &[0.0], &cfg(100)),
            Err(FecError::TooFewTrials { .. })
        ));
        let mut c = cfg(100);
        c.target = 1.0;
        assert!(estimate_scheme_point(s, 0.0, &c).is_err());
        assert!(estimate_scheme_point(s, f64::NAN, &cfg(100)).is_err());
    }

    #[test]
    fn unimodality_check() {
        let se = [0.01; 5];
        assert!(is_unimodal(&[0.1, 0.3, 0.5, 0.4, 0.2], &se, 2.0));
        assert!(is_unimodal(&[0.1, 0.3, 0.29, 0.5, 0.2], &se, 2.0));
        assert!(!is_unimodal(&[0.1, 0.3, 0.1, 0.5, 0.2], &se, 2.0));
        assert!(!is_unimodal(&[0.1, 0.2, 0.3, 0.4, 0.5], &se, 2.0));
        assert!(!is_unimodal(&[0.1, 0.2], &[0.0; 2], 2.0));
    }
}
