//! Block-fading channel gains and the rate thresholds that abstract an
//! ideal (infinitely long) inner code.
//!
//! Within one coherence block the power gains `h_b` (Alice→Bob) and `h_e`
//! (Alice→Eve) are fixed; across blocks they are redrawn independently.
//! Noise has unit variance, so the transmit power doubles as the average
//! SNR of a unit-mean link.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::uniform_open_closed;

#[derive(Debug, Error, PartialEq)]
pub enum FadingError {
    #[error("mean gain for {link} must be positive and finite, got {value}")]
    MeanGain { link: &'static str, value: f64 },
    #[error("transmit power must be nonnegative and finite, got {0}")]
    Power(f64),
}

/// Fading law for the power gains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum FadingLaw {
    /// Rayleigh amplitude, i.e. exponentially distributed power gain.
    #[default]
    Rayleigh,
}

/// Statistics of the two links plus the transmit power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    mean_gain_bob: f64,
    mean_gain_eve: f64,
    power: f64,
    law: FadingLaw,
}

impl ChannelSpec {
    pub fn rayleigh(
        mean_gain_bob: f64,
        mean_gain_eve: f64,
        power: f64,
    ) -> Result<Self, FadingError> {
        for (link, value) in [("bob", mean_gain_bob), ("eve", mean_gain_eve)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(FadingError::MeanGain { link, value });
            }
        }
        if !(power >= 0.0 && power.is_finite()) {
            return Err(FadingError::Power(power));
        }
        Ok(Self {
            mean_gain_bob,
            mean_gain_eve,
            power,
            law: FadingLaw::Rayleigh,
        })
    }

    /// Unit-mean Rayleigh on both links.
    pub fn symmetric(power: f64) -> Result<Self, FadingError> {
        Self::rayleigh(1.0, 1.0, power)
    }

    pub fn mean_gain_bob(&self) -> f64 {
        self.mean_gain_bob
    }

    pub fn mean_gain_eve(&self) -> f64 {
        self.mean_gain_eve
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn law(&self) -> FadingLaw {
        self.law
    }

    /// Same link statistics at a different transmit power.
    pub fn with_power(self, power: f64) -> Result<Self, FadingError> {
        Self::rayleigh(self.mean_gain_bob, self.mean_gain_eve, power)
    }
}

/// Power gains seen by Bob and Eve in one coherence block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockGains {
    pub h_b: f64,
    pub h_e: f64,
}

/// Exponential draw by inverse CDF, `-mean * ln(u)` with `u` in (0, 1].
pub fn sample_exponential<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    -mean * uniform_open_closed(rng).ln()
}

/// Draws one block. Bob's gain is drawn first, then Eve's.
pub fn sample_block<R: Rng + ?Sized>(spec: &ChannelSpec, rng: &mut R) -> BlockGains {
    match spec.law {
        FadingLaw::Rayleigh => {
            let h_b = sample_exponential(spec.mean_gain_bob, rng);
            let h_e = sample_exponential(spec.mean_gain_eve, rng);
            BlockGains { h_b, h_e }
        }
    }
}

/// `log2(1 + h P)` in bits per channel use.
pub fn mutual_info(h: f64, power: f64) -> f64 {
    (1.0 + h * power).log2()
}

/// Bob decodes iff the rate fits under his instantaneous capacity.
/// Equality counts as success.
pub fn bob_decodes(r0: f64, h_b: f64, power: f64) -> bool {
    r0 <= mutual_info(h_b, power)
}

/// Eve erases the frame iff even with `rc` bits/use of Genie side
/// information her channel cannot close the gap to `r0`. `rc = 0` is the
/// plain ML eavesdropper.
pub fn eve_erased(r0: f64, rc: f64, h_e: f64, power: f64) -> bool {
    r0 - rc > mutual_info(h_e, power)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_specs() {
        assert!(ChannelSpec::rayleigh(1.0, 0.0, 1.0).is_err());
        assert!(ChannelSpec::rayleigh(0.0, 1.0, 1.0).is_err());
        assert!(ChannelSpec::rayleigh(1.0, 1.0, -1.0).is_err());
        assert!(ChannelSpec::rayleigh(f64::NAN, 1.0, 1.0).is_err());
        assert!(ChannelSpec::rayleigh(1.0, 1.0, 0.0).is_ok());
    }

    #[test]
    fn mutual_info_examples() {
        assert_eq!(mutual_info(0.0, 123.0), 0.0);
        assert_eq!(mutual_info(1.0, 1.0), 1.0);
        assert_eq!(mutual_info(3.0, 5.0), 4.0);
    }

    #[test]
    fn decoding_thresholds() {
        assert!(bob_decodes(1.0, 1.0, 1.0));
        assert!(bob_decodes(4.0, 3.0, 5.0));
        assert!(!bob_decodes(4.01, 3.0, 5.0));

        assert!(!eve_erased(4.0, 0.0, 3.0, 5.0));
        assert!(eve_erased(5.0, 0.0, 3.0, 5.0));
        for h in [0.0, 0.5, 10.0] {
            assert!(!eve_erased(4.0, 4.0, h, 7.0));
            assert!(!eve_erased(4.0, 6.0, h, 0.0));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = ChannelSpec::symmetric(10.0).unwrap();
        let run = |seed| {
            let mut rng = stream(seed, 0);
            (0..50)
                .map(|_| sample_block(&spec, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }

    #[test]
    fn sample_mean_converges() {
        // Exponential(1): sigma = 1, so 3 sigma / sqrt(N) = 0.003 at N = 1e6.
        let spec = ChannelSpec::rayleigh(1.0, 2.5, 1.0).unwrap();
        let mut rng = stream(1, 0);
        let n = 1_000_000;
        let (mut sb, mut se) = (0.0, 0.0);
        for _ in 0..n {
            let g = sample_block(&spec, &mut rng);
            assert!(g.h_b >= 0.0 && g.h_e >= 0.0);
            sb += g.h_b;
            se += g.h_e;
        }
        assert!((sb / n as f64 - 1.0).abs() <= 0.003);
        assert!((se / n as f64 - 2.5).abs() <= 3.0 * 2.5 / 1000.0);
    }

    #[test]
    fn gains_are_uncorrelated() {
        let spec = ChannelSpec::symmetric(1.0).unwrap();
        let mut rng = stream(2, 0);
        let n = 200_000;
        let samples: Vec<BlockGains> = (0..n).map(|_| sample_block(&spec, &mut rng)).collect();
        let mb = samples.iter().map(|g| g.h_b).sum::<f64>() / n as f64;
        let me = samples.iter().map(|g| g.h_e).sum::<f64>() / n as f64;
        let (mut cov, mut vb, mut ve) = (0.0, 0.0, 0.0);
        for g in &samples {
            cov += (g.h_b - mb) * (g.h_e - me);
            vb += (g.h_b - mb).powi(2);
            ve += (g.h_e - me).powi(2);
        }
        let rho = cov / (vb * ve).sqrt();
        // Null sd of the sample correlation is 1/sqrt(n).
        assert!(rho.abs() < 4.0 / (n as f64).sqrt(), "rho = {rho}");
    }

    #[test]
    fn decode_and_erasure_frequencies_match_exponential_law() {
        let n = 1_000_000u32;
        let (r0, rc, p) = (3.0, 1.0, 10.0);
        let spec = ChannelSpec::symmetric(p).unwrap();
        let mut rng = stream(3, 0);
        let (mut dec, mut era) = (0u32, 0u32);
        for _ in 0..n {
            let g = sample_block(&spec, &mut rng);
            dec += u32::from(bob_decodes(r0, g.h_b, p));
            era += u32::from(eve_erased(r0, rc, g.h_e, p));
        }
        let band = |q: f64| 3.0 * (q * (1.0 - q) / f64::from(n)).sqrt();
        let p_dec = (-(2f64.powf(r0) - 1.0) / p).exp();
        let p_era = 1.0 - (-(2f64.powf(r0 - rc) - 1.0) / p).exp();
        assert!((f64::from(dec) / f64::from(n) - p_dec).abs() <= band(p_dec));
        assert!((f64::from(era) / f64::from(n) - p_era).abs() <= band(p_era));
    }

    proptest! {
        #[test]
        fn mutual_info_monotone(h in 0.0f64..1e3, dh in 0.0f64..1e3, p in 0.0f64..1e4, dp in 0.0f64..1e4) {
            prop_assert!(mutual_info(h + dh, p) >= mutual_info(h, p));
            prop_assert!(mutual_info(h, p + dp) >= mutual_info(h, p));
        }
    }
}
