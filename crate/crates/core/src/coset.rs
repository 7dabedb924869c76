//! Key distillation as the syndrome of the rate-(k-1)/k single-parity-check
//! code, i.e. the bitwise XOR of the `k` key parts, and what Eve can learn
//! about the result.
//!
//! If Eve is missing even one part, every distilled key value is equally
//! consistent with what she holds. [`posterior_counts`] computes the
//! number of completions of her erased parts that yield each key value,
//! exactly, so the blinding claim can be checked with zero tolerance.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::bits::{Bits, BitsError};

/// Widest key for which the posterior is computed exactly (2^20 values).
pub const MAX_EXACT_WIDTH: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum CosetError {
    #[error("no key parts")]
    Empty,
    #[error("{parts} parts but {mask} erasure flags")]
    MaskLength { parts: usize, mask: usize },
    #[error(transparent)]
    Width(#[from] BitsError),
    #[error("width {width} exceeds the exact-enumeration bound of {MAX_EXACT_WIDTH} bits; use sampled_uniformity")]
    TooWide { width: usize },
    #[error("completion count overflows 128 bits")]
    CountOverflow,
}

/// The `k` parts carried by ACKed frames, with Eve's erasures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyParts {
    pub parts: Vec<Bits>,
    /// `true` where Eve lacks the part.
    pub erased: Vec<bool>,
}

impl KeyParts {
    /// Parts with nothing erased.
    pub fn known(parts: Vec<Bits>) -> Self {
        let erased = vec![false; parts.len()];
        Self { parts, erased }
    }

    pub fn width(&self) -> usize {
        self.parts.first().map_or(0, Bits::len)
    }

    pub fn erasures(&self) -> usize {
        self.erased.iter().filter(|&&e| e).count()
    }

    fn check(&self) -> Result<usize, CosetError> {
        if self.parts.is_empty() {
            return Err(CosetError::Empty);
        }
        if self.parts.len() != self.erased.len() {
            return Err(CosetError::MaskLength {
                parts: self.parts.len(),
                mask: self.erased.len(),
            });
        }
        let w = self.width();
        if let Some(p) = self.parts.iter().find(|p| p.len() != w) {
            return Err(BitsError::WidthMismatch {
                left: w,
                right: p.len(),
            }
            .into());
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DistilledKey {
    pub bits: Bits,
}

/// XOR of all parts. The erasure mask plays no role here.
pub fn distill(parts: &KeyParts) -> Result<DistilledKey, CosetError> {
    let w = parts.check()?;
    let mut acc = Bits::zeros(w);
    for p in &parts.parts {
        acc.xor_assign(p)?;
    }
    Ok(DistilledKey { bits: acc })
}

/// For each key value `v` (indexed MSB-first), the number of assignments
/// of Eve's erased parts whose distilled key is `v`. The known parts are
/// taken at their actual values.
///
/// Folds the parts one at a time into a histogram over key values: a known
/// part permutes the histogram by XOR, an erased part sums over all 2^w
/// values it could take.
pub fn posterior_counts(parts: &KeyParts) -> Result<Vec<u128>, CosetError> {
    let w = parts.check()?;
    if w > MAX_EXACT_WIDTH {
        return Err(CosetError::TooWide { width: w });
    }
    let size = 1usize << w;
    let mut hist = vec![0u128; size];
    hist[0] = 1;
    let mut next = vec![0u128; size];
    for (p, &erased) in parts.parts.iter().zip(&parts.erased) {
        if erased {
            // next[x] = Σ_u hist[x ^ u] over every value u, the same for all x.
            let total = hist
                .iter()
                .try_fold(0u128, |acc, &h| acc.checked_add(h))
                .ok_or(CosetError::CountOverflow)?;
            next.fill(total);
        } else {
            let v = p.to_index() as usize;
            for (x, slot) in next.iter_mut().enumerate() {
                *slot = hist[x ^ v];
            }
        }
        std::mem::swap(&mut hist, &mut next);
    }
    Ok(hist)
}

/// Number of distinct key values consistent with Eve's view.
pub fn eve_posterior_support(parts: &KeyParts) -> Result<usize, CosetError> {
    Ok(posterior_counts(parts)?.iter().filter(|&&c| c > 0).count())
}

/// Whether Eve's posterior over the key is exactly uniform.
pub fn posterior_is_uniform(parts: &KeyParts) -> Result<bool, CosetError> {
    let counts = posterior_counts(parts)?;
    Ok(counts.iter().all(|&c| c == counts[0]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Sampled check for keys too wide to enumerate. Draws `samples` random
/// completions of the erased parts and bins the low `min(width, 12)` bits
/// of the resulting key; returns the chi-square goodness-of-fit test
/// against the uniform distribution.
pub fn sampled_uniformity<R: Rng + ?Sized>(
    parts: &KeyParts,
    samples: u64,
    rng: &mut R,
) -> Result<ChiSquareTest, CosetError> {
    let w = parts.check()?;
    let bin_bits = w.min(12);
    let bins = 1usize << bin_bits;
    let mut counts = vec![0u64; bins];
    for _ in 0..samples {
        let mut key = Bits::zeros(w);
        for (p, &erased) in parts.parts.iter().zip(&parts.erased) {
            if erased {
                key.xor_assign(&Bits::random(w, rng))?;
            } else {
                key.xor_assign(p)?;
            }
        }
        let low = key.as_slice()[w - bin_bits..]
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
        counts[low] += 1;
    }
    let expected = samples as f64 / bins as f64;
    let statistic = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum::<f64>();
    let dof = bins - 1;
    let p_value = if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).expect("positive dof");
        1.0 - dist.cdf(statistic)
    };
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn bits(s: &str) -> Bits {
        Bits::from_slice(&s.bytes().map(|b| b - b'0').collect::<Vec<_>>())
    }

    #[test]
    fn distill_examples() {
        let z = distill(&KeyParts::known(vec![bits("0000"), bits("0000")])).unwrap();
        assert_eq!(z.bits, bits("0000"));
        let x = distill(&KeyParts::known(vec![
            bits("1010"),
            bits("0110"),
            bits("1100"),
        ]))
        .unwrap();
        assert_eq!(x.bits, bits("0000"));
        let single = distill(&KeyParts::known(vec![bits("1011")])).unwrap();
        assert_eq!(single.bits, bits("1011"));
    }

    #[test]
    fn flipping_a_part_bit_flips_the_key_bit() {
        let mut rng = stream(0, 0);
        for _ in 0..50 {
            let parts: Vec<Bits> = (0..3).map(|_| Bits::random(16, &mut rng)).collect();
            let base = distill(&KeyParts::known(parts.clone())).unwrap().bits;
            let mut flipped = parts.clone();
            let j = rng.random_range(0..16);
            flipped[rng.random_range(0..3)].flip(j);
            let mut want = base.clone();
            want.flip(j);
            assert_eq!(distill(&KeyParts::known(flipped)).unwrap().bits, want);
        }
    }

    #[test]
    fn distill_rejects_mismatched_widths() {
        let p = KeyParts::known(vec![bits("01"), bits("011")]);
        assert!(matches!(distill(&p), Err(CosetError::Width(_))));
        let p = KeyParts {
            parts: vec![bits("01")],
            erased: vec![],
        };
        assert!(matches!(distill(&p), Err(CosetError::MaskLength { .. })));
        assert_eq!(distill(&KeyParts::known(vec![])), Err(CosetError::Empty));
    }

    #[test]
    fn support_examples() {
        let p = KeyParts {
            parts: vec![bits("0110"), bits("1111")],
            erased: vec![false, true],
        };
        assert_eq!(eve_posterior_support(&p).unwrap(), 16);
        assert!(posterior_is_uniform(&p).unwrap());

        let known = KeyParts::known(vec![bits("0110"), bits("1111")]);
        assert_eq!(eve_posterior_support(&known).unwrap(), 1);
        let counts = posterior_counts(&known).unwrap();
        assert_eq!(counts[0b1001], 1);

        let mut rng = stream(1, 0);
        let p = KeyParts {
            parts: (0..3).map(|_| Bits::random(8, &mut rng)).collect(),
            erased: vec![true, false, true],
        };
        let counts = posterior_counts(&p).unwrap();
        assert_eq!(counts.len(), 256);
        assert!(counts.iter().all(|&c| c == 256));
    }

    #[test]
    fn counts_match_literal_enumeration() {
        // Small enough to list every completion of the erased parts.
        let mut rng = stream(2, 0);
        for k in 1..=3usize {
            for w in 1..=4usize {
                for mask in 0..(1u32 << k) {
                    let parts: Vec<Bits> = (0..k).map(|_| Bits::random(w, &mut rng)).collect();
                    let erased: Vec<bool> = (0..k).map(|i| mask >> i & 1 == 1).collect();
                    let kp = KeyParts {
                        parts: parts.clone(),
                        erased: erased.clone(),
                    };
                    let e = kp.erasures();
                    let mut brute = vec![0u128; 1 << w];
                    for assign in 0..(1u64 << (e * w)) {
                        let mut key = 0u64;
                        let mut slot = 0;
                        for (p, &er) in parts.iter().zip(&erased) {
                            if er {
                                key ^= (assign >> (slot * w)) & ((1 << w) - 1);
                                slot += 1;
                            } else {
                                key ^= p.to_index();
                            }
                        }
                        brute[key as usize] += 1;
                    }
                    assert_eq!(
                        posterior_counts(&kp).unwrap(),
                        brute,
                        "k={k} w={w} mask={mask:b}"
                    );
                }
            }
        }
    }

    #[test]
    fn wide_keys_need_sampling() {
        let p = KeyParts {
            parts: vec![Bits::zeros(128), Bits::zeros(128)],
            erased: vec![false, true],
        };
        assert_eq!(
            posterior_counts(&p),
            Err(CosetError::TooWide { width: 128 })
        );
        let t = sampled_uniformity(&p, 200_000, &mut stream(3, 0)).unwrap();
        assert_eq!(t.dof, 4095);
        assert!(t.p_value > 1e-3, "{t:?}");

        // Nothing erased: every sample lands in one bin.
        let known = KeyParts::known(vec![Bits::zeros(128), Bits::zeros(128)]);
        let t = sampled_uniformity(&known, 10_000, &mut stream(3, 1)).unwrap();
        assert!(t.p_value < 1e-12);
    }
}
