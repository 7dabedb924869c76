use serde::{Deserialize, Serialize};

use super::FecError;

/// Standard puncturing of the rate-1/2 mother code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Puncture {
    /// No puncturing.
    Rate1_2,
    Rate2_3,
    Rate3_4,
}

impl Puncture {
    /// Keep mask over the interleaved mother output `A1 B1 A2 B2 ...`.
    pub fn pattern(self) -> Vec<bool> {
        match self {
            Puncture::Rate1_2 => vec![true, true],
            Puncture::Rate2_3 => vec![true, true, true, false],
            Puncture::Rate3_4 => vec![true, true, true, false, false, true],
        }
    }
}

/// Rate-1/2 feedforward convolutional code plus a periodic puncture mask.
///
/// Generator taps are read with the most significant of the
/// `constraint_length` bits on the current input, so `0o133` has impulse
/// response `1 0 1 1 0 1 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvCodeSpec {
    pub constraint_length: u32,
    pub generators: [u32; 2],
    pub puncture: Vec<bool>,
}

impl Default for ConvCodeSpec {
    fn default() -> Self {
        Self::k7()
    }
}

impl ConvCodeSpec {
    /// Constraint length 7, generators 133 and 171 (octal), unpunctured.
    pub fn k7() -> Self {
        Self {
            constraint_length: 7,
            generators: [0o133, 0o171],
            puncture: Puncture::Rate1_2.pattern(),
        }
    }

    pub fn punctured(mut self, p: Puncture) -> Self {
        self.puncture = p.pattern();
        self
    }

    pub fn validate(&self) -> Result<(), FecError> {
        let k = self.constraint_length;
        if !(2..=16).contains(&k) {
            return Err(FecError::Code(format!(
                "constraint length {k} outside 2..=16"
            )));
        }
        for g in self.generators {
            if g == 0 || g >> k != 0 {
                return Err(FecError::Code(format!(
                    "generator {g:o} does not fit K = {k}"
                )));
            }
        }
        if !self.puncture.iter().any(|&b| b) {
            return Err(FecError::Code("puncture pattern keeps no bits".into()));
        }
        Ok(())
    }

    pub fn states(&self) -> usize {
        1 << (self.constraint_length - 1)
    }

    /// Information bits per coded bit after puncturing.
    pub fn rate(&self) -> f64 {
        let kept = self.puncture.iter().filter(|&&b| b).count();
        0.5 * self.puncture.len() as f64 / kept as f64
    }

    /// Mother-code output length for `info_len` bits with zero termination.
    pub fn mother_len(&self, info_len: usize) -> usize {
        2 * (info_len + self.constraint_length as usize - 1)
    }

    /// Transmitted (punctured) length.
    pub fn coded_len(&self, info_len: usize) -> usize {
        let m = self.mother_len(info_len);
        let period = self.puncture.len();
        let per = self.puncture.iter().filter(|&&b| b).count();
        let tail = self.puncture[..m % period].iter().filter(|&&b| b).count();
        (m / period) * per + tail
    }

    /// The two output bits for shift-register contents `reg`
    /// (`constraint_length` bits, current input most significant).
    pub(crate) fn outputs(&self, reg: u32) -> [u8; 2] {
        self.generators.map(|g| ((reg & g).count_ones() & 1) as u8)
    }
}

/// Encodes `info`, appends `K-1` zero flush bits, and punctures.
pub fn conv_encode(spec: &ConvCodeSpec, info: &[u8]) -> Result<Vec<u8>, FecError> {
    spec.validate()?;
    let k = spec.constraint_length;
    let mut state = 0u32;
    let mut mother = Vec::with_capacity(spec.mother_len(info.len()));
    let flush = std::iter::repeat_n(0u8, k as usize - 1);
    for b in info.iter().copied().chain(flush) {
        let reg = (u32::from(b & 1) << (k - 1)) | state;
        mother.extend(spec.outputs(reg));
        state = reg >> 1;
    }
    debug_assert_eq!(state, 0);
    Ok(puncture(&spec.puncture, &mother))
}

pub(crate) fn puncture<T: Copy>(pattern: &[bool], mother: &[T]) -> Vec<T> {
    mother
        .iter()
        .zip(pattern.iter().cycle())
        .filter_map(|(&x, &keep)| keep.then_some(x))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::Bits;
    use crate::rng::stream;
    use proptest::prelude::*;

    #[test]
    fn zero_in_zero_out() {
        let c = conv_encode(&ConvCodeSpec::k7(), &[0; 40]).unwrap();
        assert_eq!(c.len(), 2 * 46);
        assert!(c.iter().all(|&b| b == 0));
    }

    #[test]
    fn impulse_response_interleaves_133_and_171() {
        let c = conv_encode(&ConvCodeSpec::k7(), &[1, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        // 133 = 1011011, 171 = 1111001
        let a = [1, 0, 1, 1, 0, 1, 1];
        let b = [1, 1, 1, 1, 0, 0, 1];
        let want: Vec<u8> = a.iter().zip(&b).flat_map(|(&x, &y)| [x, y]).collect();
        assert_eq!(&c[..14], want.as_slice());
        assert!(c[14..].iter().all(|&x| x == 0));
    }

    #[test]
    fn punctured_lengths_match() {
        let mut rng = stream(0, 0);
        for p in [Puncture::Rate1_2, Puncture::Rate2_3, Puncture::Rate3_4] {
            let spec = ConvCodeSpec::k7().punctured(p);
            for len in [1usize, 2, 5, 17, 240, 481] {
                let info = Bits::random(len, &mut rng);
                let c = conv_encode(&spec, info.as_slice()).unwrap();
                assert_eq!(c.len(), spec.coded_len(len), "{p:?} {len}");
            }
        }
        assert_eq!(ConvCodeSpec::k7().punctured(Puncture::Rate3_4).rate(), 0.75);
        assert!((ConvCodeSpec::k7().punctured(Puncture::Rate2_3).rate() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_codes() {
        let mut s = ConvCodeSpec::k7();
        s.generators[0] = 0;
        assert!(conv_encode(&s, &[1]).is_err());
        let mut s = ConvCodeSpec::k7();
        s.generators[1] = 0o777;
        assert!(s.validate().is_err());
        let mut s = ConvCodeSpec::k7();
        s.puncture = vec![false, false];
        assert!(s.validate().is_err());
        s.constraint_length = 1;
        assert!(s.validate().is_err());
    }

    proptest! {
        #[test]
        fn encoder_is_linear(a in proptest::collection::vec(0u8..2, 1..100), seed in any::<u64>()) {
            let mut rng = stream(seed, 0);
            let b = Bits::random(a.len(), &mut rng);
            let spec = ConvCodeSpec::k7().punctured(Puncture::Rate2_3);
            let sum: Vec<u8> = a.iter().zip(b.as_slice()).map(|(x, y)| x ^ y).collect();
            let ea = conv_encode(&spec, &a).unwrap();
            let eb = conv_encode(&spec, b.as_slice()).unwrap();
            let es = conv_encode(&spec, &sum).unwrap();
            let x: Vec<u8> = ea.iter().zip(&eb).map(|(x, y)| x ^ y).collect();
            prop_assert_eq!(x, es);
        }
    }
}
