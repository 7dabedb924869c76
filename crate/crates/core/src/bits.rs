//! Fixed-width bit strings used for frame payloads and keys.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BitsError {
    #[error("width mismatch: {left} vs {right} bits")]
    WidthMismatch { left: usize, right: usize },
    #[error("invalid hex payload {0:?}")]
    InvalidHex(String),
    #[error("hex payload {hex:?} does not encode exactly {width} bits")]
    HexWidth { hex: String, width: usize },
    #[error("bit string {0:?} contains characters other than 0 and 1")]
    InvalidBinary(String),
}

/// A bit string stored one bit per byte (each byte is 0 or 1).
/// Serializes as a string of `0`/`1` characters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Bits(Vec<u8>);

impl Bits {
    pub fn zeros(width: usize) -> Self {
        Bits(vec![0; width])
    }

    /// Builds from 0/1 values; any nonzero byte counts as 1.
    pub fn from_slice(bits: &[u8]) -> Self {
        Bits(bits.iter().map(|&b| u8::from(b != 0)).collect())
    }

    /// Uniformly random bits, drawn 64 at a time from `rng`.
    pub fn random<R: Rng + ?Sized>(width: usize, rng: &mut R) -> Self {
        let mut out = Vec::with_capacity(width);
        while out.len() < width {
            let word: u64 = rng.random();
            let take = (width - out.len()).min(64);
            out.extend((0..take).map(|i| ((word >> i) & 1) as u8));
        }
        Bits(out)
    }

    /// The low `width` bits of `value`, most significant first.
    pub fn from_index(value: u64, width: usize) -> Self {
        Bits((0..width).rev().map(|i| ((value >> i) & 1) as u8).collect())
    }

    /// Reads the bits as an unsigned integer, most significant first.
    /// Only meaningful for widths up to 64.
    pub fn to_index(&self) -> u64 {
        self.0
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i] != 0
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] ^= 1;
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b != 0).count()
    }

    pub fn xor_assign(&mut self, other: &Bits) -> Result<(), BitsError> {
        if self.len() != other.len() {
            return Err(BitsError::WidthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a ^= b;
        }
        Ok(())
    }

    /// Concatenation of `parts` in order.
    pub fn concat<'a, I: IntoIterator<Item = &'a Bits>>(parts: I) -> Bits {
        Bits(
            parts
                .into_iter()
                .flat_map(|p| p.0.iter().copied())
                .collect(),
        )
    }

    /// Splits into consecutive chunks of `width` bits; the last chunk may be short.
    pub fn chunks(&self, width: usize) -> impl Iterator<Item = Bits> + '_ {
        self.0.chunks(width.max(1)).map(|c| Bits(c.to_vec()))
    }

    /// Lowercase hex, most significant bit first; a trailing partial nibble
    /// is padded with zero bits on the right.
    pub fn to_hex(&self) -> String {
        self.0
            .chunks(4)
            .map(|nib| {
                let v = nib
                    .iter()
                    .chain(std::iter::repeat(&0))
                    .take(4)
                    .fold(0u32, |acc, &b| (acc << 1) | u32::from(b));
                char::from_digit(v, 16).expect("nibble < 16")
            })
            .collect()
    }

    /// Inverse of [`Bits::to_hex`]. The padding bits must be zero.
    pub fn from_hex(hex: &str, width: usize) -> Result<Bits, BitsError> {
        if hex.len() != width.div_ceil(4) {
            return Err(BitsError::HexWidth {
                hex: hex.to_string(),
                width,
            });
        }
        let mut out = Vec::with_capacity(hex.len() * 4);
        for c in hex.chars() {
            let v = c
                .to_digit(16)
                .ok_or_else(|| BitsError::InvalidHex(hex.to_string()))?;
            out.extend((0..4).rev().map(|i| ((v >> i) & 1) as u8));
        }
        if out[width..].iter().any(|&b| b != 0) {
            return Err(BitsError::HexWidth {
                hex: hex.to_string(),
                width,
            });
        }
        out.truncate(width);
        Ok(Bits(out))
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl From<Bits> for String {
    fn from(b: Bits) -> Self {
        b.to_string()
    }
}

impl TryFrom<String> for Bits {
    type Error = BitsError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.bytes()
            .map(|c| match c {
                b'0' => Ok(0),
                b'1' => Ok(1),
                _ => Err(BitsError::InvalidBinary(s.clone())),
            })
            .collect::<Result<Vec<u8>, _>>()
            .map(Bits)
    }
}

impl From<Vec<bool>> for Bits {
    fn from(v: Vec<bool>) -> Self {
        Bits(v.into_iter().map(u8::from).collect())
    }
}
