use serde::{Deserialize, Serialize};

use super::conv::ConvCodeSpec;
use super::FecError;

/// How received soft values enter the branch metric.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecisionMode {
    /// Correlation with the soft values.
    #[default]
    Soft,
    /// Correlation with their signs only.
    Hard,
}

/// Maximum-likelihood sequence decoder over the zero-terminated trellis.
///
/// Soft inputs follow the LLR convention: positive favours bit 0. Punctured
/// positions are re-inserted as zeros.
#[derive(Debug, Clone)]
pub struct ViterbiDecoder {
    spec: ConvCodeSpec,
    mode: DecisionMode,
    /// `outputs[reg]` packs the two coded bits for register contents `reg`.
    outputs: Vec<u8>,
}

impl ViterbiDecoder {
    pub fn new(spec: ConvCodeSpec, mode: DecisionMode) -> Result<Self, FecError> {
        spec.validate()?;
        let regs = 1u32 << spec.constraint_length;
        let outputs = (0..regs)
            .map(|r| {
                let [a, b] = spec.outputs(r);
                a << 1 | b
            })
            .collect();
        Ok(Self {
            spec,
            mode,
            outputs,
        })
    }

    pub fn spec(&self) -> &ConvCodeSpec {
        &self.spec
    }

    /// Decodes `info_len` bits from the punctured soft sequence.
    pub fn decode(&self, soft: &[f64], info_len: usize) -> Result<Vec<u8>, FecError> {
        let want = self.spec.coded_len(info_len);
        if soft.len() != want {
            return Err(FecError::Length {
                expected: want,
                got: soft.len(),
            });
        }
        let mother = self.depuncture(soft, info_len);
        let k = self.spec.constraint_length;
        let states = self.spec.states();
        let steps = info_len + k as usize - 1;
        let top = k as usize - 1;

        let mut metric = vec![f64::NEG_INFINITY; states];
        metric[0] = 0.0;
        let mut next = vec![f64::NEG_INFINITY; states];
        // Low bit of the surviving predecessor of every state, per step.
        let mut back = vec![0u8; steps * states];

        for t in 0..steps {
            let (y0, y1) = (mother[2 * t], mother[2 * t + 1]);
            // Correlation of (y0, y1) with the antipodal image of each output pair.
            let bm = [y0 + y1, y0 - y1, -y0 + y1, -y0 - y1];
            // Flush steps only admit input 0, i.e. states with a clear top bit.
            let live = if t < info_len { states } else { states / 2 };
            let row = &mut back[t * states..(t + 1) * states];
            for ns in 0..live {
                let reg = ns << 1;
                let a = metric[reg & (states - 1)] + bm[self.outputs[reg] as usize];
                let b = metric[(reg | 1) & (states - 1)] + bm[self.outputs[reg | 1] as usize];
                if b > a {
                    next[ns] = b;
                    row[ns] = 1;
                } else {
                    next[ns] = a;
                    row[ns] = 0;
                }
            }
            next[live..].fill(f64::NEG_INFINITY);
            std::mem::swap(&mut metric, &mut next);
        }

        let mut bits = vec![0u8; steps];
        let mut state = 0usize;
        for t in (0..steps).rev() {
            bits[t] = (state >> (top - 1)) as u8 & 1;
            state = ((state << 1) | back[t * states + state] as usize) & (states - 1);
        }
        bits.truncate(info_len);
        Ok(bits)
    }

    fn depuncture(&self, soft: &[f64], info_len: usize) -> Vec<f64> {
        let m = self.spec.mother_len(info_len);
        let mut out = vec![0.0; m];
        let mut src = soft.iter();
        for (slot, &keep) in out.iter_mut().zip(self.spec.puncture.iter().cycle()) {
            if keep {
                let y = *src.next().expect("length checked");
                *slot = match self.mode {
                    DecisionMode::Soft => y,
                    DecisionMode::Hard => sign(y),
                };
            }
        }
        out
    }
}

fn sign(y: f64) -> f64 {
    if y > 0.0 {
        1.0
    } else if y < 0.0 {
        -1.0
    } else {
        0.0
    }
}
