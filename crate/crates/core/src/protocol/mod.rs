//! The ARQ key exchange, frame by frame.
//!
//! Alice draws a fresh random payload for every transmission. Bob ACKs iff
//! his block supports the rate, and a NACKed payload is thrown away and
//! never resent. Eve overhears every frame and every feedback bit, but
//! only ACKed payloads ever become key parts. The exchange ends after `k`
//! ACKs; the key is the concatenation of the ACKed payloads, and
//! [`crate::coset::distill`] compresses it to one part's width.
//!
//! The PHY is the idealized one from [`crate::fading`]: perfect error
//! detection and a decoding threshold of `log2(1 + hP)`.

mod actors;
pub mod trace_io;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::OperatingPoint;
use crate::bits::Bits;
use crate::coset::KeyParts;
use crate::fading::{sample_block, BlockGains, ChannelSpec};
use crate::rng::stream;

pub use actors::{Alice, Bob, Eve, Feedback};

pub const DEFAULT_PAYLOAD_BITS: usize = 128;
/// Default cap on transmissions, as a multiple of `k`.
pub const DEFAULT_FRAMES_PER_PART: u64 = 1000;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid protocol parameters: {0}")]
    Params(String),
    #[error("exchange stopped after {} frames with {} of {k} parts acknowledged", .trace.frames.len(), .trace.acked_indices.len())]
    Incomplete { k: u32, trace: Box<ExchangeTrace> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub point: OperatingPoint,
    /// Key-part bits per frame.
    pub payload_bits: usize,
    /// Transmissions allowed before the exchange is abandoned.
    pub max_frames: u64,
    pub seed: u64,
}

impl ProtocolParams {
    pub fn new(point: OperatingPoint, seed: u64) -> Self {
        Self {
            point,
            payload_bits: DEFAULT_PAYLOAD_BITS,
            max_frames: DEFAULT_FRAMES_PER_PART * u64::from(point.k),
            seed,
        }
    }

    pub fn with_payload_bits(mut self, bits: usize) -> Self {
        self.payload_bits = bits;
        self
    }

    pub fn with_max_frames(mut self, frames: u64) -> Self {
        self.max_frames = frames;
        self
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.payload_bits == 0 {
            return Err(ProtocolError::Params(
                "payload_bits must be at least 1".into(),
            ));
        }
        if self.max_frames < u64::from(self.point.k) {
            return Err(ProtocolError::Params(format!(
                "max_frames {} is below k = {}",
                self.max_frames, self.point.k
            )));
        }
        OperatingPoint::new(self.point.r0, self.point.rc, self.point.power, self.point.k)
            .map_err(|e| ProtocolError::Params(e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    /// Transmission ordinal within the exchange, from 0.
    pub index: u64,
    pub gains: BlockGains,
    pub payload: Bits,
    pub bob_acked: bool,
    /// Eve decoded the frame (it was not erased at her side).
    pub eve_intercepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeTrace {
    pub frames: Vec<FrameRecord>,
    pub acked_indices: Vec<u64>,
    pub key_alice: Bits,
    pub key_bob: Bits,
    /// Eve holds every ACKed part.
    pub eve_full_intercept: bool,
}

impl ExchangeTrace {
    /// Rebuilds the derived fields from the frame list, taking Bob's copy
    /// of each ACKed payload to be exact.
    pub fn from_frames(frames: Vec<FrameRecord>) -> Self {
        let acked: Vec<&FrameRecord> = frames.iter().filter(|f| f.bob_acked).collect();
        let key = Bits::concat(acked.iter().map(|f| &f.payload));
        let acked_indices = acked.iter().map(|f| f.index).collect();
        let eve_full_intercept = full_intercept(&frames);
        Self {
            acked_indices,
            key_alice: key.clone(),
            key_bob: key,
            eve_full_intercept,
            frames,
        }
    }

    /// Whether Eve holds every ACKed part, recomputed from the frames.
    /// NACKed frames do not enter.
    pub fn derive_full_intercept(&self) -> bool {
        full_intercept(&self.frames)
    }

    pub fn acked_frames(&self) -> impl Iterator<Item = &FrameRecord> {
        self.frames.iter().filter(|f| f.bob_acked)
    }

    /// Key parts as Eve sees them: the ACKed payloads, with those she
    /// failed to decode marked erased.
    pub fn eve_view(&self) -> KeyParts {
        let (parts, erased) = self
            .acked_frames()
            .map(|f| (f.payload.clone(), !f.eve_intercepted))
            .unzip();
        KeyParts { parts, erased }
    }

    /// Bob's key split back into per-frame parts.
    pub fn bob_parts(&self, payload_bits: usize) -> Vec<Bits> {
        self.key_bob.chunks(payload_bits).collect()
    }

    pub fn alice_parts(&self, payload_bits: usize) -> Vec<Bits> {
        self.key_alice.chunks(payload_bits).collect()
    }
}

fn full_intercept(frames: &[FrameRecord]) -> bool {
    frames
        .iter()
        .filter(|f| f.bob_acked)
        .all(|f| f.eve_intercepted)
}

/// Runs one exchange. `spec` supplies the gain statistics; the decoding
/// thresholds use `params.point` (rate, side information and power).
pub fn run_exchange<R: Rng + ?Sized>(
    params: &ProtocolParams,
    spec: &ChannelSpec,
    rng: &mut R,
) -> Result<ExchangeTrace, ProtocolError> {
    params.validate()?;
    let pt = params.point;
    let mut alice = Alice::new(pt.k);
    let mut bob = Bob::new(pt.r0, pt.power);
    let mut eve = Eve::new(pt.r0, pt.rc, pt.power);
    let mut frames = Vec::new();

    while !alice.done() && (frames.len() as u64) < params.max_frames {
        let gains = sample_block(spec, rng);
        let payload = alice.next_frame(params.payload_bits, rng);
        let heard = eve.overhear(&payload, gains.h_e);
        let feedback = bob.receive(&payload, gains.h_b);
        alice.on_feedback(feedback);
        eve.on_feedback(feedback);
        frames.push(FrameRecord {
            index: frames.len() as u64,
            gains,
            payload,
            bob_acked: feedback == Feedback::Ack,
            eve_intercepted: heard,
        });
    }

    let eve_full_intercept = eve.holds_all();
    let trace = ExchangeTrace {
        acked_indices: frames
            .iter()
            .filter(|f| f.bob_acked)
            .map(|f| f.index)
            .collect(),
        key_alice: alice.key(),
        key_bob: bob.key(),
        eve_full_intercept,
        frames,
    };
    debug_assert_eq!(trace.eve_full_intercept, trace.derive_full_intercept());
    if alice.done() {
        Ok(trace)
    } else {
        Err(ProtocolError::Incomplete {
            k: pt.k,
            trace: Box::new(trace),
        })
    }
}

/// What the estimators keep from each exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExchangeSummary {
    pub completed: bool,
    pub frames: u64,
    pub full_intercept: bool,
    pub keys_agree: bool,
}

impl ExchangeSummary {
    pub fn of(trace: &ExchangeTrace, completed: bool) -> Self {
        Self {
            completed,
            frames: trace.frames.len() as u64,
            full_intercept: completed && trace.eve_full_intercept,
            keys_agree: trace.key_alice == trace.key_bob,
        }
    }
}

/// Aggregates over many independent exchanges. Exchange `i` uses
/// `stream(params.seed, i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExchangeStats {
    pub exchanges: u64,
    pub completed: u64,
    pub incomplete: u64,
    /// Completed exchanges in which Alice's and Bob's keys differ.
    pub key_mismatches: u64,
    /// Fraction of completed exchanges in which Eve held every part.
    pub outage: f64,
    pub outage_std_err: f64,
    /// Key bits per channel use over all completed exchanges,
    /// `r0 · completed / (total frames)`.
    pub throughput: f64,
    pub throughput_std_err: f64,
    /// Mean transmissions per completed exchange.
    pub mean_frames: f64,
    pub mean_frames_std_err: f64,
}

pub fn simulate_exchanges(
    params: &ProtocolParams,
    spec: &ChannelSpec,
    exchanges: u64,
) -> Result<ExchangeStats, ProtocolError> {
    check_count(params, exchanges)?;
    let summaries: Vec<ExchangeSummary> = (0..exchanges)
        .into_par_iter()
        .map(|i| {
            let run = run_indexed(params, spec, i);
            ExchangeSummary::of(&run.trace, run.completed)
        })
        .collect();
    Ok(stats_from_summaries(params, &summaries))
}

/// One exchange with its full trace; `completed` is false when it hit
/// `max_frames`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeRun {
    pub trace: ExchangeTrace,
    pub completed: bool,
}

fn check_count(params: &ProtocolParams, exchanges: u64) -> Result<(), ProtocolError> {
    params.validate()?;
    if exchanges == 0 {
        return Err(ProtocolError::Params("exchanges must be at least 1".into()));
    }
    Ok(())
}

fn run_indexed(params: &ProtocolParams, spec: &ChannelSpec, i: u64) -> ExchangeRun {
    match run_exchange(params, spec, &mut stream(params.seed, i)) {
        Ok(trace) => ExchangeRun {
            trace,
            completed: true,
        },
        Err(ProtocolError::Incomplete { trace, .. }) => ExchangeRun {
            trace: *trace,
            completed: false,
        },
        Err(e) => unreachable!("parameters were validated: {e}"),
    }
}

/// Exchanges `indices` with their traces, in index order. Exchange `i` is
/// the same as the `i`-th one [`simulate_exchanges`] runs.
pub fn run_exchanges(
    params: &ProtocolParams,
    spec: &ChannelSpec,
    indices: std::ops::Range<u64>,
) -> Result<Vec<ExchangeRun>, ProtocolError> {
    params.validate()?;
    Ok(indices
        .into_par_iter()
        .map(|i| run_indexed(params, spec, i))
        .collect())
}

/// The statistics [`simulate_exchanges`] would report for these runs.
pub fn stats_from_runs(params: &ProtocolParams, runs: &[ExchangeRun]) -> ExchangeStats {
    let summaries: Vec<ExchangeSummary> = runs
        .iter()
        .map(|r| ExchangeSummary::of(&r.trace, r.completed))
        .collect();
    stats_from_summaries(params, &summaries)
}

pub fn stats_from_summaries(
    params: &ProtocolParams,
    summaries: &[ExchangeSummary],
) -> ExchangeStats {
    aggregate(params, summaries.len() as u64, summaries)
}

fn aggregate(
    params: &ProtocolParams,
    exchanges: u64,
    summaries: &[ExchangeSummary],
) -> ExchangeStats {
    let done: Vec<&ExchangeSummary> = summaries.iter().filter(|s| s.completed).collect();
    let n = done.len() as u64;
    let nf = n as f64;
    let intercepts = done.iter().filter(|s| s.full_intercept).count() as f64;
    let total_frames: u64 = done.iter().map(|s| s.frames).sum();
    let sum_sq: f64 = done.iter().map(|s| (s.frames as f64).powi(2)).sum();

    let (outage, outage_std_err, mean_frames, mean_frames_std_err) = if n == 0 {
        (0.0, f64::INFINITY, f64::NAN, f64::INFINITY)
    } else {
        let q = intercepts / nf;
        let mean = total_frames as f64 / nf;
        let var = if n > 1 {
            ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
        } else {
            f64::INFINITY
        };
        (q, (q * (1.0 - q) / nf).sqrt(), mean, (var / nf).sqrt())
    };
    let (throughput, throughput_std_err) = if n == 0 {
        (0.0, f64::INFINITY)
    } else {
        // Ratio of totals; delta-method error through the mean frame count.
        let r = params.point.r0 / mean_frames;
        (r, r * mean_frames_std_err / mean_frames)
    };
    ExchangeStats {
        exchanges,
        completed: n,
        incomplete: exchanges - n,
        key_mismatches: done.iter().filter(|s| !s.keys_agree).count() as u64,
        outage,
        outage_std_err,
        throughput,
        throughput_std_err,
        mean_frames,
        mean_frames_std_err,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageEstimate {
    pub probability: f64,
    pub std_err: f64,
    pub completed: u64,
    /// Exchanges that hit `max_frames`; they are excluded from the estimate.
    pub incomplete: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputEstimate {
    /// Key bits per channel use.
    pub rate: f64,
    pub std_err: f64,
    pub completed: u64,
    pub incomplete: u64,
}

/// Empirical probability that Eve ends up holding all `k` parts.
pub fn estimate_outage(
    params: &ProtocolParams,
    spec: &ChannelSpec,
    exchanges: u64,
) -> Result<OutageEstimate, ProtocolError> {
    let s = simulate_exchanges(params, spec, exchanges)?;
    Ok(OutageEstimate {
        probability: s.outage,
        std_err: s.outage_std_err,
        completed: s.completed,
        incomplete: s.incomplete,
    })
}

/// Empirical key rate: one distilled `r0`-bit-per-slot key per exchange,
/// divided by the frames it took (ratio of totals over exchanges).
pub fn estimate_key_throughput(
    params: &ProtocolParams,
    spec: &ChannelSpec,
    exchanges: u64,
) -> Result<ThroughputEstimate, ProtocolError> {
    let s = simulate_exchanges(params, spec, exchanges)?;
    Ok(ThroughputEstimate {
        rate: s.throughput,
        std_err: s.throughput_std_err,
        completed: s.completed,
        incomplete: s.incomplete,
    })
}
