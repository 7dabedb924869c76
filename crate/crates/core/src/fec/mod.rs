//! Finite-length physical layer: the K=7 (133, 171) convolutional code
//! with optional puncturing, BPSK/QPSK over coherent block fading, soft
//! Viterbi decoding, and an eavesdropper aided by a Genie that repairs a
//! bounded number of symbol errors.

use thiserror::Error;

pub mod conv;
pub mod experiment;
pub mod link;
pub mod viterbi;

pub use conv::{conv_encode, ConvCodeSpec, Puncture};
pub use experiment::{
    estimate_scheme_point, fig4_experiment, is_unimodal, required_parts, ExperimentConfig,
    SchemePoint, MIN_TRIALS,
};
pub use link::{simulate_link, GenieMode, Link, LinkConfig, LinkOutcome, Modulation, PacketSpec};
pub use viterbi::{DecisionMode, ViterbiDecoder};

#[derive(Debug, Error, PartialEq)]
pub enum FecError {
    #[error("invalid code: {0}")]
    Code(String),
    #[error("expected {expected} soft values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("unknown scheme {0:?}; expected e.g. coded-bpsk-240")]
    Scheme(String),
    #[error("{got} trials per point is below the minimum of {min}")]
    TooFewTrials { got: u64, min: u64 },
    #[error("{0}")]
    Config(String),
}
