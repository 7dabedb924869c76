//! Simulation and analysis of ARQ-based secret key sharing over
//! block-fading wiretap channels.
//!
//! Alice sends frames of fresh random bits at a fixed rate over a
//! Rayleigh block-fading channel. Bob answers each frame with a public
//! ACK/NACK bit, and only ACKed frames become key material. A passive
//! eavesdropper (Eve) sees every frame through her own independent
//! fading channel but learns nothing from frames Bob discarded, which is
//! what lets the legitimate pair hold a positive secret-key rate even when
//! Eve's average SNR is the better one.
//!
//! The crate is split by concern:
//!
//! * [`fading`]: gain sampling and the mutual-information thresholds that
//!   stand in for a capacity-achieving inner code.
//! * [`analysis`]: closed-form secrecy rates, outage, expected
//!   transmissions and key rate, their optimizers, and Monte Carlo
//!   cross-checks.
//! * [`protocol`]: the Alice/Bob/Eve exchange as a frame-by-frame
//!   simulation with auditable traces.
//! * [`coset`]: XOR (parity-check syndrome) key distillation and exact
//!   posterior counting of what Eve can infer.
//! * [`fec`]: a finite-length PHY with the K=7 (133, 171) convolutional
//!   code, BPSK/QPSK, Viterbi decoding and a Genie-aided Eve.

#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod analysis;
pub mod bits;
pub mod coset;
pub mod fading;
pub mod fec;
pub mod protocol;
pub mod rng;

pub use analysis::{OperatingPoint, Optimum, RateReport};
pub use bits::Bits;
pub use fading::{BlockGains, ChannelSpec};
pub use fec::{ConvCodeSpec, LinkOutcome, PacketSpec};
pub use protocol::{ExchangeTrace, FrameRecord, ProtocolParams};

/// Converts an SNR in decibels to a linear power (unit noise variance).
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power to decibels.
pub fn linear_to_db(p: f64) -> f64 {
    10.0 * p.log10()
}
