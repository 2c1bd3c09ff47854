//! Physics-aware decoding of binary linear codes over channels governed by
//! partial differential equations.
//!
//! A codeword is shaped into Gaussian pulses, propagated through a
//! differentiable solver ([`heat`] or [`nlse`]), and observed at sensor grid
//! points under Gaussian noise ([`channel`]). The gradient-flow decoder
//! ([`decoder`]) descends the sum of the sensor-space squared error and the
//! code potential energy ([`potential`]) using gradients returned by the
//! solver itself. [`bench`] drives Monte-Carlo BER sweeps against peak
//! detection, digital backpropagation and an exhaustive ML oracle.

pub mod bench;
pub mod channel;
pub mod codes;
pub mod decoder;
pub mod gradcheck;
pub mod heat;
pub mod medium;
pub mod nlse;
pub mod potential;
pub mod rng;

use thiserror::Error;

pub use channel::{ChannelLayout, Observation, SensorPlacement};
pub use codes::{Codebook, ParityCheckMatrix};
pub use decoder::{DecodeResult, GfDecoderParams, InitMode};
pub use heat::{HeatGrid, HeatGridParams};
pub use medium::{Medium, Sample};
pub use nlse::{NlseGrid, NlseGridParams};
pub use potential::PotentialParams;

#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Code(#[from] codes::CodeError),
    #[error(transparent)]
    Potential(#[from] potential::PotentialError),
    #[error(transparent)]
    Heat(#[from] heat::HeatError),
    #[error(transparent)]
    Nlse(#[from] nlse::NlseError),
    #[error(transparent)]
    Channel(#[from] channel::ChannelError),
    #[error(transparent)]
    Decode(#[from] decoder::DecodeError),
    #[error("config: {0}")]
    Config(String),
}
