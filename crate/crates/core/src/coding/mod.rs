//! Channel coding: the rate-1/2 turbo code and the detection/decoding loop.

pub mod idd;
pub mod turbo;

pub use idd::{CodedLink, IddResult};
pub use turbo::{Interleaver, TurboCode, TurboConfig, TurboOutput};

use thiserror::Error;

/// Magnitude bound applied to every LLR crossing the decoder boundary.
pub const LLR_CLIP: f64 = 50.0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodingError {
    #[error("expected {expected} bits, got {got}")]
    Length { expected: usize, got: usize },
    #[error("info block must be non-empty")]
    EmptyBlock,
}

pub(crate) fn clip(l: f64) -> f64 {
    l.clamp(-LLR_CLIP, LLR_CLIP)
}
