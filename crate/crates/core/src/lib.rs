//! Link-level building blocks for uplink sparse code multiple access (SCMA).
//!
//! The crate covers the whole receive chain of an SCMA link simulator:
//!
//! - [`codebook`]: rotated binary-lattice codebooks, mapping matrices and
//!   projection groups (low-number-of-projections codebooks).
//! - [`factor_graph`]: the layer/resource graph.
//! - [`channel`]: Rayleigh/Jakes fading, CSI error, superposition and the
//!   per-resource effective lattice rows.
//! - [`mpa`]: Log-MPA and Max-log-MPA message passing.
//! - [`sphere`]: the regularized complex list sphere decoder.
//! - [`lsd_mpa`]: list-based message passing, node pruning and the detector
//!   variants.
//! - [`coding`]: rate-1/2 turbo code and iterative detection and decoding.
//! - [`metrics`]: operation counts and BER bookkeeping.
//! - [`oracle`]: exhaustive reference computations used for verification.

#![allow(clippy::needless_range_loop)]

pub mod channel;
pub mod codebook;
pub mod coding;
pub mod factor_graph;
pub mod format;
pub mod lsd_mpa;
pub mod metrics;
pub mod mpa;
pub mod oracle;
pub mod sphere;

pub use num_complex::Complex64 as C64;

pub use codebook::{Codebook, CodebookParams, RotationStyle};
pub use factor_graph::FactorGraph;
pub use lsd_mpa::{DecoderKind, DecoderVariant, Detector};
