//! Measures of representational compositionality.
//!
//! * [`lookup`] and [`grammar`] generate synthetic `(W, Z)` pairs from known
//!   programs and score them exactly with closed-form code lengths.
//! * [`prequential`] estimates `K(Z|W)` for arbitrary datasets by prequential
//!   coding with the small network in [`nn`].
//! * [`metrics`] turns code lengths into `C(Z)` and `C^L(Z)` and provides the
//!   topological-similarity baseline.
//! * [`langsys`] builds attribute-value language systems and [`dataset`]
//!   reads and writes the line-delimited dataset format.

pub mod codelen;
pub mod dataset;
pub mod error;
pub mod grammar;
pub mod langsys;
pub mod lookup;
pub mod metrics;
pub mod nn;
pub mod prequential;
pub mod rng;
pub mod tokens;

pub use codelen::{Lattice, QuantizedMatrix, SkellamParams};
pub use error::{Error, Result};
pub use metrics::{compositionality, language_compositionality, ComplexityBreakdown, DistanceConfig};
pub use tokens::TokenMatrix;
