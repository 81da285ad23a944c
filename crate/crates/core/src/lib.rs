//! Ray transform of symmetric tensor fields in the plane.
//!
//! The crate samples rank-m symmetric tensor fields on a square grid,
//! integrates them along lines to produce sinograms, and provides the
//! spectral tools to verify the Fourier slice relations, evaluate weighted
//! Sobolev norms on both sides of the transform, and invert it on solenoidal
//! fields.

pub mod error;
pub mod grid;
pub mod plan;
pub mod range;
pub mod ray;
pub mod slice;
pub mod sobolev;
pub mod tensor;

pub use error::{Error, Result};
