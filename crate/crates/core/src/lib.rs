//! Distances between completely positive maps on matrix algebras.
//!
//! The crate computes the cb-norm of a Hermiticity-preserving map and the
//! Bures distance of two completely positive maps, i.e. the smallest
//! operator-norm distance between Stinespring dilations living in a common
//! representation, together with explicit optimal dilations and numerical
//! certificates for the bounds relating the two quantities.

pub mod cpmaps;
pub mod dilations;
pub mod error;
pub mod metrics;
pub mod numerics;
pub mod sdp;

pub use error::{Error, Result};
