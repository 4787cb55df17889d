//! Discrete potential theory for the fine regularity of Lipschitz boundary
//! points with respect to Schrödinger operators `Δ − V`.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is pure
//! computation: geometry of planar Lipschitz domains, finite-difference
//! assembly of divergence-form operators, discrete Green and Martin kernels,
//! obstacle problems (réduites), dyadic-shell regularity criteria and a
//! conditioned lattice walk used as an independent cross-check. File formats
//! and the command line live in the `finereg` crate.

#![no_std]
#![forbid(unsafe_code)]
// NaN must fail these range checks, and the kernels index several arrays in step.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod geometry;
pub mod greens;
pub mod kernels;
pub mod math;
pub mod operator;
pub mod reduite;
pub mod regularity;
pub mod stochastic;

pub use error::{Error, Result};
pub use geometry::{BoundaryPoint, ConeSpec, DomainSpec, Point};
pub use operator::{
    Coefficients, DiscreteProblem, EllipticOperator, Field, GridDomain, Mode, PotentialSpec,
};
