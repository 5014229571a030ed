//! Volume-frozen bond percolation on Z²: the freezing dynamics, static
//! percolation tools, Monte Carlo estimators, exceptional scales and the
//! experiment harness behind the `glacier` CLI.
//!
//! Times and the reference curve are generic over [`Scalar`]; the aliases
//! below fix the usual choice.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod experiments;
pub mod frozen;
pub mod lattice;
pub mod percolation;
pub mod scalar;
pub mod scales;
pub mod streams;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Clock assignment with `f64` times.
pub type Clocks = frozen::ClockAssignment<f64>;
/// Clock assignment with `f32` times.
pub type Clocks32 = frozen::ClockAssignment<f32>;
/// Frozen run outcome with `f64` freeze times.
pub type Frozen<'d> = frozen::FrozenState<'d, f64>;
