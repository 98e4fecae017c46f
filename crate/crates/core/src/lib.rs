//! Numerics for the finite-dimensional Kalton–Peck twisted sum.
//!
//! The space is ℝⁿ × ℝⁿ with the quasi-norm `‖b‖₂ + ‖a − F(b)‖₂`. The crate
//! evaluates that quasi-norm and its quasi-linear map ([`space`]), works with
//! block-diagonal ("split") operators ([`split`]), bounds operator norms from
//! both sides ([`opnorm`]), builds 1-summing and trace-duality witnesses for
//! the identity into ℓ₂ and ℓ∞ ([`summing`]), estimates Haar averages of
//! operator norms over compact groups ([`asymmetry`]), and provides brute-force
//! references for all of the above at tiny dimensions ([`oracles`]).

pub mod asymmetry;
pub mod error;
pub mod linear;
pub mod opnorm;
pub mod oracles;
pub mod seeding;
pub mod space;
pub mod split;
pub mod summing;
pub mod synth;

pub use error::{Error, Result};
pub use linear::{DenseOperator, LinearMap, SignedPermutation};
pub use opnorm::{Direction, NormEstimate};
pub use space::{f_map, kp_norm, TwistedVector};
pub use split::{Block, SplitOperator};
