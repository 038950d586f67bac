//! Numerical laboratory for the perturbed sine-Gordon equation
//! `ε u_xxt + c² u_xx − u_tt − a u_t = sin u + γ`.
//!
//! Travelling waves of the unperturbed (`ε = 0`) equation, the fundamental
//! solution of the third-order operator, a Volterra fixed-point solver for
//! the remainder `u − w`, boundary-layer estimates, and an independent
//! finite-difference solver used as a cross-check.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod config;
pub mod error;
pub mod estimates;
pub mod fd;
pub mod kernel;
pub mod model;
pub mod quad;
pub mod specfun;
pub mod table;
pub mod volterra;
pub mod waves;

pub use error::{PsgeError, Result};
