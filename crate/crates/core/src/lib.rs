//! Solver and verification toolkit for nonlocal-in-time degenerate diffusion
//! `d/dt (k * [u - u0]) - (a(t,x) phi(u)_x)_x = f` on an interval with
//! homogeneous Dirichlet conditions.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod kernels;
pub mod nonlocal;
pub mod quad;
pub mod report;
pub mod solver;
pub mod spatial;
pub mod verify;

pub use error::{Error, Result};
