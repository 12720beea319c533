//! Numerics for spike-ring solutions of `-Δu + V(x) u = |u|^{p-1} u`.
//!
//! The crate computes the radial ground state and its constants, solves the
//! balance equation fixing the ring radius, and works with the reduced
//! finite-dimensional problem for the spike positions: the discrete linear
//! operator, its continuum limit, and the reduced energy.

// `!(x > 0.0)` deliberately treats NaN as a failed check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod balance;
pub mod configuration;
pub mod continuum;
pub mod dft;
pub mod energy;
pub mod error;
pub mod groundstate;
pub mod io;
pub mod ode;
pub mod potential;
pub mod quadrature;
pub mod reduced_linear;

pub use error::{Error, Result};
