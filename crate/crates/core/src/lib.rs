#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Ground states of the mass-critical inhomogeneous nonlinear Schrödinger
//! energy
//!
//! ```text
//! E_k(u) = int |grad u|^2 + int k(x) |u|^{2+4/d},   ||u||_2 = 1,
//! ```
//!
//! together with the Gagliardo–Nirenberg optimizer that governs its
//! threshold behaviour and a harness for the blow-up regime `a -> a*`.
//!
//! * [`grid`]: periodic spectral discretization, fields, quadrature, dilations.
//! * [`gn_profile`]: the optimizer `Q`, its normalization `Q0`, the sharp constant `a*`.
//! * [`potential`]: `k = K - a`, flattest minima, regime classification.
//! * [`minimizer`]: normalized gradient flow for `E_k` and variational trial states.
//! * [`blowup`]: sweeps `a -> a*`, power-law fits and profile comparison.
//! * [`io`]: binary and CSV formats for fields, traces and sweep records.

pub mod blowup;
pub mod error;
pub mod gn_profile;
pub mod grid;
pub mod io;
pub mod minimizer;
mod ode;
pub mod potential;

pub use error::{Error, Result};
pub use grid::{Field, Grid};

/// The mass-critical exponent `2 + 4/d`.
pub fn critical_exponent(dim: usize) -> f64 {
    2.0 + 4.0 / dim as f64
}
