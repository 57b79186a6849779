//! Emission spectra of two qubits ultrastrongly coupled to a single cavity
//! mode, computed in the dressed-state picture.
//!
//! Pipeline: [`model`] builds and diagonalizes the two-qubit Rabi Hamiltonian;
//! [`dissipation`] turns the dressed basis into relaxation rates, a driven
//! few-level model and its Liouvillian; [`spectrum`] solves for the steady
//! state and the incoherent emission spectrum; [`analytic`] provides the
//! closed-form Lorentzian decomposition used to interpret it. [`cli`] wires
//! all of it to figure-oriented subcommands.
//!
//! Units: every frequency and rate is in units of the qubit frequency `ω_q`
//! unless a name says otherwise. [`OMEGA_A`] is the display unit `10⁻³ ω_q`.

// `!(x > 0.0)` is used deliberately so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod dissipation;
pub mod error;
pub mod linalg;
pub mod model;
pub mod parallel;
pub mod spectrum;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, C64};
pub use parallel::ExecMode;

/// Display unit `ω_a = 10⁻³ ω_q`.
pub const OMEGA_A: f64 = 1e-3;
