//! Split-step simulation of Gross–Neveu and massive Thirring solitons, together with
//! independent predictions of the numerical instabilities these schemes develop.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`]: periodic grid, the unnormalised DFT convention and free propagators.
//! * [`models`]: analytic solitons, variable changes and linearisation potentials.
//! * [`integrators`]: split-step and pseudo-spectral RK4 time steppers and the run driver.
//! * [`diagnostics`]: band tracking, growth-rate fits, resonant wavenumbers.
//! * [`edge`]: the Toeplitz/Hankel eigenproblem for modes at the spectral-window edges.
//! * [`monodromy`]: the 2×2 periodic "noise floor" ODE and its fundamental matrix.
//! * [`harness`]: scenario files, persisted outputs and cross-validation.
//!
//! Sweeps fan out over [`par`], which uses rayon when the `parallel` feature is on.

pub mod diagnostics;
pub mod edge;
mod error;
pub mod harness;
pub mod integrators;
pub mod mat2;
pub mod models;
pub mod monodromy;
pub mod par;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Crate version recorded in every manifest.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
