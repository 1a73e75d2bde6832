//! Numerical laboratory for a pair of perturbed harmonic oscillators whose
//! semiclassical spectra agree to all orders in `h` while their ground states
//! differ.

pub mod config;
pub mod eigensolve;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod hadamard;
pub mod ode;
pub mod potential;
pub mod pruefer;
pub mod quadrature;
pub mod report;
pub mod traces;
pub mod weber;

pub use error::{Error, Result};
