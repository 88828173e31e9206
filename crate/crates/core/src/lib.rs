//! Pseudo-spectral simulator for perturbations `w` of the Stokes wave
//! `u = e^{it}(1 + w)` of the focusing cubic Schrödinger equation.

pub mod breathers;
pub mod checkpoint;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod nonlinearity;
pub mod plot;
pub mod propagator;
pub mod quadrature;
pub mod random;
pub mod solver;
pub mod symbols;

pub use error::{Error, Result};
pub use grid::{Grid1D, PerturbationField, SpectralField};
