//! Fractional-order operators and the optimization problems built on them.
//!
//! The crate covers the Caputo L1 time scheme, a 1D finite-element
//! discretization of the integral fractional Laplacian with exterior data,
//! exterior and state-constrained optimal control, spectral fractional
//! denoising on periodic grids, and fractional deep networks.

pub mod caputo;
pub mod control;
pub mod error;
pub mod fdnn;
pub mod fraclap1d;
pub mod io;
pub mod optim;
pub mod quad;
pub mod rng;
pub mod specialfn;
pub mod spectral_denoise;

pub use error::{Error, Result};
pub use specialfn::{FracOrder, TimeOrder};
