//! Pseudo-spectral simulation of semilinear stochastic PDEs on periodic
//! tori, with mollified time stepping and Monte Carlo checks of moment
//! bounds, convergence rates and functional inequalities.

pub mod analysis;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod integrator;
pub mod noise;
pub mod spectral;

pub use error::{Error, Result};
pub use hilbert::{apply_semigroup, sobolev_norm, ScaleOperator};
pub use spectral::{Grid, SpectralField};
