//! Ground states of a rotating two-dimensional condensate in double-well
//! traps, their vortex content, and the Euclidean (imaginary-time) path
//! joining two mirror-image ground states.
//!
//! The crate is `no_std` with `alloc`; file formats and the command line live
//! in the companion `peanut` crate.

#![no_std]

extern crate alloc;

pub mod dirichlet;
pub mod energy;
pub mod error;
pub mod euclidean;
pub mod grid;
pub mod potentials;
pub mod solver;
pub mod timescales;
pub mod units;
pub mod vortex;

pub use energy::{Confinement, EnergyBreakdown, GpFunctional, PotentialSign, Residual};
pub use error::{Error, Result};
pub use grid::{ComplexField2D, Grid2D};
pub use potentials::PotentialSpec;
