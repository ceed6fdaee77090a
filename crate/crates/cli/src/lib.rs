//! Std side of the peanut solver: FFT sine transforms, configuration,
//! file formats and the command line.

pub mod config;
pub mod error;
pub mod fft;
pub mod formats;
pub mod run;

pub use config::RunConfig;
pub use error::CliError;
