use alloc::string::String;
use core::fmt;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Grid too small or with degenerate extents.
    InvalidGrid(String),
    /// Two fields defined on different grids were combined.
    GridMismatch,
    /// A parameter lies outside its admissible range.
    Domain(String),
    /// A vortex seed was placed outside the condensate region.
    SeedOutsideDomain { x: f64, y: f64 },
    /// The seed must be loaded by the caller (file-backed seeds).
    ExternalSeed(String),
    /// The field carries no mass.
    ZeroField,
    /// Euclidean endpoints are not degenerate, so the regularized action is undefined.
    EndpointMismatch { left: f64, right: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
            Error::GridMismatch => f.write_str("fields live on different grids"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::SeedOutsideDomain { x, y } => {
                write!(f, "vortex seed at ({x}, {y}) lies outside the condensate mask")
            }
            Error::ExternalSeed(path) => write!(f, "seed `{path}` must be loaded by the caller"),
            Error::ZeroField => f.write_str("field has zero norm"),
            Error::EndpointMismatch { left, right } => write!(
                f,
                "endpoint energies differ ({left} vs {right}); regularized action undefined"
            ),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

impl core::error::Error for Error {}
