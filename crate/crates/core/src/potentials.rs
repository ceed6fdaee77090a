//! Trap geometries. Every family uses the same sign convention: the condensate
//! occupies the region where `V > 0`, and the normalization mass is `∫ V⁺`.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::Grid2D;

/// Default square side of the two-squares-and-channel trap.
pub const DEFAULT_SQUARE_SIDE: f64 = 0.24;
/// Default distance of each square centre from the origin.
pub const DEFAULT_SQUARE_OFFSET: f64 = 0.18;

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    /// `V = b⁴ + 4a²x² − (x² + y² + a²)²`, foci at `(±a, 0)`.
    Cassini { a: f64, b: f64 },
    /// Two squares centred at `(±square_offset, 0)` joined by a channel along
    /// the x axis. Piecewise constant.
    PiecewiseChannel {
        square_side: f64,
        square_offset: f64,
        channel_width: f64,
        channel_value: f64,
        inside_value: f64,
        outside_value: f64,
    },
    /// Inverted paraboloid `center_value − stiffness·r²` lowered by Gaussian
    /// pinning wells.
    PinnedHarmonic {
        center_value: f64,
        stiffness: f64,
        pins: Vec<(f64, f64)>,
        pin_depth: f64,
        pin_radius: f64,
    },
}

impl PotentialSpec {
    pub fn cassini(a: f64, b: f64) -> Result<Self> {
        let spec = PotentialSpec::Cassini { a, b };
        spec.validate()?;
        Ok(spec)
    }

    /// Two squares with the default geometry, `+1` inside and `−10` outside.
    pub fn channel(channel_width: f64, channel_value: f64) -> Result<Self> {
        let spec = PotentialSpec::PiecewiseChannel {
            square_side: DEFAULT_SQUARE_SIDE,
            square_offset: DEFAULT_SQUARE_OFFSET,
            channel_width,
            channel_value,
            inside_value: 1.0,
            outside_value: -10.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Domain(m.into()));
        match self {
            PotentialSpec::Cassini { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a > 0.0 && b > a) {
                    return bad("Cassini oval needs b > a > 0 (single-piece oval)");
                }
            }
            PotentialSpec::PiecewiseChannel {
                square_side,
                square_offset,
                channel_width,
                channel_value,
                inside_value,
                outside_value,
            } => {
                let vals = [*square_side, *square_offset, *channel_width, *channel_value, *inside_value, *outside_value];
                if vals.iter().any(|v| !v.is_finite()) {
                    return bad("non-finite piecewise parameter");
                }
                if !(*channel_width > 0.0 && channel_width <= square_side) {
                    return bad("channel width must satisfy 0 < width <= square side");
                }
                if *square_offset < 0.5 * square_side {
                    return bad("squares overlap: offset must be at least half the side");
                }
            }
            PotentialSpec::PinnedHarmonic { center_value, stiffness, pins, pin_depth, pin_radius } => {
                if !(*center_value > 0.0 && *stiffness > 0.0 && *pin_radius > 0.0 && *pin_depth >= 0.0) {
                    return bad("pinned trap needs positive centre value, stiffness, radius and non-negative depth");
                }
                if pins.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
                    return bad("non-finite pin position");
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PotentialSpec::Cassini { .. } => "cassini",
            PotentialSpec::PiecewiseChannel { .. } => "piecewise_channel",
            PotentialSpec::PinnedHarmonic { .. } => "pinned_harmonic",
        }
    }

    /// Whether `V(x, y) = V(−x, y)` holds exactly.
    pub fn is_mirror_symmetric(&self) -> bool {
        match self {
            PotentialSpec::PinnedHarmonic { pins, .. } => pins.iter().all(|&(px, py)| {
                pins.iter().any(|&(qx, qy)| qx == -px && qy == py)
            }),
            _ => true,
        }
    }

    /// Half-widths of a box that contains `{V > 0}`.
    pub fn support_half_widths(&self) -> (f64, f64) {
        match self {
            PotentialSpec::Cassini { a, b } => {
                let x = (a * a + b * b).sqrt();
                // max of y on the oval: at x² = a² − b⁴/(4a²) when that is positive
                let y = if b * b <= 2.0 * a * a { b * b / (2.0 * a) } else { (b * b - a * a).sqrt() };
                (x, y)
            }
            PotentialSpec::PiecewiseChannel {
                square_side,
                square_offset,
                channel_width,
                channel_value,
                ..
            } => {
                let hx = square_offset + 0.5 * square_side;
                let hy = if *channel_value > 0.0 {
                    0.5 * square_side.max(*channel_width)
                } else {
                    0.5 * square_side
                };
                (hx, hy)
            }
            PotentialSpec::PinnedHarmonic { center_value, stiffness, .. } => {
                let r = (center_value / stiffness).sqrt();
                (r, r)
            }
        }
    }

    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        match self {
            PotentialSpec::Cassini { a, b } => {
                let a2 = a * a;
                let b2 = b * b;
                let s = x * x + y * y + a2;
                b2 * b2 + 4.0 * a2 * x * x - s * s
            }
            PotentialSpec::PiecewiseChannel {
                square_side,
                square_offset,
                channel_width,
                channel_value,
                inside_value,
                outside_value,
            } => {
                let half = 0.5 * square_side;
                let ax = x.abs();
                if y.abs() <= half && (ax - square_offset).abs() <= half {
                    *inside_value
                } else if ax <= square_offset - half && y.abs() <= 0.5 * channel_width {
                    *channel_value
                } else {
                    *outside_value
                }
            }
            PotentialSpec::PinnedHarmonic { center_value, stiffness, pins, pin_depth, pin_radius } => {
                let base = center_value - stiffness * (x * x + y * y);
                let inv = 1.0 / (2.0 * pin_radius * pin_radius);
                let wells: f64 = pins
                    .iter()
                    .map(|&(px, py)| {
                        let d2 = (x - px) * (x - px) + (y - py) * (y - py);
                        (-d2 * inv).exp()
                    })
                    .sum();
                base - pin_depth * wells
            }
        }
    }

    /// Values at every node of `grid`.
    pub fn sample(&self, grid: &Grid2D) -> Vec<f64> {
        (0..grid.len())
            .map(|k| {
                let (i, j) = grid.ij(k);
                self.evaluate(grid.x(i), grid.y(j))
            })
            .collect()
    }
}

/// A grid centred on the origin whose box exceeds the support of `V⁺` by
/// `margin` (fractional) on each side.
pub fn covering_grid(spec: &PotentialSpec, nx: usize, ny: usize, margin: f64) -> Result<Grid2D> {
    let (hx, hy) = spec.support_half_widths();
    Grid2D::centered(nx, ny, hx * (1.0 + margin), hy * (1.0 + margin))
}

/// `true` exactly where `V > 0`.
pub fn domain_mask(spec: &PotentialSpec, grid: &Grid2D) -> Vec<bool> {
    spec.sample(grid).into_iter().map(|v| v > 0.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositiveMass {
    pub mass: f64,
    /// `V⁺` is nonzero somewhere on the grid boundary, so part of the support is cut off.
    pub clipped: bool,
}

/// `∫ V⁺ dr` by the same nodal trapezoid rule used for `∫ |ψ|²`, so a field
/// with `|ψ|² = V⁺` at the nodes carries exactly this mass.
pub fn positive_mass(spec: &PotentialSpec, grid: &Grid2D) -> PositiveMass {
    let values = spec.sample(grid);
    let mass = grid.integrate(|k| values[k].max(0.0));
    let clipped = (0..grid.len()).any(|k| {
        let (i, j) = grid.ij(k);
        grid.is_boundary(i, j) && values[k] > 0.0
    });
    PositiveMass { mass, clipped }
}
