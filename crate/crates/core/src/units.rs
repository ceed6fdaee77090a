//! Conversion from laboratory parameters to the dimensionless rotation speed
//! and interaction parameter used by the solver.

#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Particle mass.
    pub m: f64,
    /// Coupling constant.
    pub g: f64,
    /// Mean 2D density.
    pub n: f64,
    pub hbar: f64,
    /// Rotation rate `|Ω|`.
    pub omega: f64,
    /// Trap half-separation, the length `a` of the Cassini oval.
    pub a_geom: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessParams {
    pub omega: f64,
    pub epsilon: f64,
}

/// `omega = m |Ω| a² / ħ`, `epsilon = ħ / (a √(n g m))`.
pub fn to_dimensionless(p: &PhysicalParams) -> Result<DimensionlessParams> {
    let positive = [p.m, p.g, p.n, p.hbar, p.a_geom];
    if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Domain("m, g, n, hbar and a must be positive".into()));
    }
    if !(p.omega.is_finite() && p.omega >= 0.0) {
        return Err(Error::Domain("rotation rate must be non-negative".into()));
    }
    let omega = p.m * p.omega * p.a_geom * p.a_geom / p.hbar;
    let epsilon = p.hbar / (p.a_geom * (p.n * p.g * p.m).sqrt());
    Ok(DimensionlessParams { omega, epsilon })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> PhysicalParams {
        PhysicalParams { m: 1.0, g: 1.0, n: 1.0, hbar: 1.0, omega: 1.0, a_geom: 1.0 }
    }

    #[test]
    fn identity_combination() {
        let d = to_dimensionless(&unit()).unwrap();
        assert_eq!(d.omega, 1.0);
        assert_eq!(d.epsilon, 1.0);
    }

    #[test]
    fn epsilon_from_ngm() {
        let d = to_dimensionless(&PhysicalParams { g: 4.0, ..unit() }).unwrap();
        assert_eq!(d.epsilon, 0.5);
    }

    #[test]
    fn doubling_the_length_scale() {
        let p = PhysicalParams { m: 1.3, g: 0.7, n: 2.2, hbar: 0.9, omega: 3.1, a_geom: 0.4 };
        let d1 = to_dimensionless(&p).unwrap();
        let d2 = to_dimensionless(&PhysicalParams { a_geom: 0.8, ..p }).unwrap();
        assert!((d2.omega - 4.0 * d1.omega).abs() <= 1e-15 * d2.omega);
        assert!((d2.epsilon - 0.5 * d1.epsilon).abs() <= 1e-15 * d1.epsilon);
    }

    #[test]
    fn rejects_non_positive_inputs() {
        assert!(to_dimensionless(&PhysicalParams { g: 0.0, ..unit() }).is_err());
        assert!(to_dimensionless(&PhysicalParams { omega: -1.0, ..unit() }).is_err());
        assert!(to_dimensionless(&PhysicalParams { omega: 0.0, ..unit() }).is_ok());
    }
}
