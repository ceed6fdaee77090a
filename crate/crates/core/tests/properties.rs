use num_complex::Complex64;
use peanut_core::energy::{energy, energy_gradient};
use peanut_core::grid::inner_product;
use peanut_core::timescales::{effective_time, TimescaleInput};
use peanut_core::units::{to_dimensionless, PhysicalParams};
use peanut_core::vortex::census_with;
use peanut_core::{ComplexField2D, Confinement, GpFunctional, Grid2D, PotentialSign, PotentialSpec};
use proptest::prelude::*;

/// Five-point difference of a quartic polynomial in `t`; exact up to rounding.
fn directional_derivative<F: Fn(f64) -> f64>(e: F, h: f64) -> f64 {
    (8.0 * (e(h) - e(-h)) - (e(2.0 * h) - e(-2.0 * h))) / (12.0 * h)
}

fn field_from(grid: Grid2D, values: &[(f64, f64)]) -> ComplexField2D {
    let (u, v) = values.iter().copied().unzip();
    let mut f = ComplexField2D::new(grid, u, v).unwrap();
    f.enforce_dirichlet();
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn gradient_matches_directional_derivatives(
        psi in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 256),
        eta in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 256),
        omega in 0.0..200.0f64,
        literal in any::<bool>(),
        boxed in any::<bool>(),
    ) {
        let spec = PotentialSpec::cassini(0.25, 0.275).unwrap();
        let grid = Grid2D::centered(16, 16, 0.45, 0.2).unwrap();
        let sign = if literal { PotentialSign::Literal } else { PotentialSign::Trapping };
        let confinement = if boxed { Confinement::Box } else { Confinement::Support };
        let f = GpFunctional::with_confinement(&spec, &grid, omega, 0.05, sign, confinement).unwrap();
        let (mut psi, mut eta) = (field_from(grid, &psi), field_from(grid, &eta));
        f.restrict(&mut psi);
        f.restrict(&mut eta);
        let e = |t: f64| {
            let mut p = psi.clone();
            p.axpy(t, &eta);
            f.energy(&p).unwrap().total
        };
        let fd = directional_derivative(e, 0.05);
        let exact = 2.0 * inner_product(&eta, &f.gradient(&psi).unwrap()).unwrap().re;
        prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs(), "{fd} vs {exact}");
    }

    #[test]
    fn free_functions_use_the_support_domain(
        psi in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 256),
        omega in 0.0..200.0f64,
    ) {
        let spec = PotentialSpec::cassini(0.25, 0.275).unwrap();
        let grid = Grid2D::centered(16, 16, 0.45, 0.2).unwrap();
        let psi = field_from(grid, &psi);
        let f = GpFunctional::new(&spec, &grid, omega, 0.05, PotentialSign::Literal).unwrap();
        let e = energy(&psi, &spec, omega, 0.05, PotentialSign::Literal).unwrap();
        let g = energy_gradient(&psi, &spec, omega, 0.05, PotentialSign::Literal).unwrap();
        prop_assert_eq!(e, f.energy(&psi).unwrap());
        prop_assert_eq!(g, f.gradient(&psi).unwrap());
    }

    #[test]
    fn a_single_imprint_is_found_where_it_was_put(
        x0 in -0.8..0.8f64,
        y0 in -0.5..0.5f64,
        positive in any::<bool>(),
        tilt in (-2.0..2.0f64, -2.0..2.0f64),
        amp in (0.5..2.0f64, -0.3..0.3f64),
    ) {
        let grid = Grid2D::centered(40, 30, 1.0, 0.7).unwrap();
        let s = if positive { 1.0 } else { -1.0 };
        let psi = ComplexField2D::from_fn(grid, |x, y| {
            let core = Complex64::new(x - x0, s * (y - y0));
            let background = Complex64::from_polar(amp.0 + amp.1 * x, tilt.0 * x + tilt.1 * y);
            core * background
        });
        let mask = vec![true; grid.len()];
        let c = census_with(&psi, &mask, 0.0);
        prop_assert_eq!(c.count(), 1);
        let v = c.vortices[0];
        prop_assert_eq!(v.winding, s as i32);
        prop_assert!((v.x - x0).abs() <= grid.hx() && (v.y - y0).abs() <= grid.hy());
    }

    #[test]
    fn effective_time_is_monotone_in_the_tunnelling_time(
        t_q in 1e-3..1e3f64,
        dq in 0.0..1e3f64,
        t_c in 1e-3..1e3f64,
        t_a in 1e-3..1e6f64,
    ) {
        let lo = effective_time(&TimescaleInput::new(t_q, t_c, t_a).unwrap()).unwrap();
        let hi = effective_time(&TimescaleInput::new(t_q + dq, t_c, t_a).unwrap()).unwrap();
        prop_assert!(hi.effective_time >= lo.effective_time);
        prop_assert!(lo.effective_time <= t_a);
    }

    #[test]
    fn rescaling_the_length_is_homogeneous(
        m in 0.1..10.0f64, g in 0.1..10.0f64, n in 0.1..10.0f64,
        hbar in 0.1..10.0f64, rate in 0.0..10.0f64, a in 0.1..10.0f64, k in 0.1..10.0f64,
    ) {
        let p = PhysicalParams { m, g, n, hbar, omega: rate, a_geom: a };
        let d1 = to_dimensionless(&p).unwrap();
        let d2 = to_dimensionless(&PhysicalParams { a_geom: k * a, ..p }).unwrap();
        prop_assert!((d2.omega - k * k * d1.omega).abs() <= 1e-14 * d2.omega.max(1e-300));
        prop_assert!((d2.epsilon * k - d1.epsilon).abs() <= 1e-14 * d1.epsilon);
    }

    #[test]
    fn cassini_is_even_in_both_axes(x in -0.5..0.5f64, y in -0.3..0.3f64, a in 0.05..0.5f64, r in 1.01..2.0f64) {
        let spec = PotentialSpec::cassini(a, a * r).unwrap();
        let v = spec.evaluate(x, y);
        prop_assert_eq!(v, spec.evaluate(-x, y));
        prop_assert_eq!(v, spec.evaluate(x, -y));
    }
}
