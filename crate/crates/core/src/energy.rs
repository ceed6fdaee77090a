//! The rotating Gross–Pitaevskii energy functional
//!
//! ```text
//! E[ψ] = ∫ |∇ψ|² − 2 Re(i ψ ℳψ̄) + |ψ|⁴ / (2ε²) + V_eff |ψ|² / ε²
//! ```
//!
//! with `ℳ = ω (x ∂y − y ∂x)`, integrated over the domain `D` where `V > 0`
//! with `ψ = 0` outside ([`Confinement::Support`]). By default `V_eff = +V`:
//! on `D` the term is bounded and pushes density away from the maxima of
//! `V`, which for the Cassini oval sit at the foci. [`PotentialSign::Trapping`]
//! switches to `V_eff = −V`, the confining reading needed when the field is
//! allowed on the whole grid rectangle ([`Confinement::Box`]).
//!
//! The stationary operator is `L = −½Δ + iℳ + (|ψ|² + V_eff)/(2ε²)`, which is
//! exactly half the functional derivative of `E`. Hence minimizers of `E` at a
//! given mass are the solutions of `Lψ = μψ`, with `μ` half the Lagrange
//! multiplier of the mass constraint.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{laplacian_into, rotation_into, tree_sum, ComplexField2D, Grid2D};
use crate::potentials::PotentialSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PotentialSign {
    /// `V_eff = −V`.
    Trapping,
    /// `V_eff = +V`.
    #[default]
    Literal,
}

impl PotentialSign {
    pub fn factor(self) -> f64 {
        match self {
            PotentialSign::Trapping => -1.0,
            PotentialSign::Literal => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PotentialSign::Trapping => "trapping",
            PotentialSign::Literal => "literal",
        }
    }
}

/// Where the field may be nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Confinement {
    /// Only on nodes with `V > 0`; the functional is integrated over that
    /// domain with `ψ = 0` on its complement.
    #[default]
    Support,
    /// Everywhere inside the grid rectangle; the potential alone confines.
    Box,
}

impl Confinement {
    pub fn name(self) -> &'static str {
        match self {
            Confinement::Support => "support",
            Confinement::Box => "box",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub rotation: f64,
    pub interaction: f64,
    pub potential: f64,
    pub total: f64,
}

/// Stationarity residual `Lψ − μψ`.
#[derive(Debug, Clone)]
pub struct Residual {
    pub field: ComplexField2D,
    /// Eigenvalue of the stationary operator `L`.
    pub mu: f64,
    /// `‖Lψ − μψ‖ / ‖ψ‖`.
    pub relative_norm: f64,
}

impl Residual {
    /// Lagrange multiplier of the mass constraint for `E` itself (`2μ`).
    pub fn multiplier(&self) -> f64 {
        2.0 * self.mu
    }
}

/// The energy functional for one trap, grid, rotation speed and `ε`.
#[derive(Debug, Clone)]
pub struct GpFunctional {
    grid: Grid2D,
    veff: Vec<f64>,
    /// Nodes where the field is free; all others are held at zero.
    active: Vec<bool>,
    omega: f64,
    epsilon: f64,
    interaction: bool,
}

impl GpFunctional {
    /// Functional restricted to the support of `V⁺`.
    pub fn new(spec: &PotentialSpec, grid: &Grid2D, omega: f64, epsilon: f64, sign: PotentialSign) -> Result<Self> {
        Self::with_confinement(spec, grid, omega, epsilon, sign, Confinement::Support)
    }

    pub fn with_confinement(
        spec: &PotentialSpec,
        grid: &Grid2D,
        omega: f64,
        epsilon: f64,
        sign: PotentialSign,
        confinement: Confinement,
    ) -> Result<Self> {
        spec.validate()?;
        let s = sign.factor();
        let values = spec.sample(grid);
        let veff = values.iter().map(|v| s * v).collect();
        let mut f = Self::from_values(*grid, veff, omega, epsilon)?;
        if confinement == Confinement::Support {
            for (a, v) in f.active.iter_mut().zip(&values) {
                *a = *a && *v > 0.0;
            }
        }
        Ok(f)
    }

    /// Builds the functional from an explicit effective potential.
    pub fn from_values(grid: Grid2D, veff: Vec<f64>, omega: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Domain(alloc::format!("epsilon must be positive, got {epsilon}")));
        }
        if !omega.is_finite() {
            return Err(Error::Domain("omega must be finite".into()));
        }
        if veff.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        let active = (0..grid.len())
            .map(|k| {
                let (i, j) = grid.ij(k);
                !grid.is_boundary(i, j)
            })
            .collect();
        Ok(GpFunctional { grid, veff, active, omega, epsilon, interaction: true })
    }

    /// Drops the quartic term (linear test problem).
    pub fn without_interaction(mut self) -> Self {
        self.interaction = false;
        self
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn veff(&self) -> &[f64] {
        &self.veff
    }
    pub fn has_interaction(&self) -> bool {
        self.interaction
    }
    /// Nodes where the field may be nonzero.
    pub fn active(&self) -> &[bool] {
        &self.active
    }

    /// Zeroes `psi` outside the active nodes.
    pub fn restrict(&self, psi: &mut ComplexField2D) {
        for (k, &a) in self.active.iter().enumerate() {
            if !a {
                psi.u[k] = 0.0;
                psi.v[k] = 0.0;
            }
        }
    }

    /// `1/ε²`, the prefactor of the potential term in `E`.
    pub fn inv_eps2(&self) -> f64 {
        1.0 / (self.epsilon * self.epsilon)
    }

    /// Coupling of the stationary operator and of the Euclidean equations, `1/(2ε²)`.
    pub fn coupling(&self) -> f64 {
        0.5 * self.inv_eps2()
    }

    fn check(&self, psi: &ComplexField2D) -> Result<()> {
        if *psi.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn energy(&self, psi: &ComplexField2D) -> Result<EnergyBreakdown> {
        self.check(psi)?;
        let g = &self.grid;
        let kinetic = kinetic_energy(g, &psi.u) + kinetic_energy(g, &psi.v);

        let mut mu = alloc::vec![0.0; g.len()];
        let mut mv = alloc::vec![0.0; g.len()];
        rotation_into(g, &psi.u, self.omega, &mut mu);
        rotation_into(g, &psi.v, self.omega, &mut mv);
        let rotation = 2.0 * g.integrate(|k| psi.v[k] * mu[k] - psi.u[k] * mv[k]);

        let inv = self.inv_eps2();
        let interaction = if self.interaction {
            0.5 * inv * g.integrate(|k| {
                let r = psi.u[k] * psi.u[k] + psi.v[k] * psi.v[k];
                r * r
            })
        } else {
            0.0
        };
        let potential = inv * g.integrate(|k| self.veff[k] * (psi.u[k] * psi.u[k] + psi.v[k] * psi.v[k]));
        Ok(EnergyBreakdown {
            kinetic,
            rotation,
            interaction,
            potential,
            total: tree_sum(&[kinetic, rotation, interaction, potential]),
        })
    }

    /// `δE/δψ̄` on active nodes (zero elsewhere), normalized so that
    /// `dE = 2 Re⟨η, grad⟩` for perturbations `η` supported on active nodes.
    pub fn gradient(&self, psi: &ComplexField2D) -> Result<ComplexField2D> {
        self.check(psi)?;
        Ok(self.apply(psi, self.interaction))
    }

    /// The quadratic part `Aψ = −Δψ + 2iℳψ + ε⁻² V_eff ψ` of the gradient, so
    /// that kinetic + rotation + potential energy equals `Re⟨ψ, Aψ⟩`.
    pub fn linear_part(&self, psi: &ComplexField2D) -> Result<ComplexField2D> {
        self.check(psi)?;
        Ok(self.apply(psi, false))
    }

    fn apply(&self, psi: &ComplexField2D, interaction: bool) -> ComplexField2D {
        let g = &self.grid;
        let n = g.len();
        let mut out = ComplexField2D::zeros(*g);
        let mut lu = alloc::vec![0.0; n];
        let mut lv = alloc::vec![0.0; n];
        laplacian_into(g, &psi.u, &mut lu);
        laplacian_into(g, &psi.v, &mut lv);
        let mut mu = alloc::vec![0.0; n];
        let mut mv = alloc::vec![0.0; n];
        rotation_into(g, &psi.u, self.omega, &mut mu);
        rotation_into(g, &psi.v, self.omega, &mut mv);
        let inv = self.inv_eps2();
        for k in 0..n {
            if !self.active[k] {
                continue;
            }
            let (u, v) = (psi.u[k], psi.v[k]);
            let dens = if interaction { u * u + v * v } else { 0.0 };
            let w = inv * (dens + self.veff[k]);
            // −Δψ + 2iℳψ + ε⁻²(|ψ|² + V_eff)ψ, with iℳψ = −ℳv + iℳu
            out.u[k] = -lu[k] - 2.0 * mv[k] + w * u;
            out.v[k] = -lv[k] + 2.0 * mu[k] + w * v;
        }
        out
    }

    /// `Lψ = grad / 2`.
    pub fn stationary_operator(&self, psi: &ComplexField2D) -> Result<ComplexField2D> {
        let mut out = self.gradient(psi)?;
        out.scale(0.5);
        Ok(out)
    }

    /// `(Lψ − μψ, μ)` with `μ = Re⟨ψ, Lψ⟩ / ⟨ψ, ψ⟩`.
    pub fn residual(&self, psi: &ComplexField2D) -> Result<Residual> {
        let lpsi = self.stationary_operator(psi)?;
        let mass = psi.mass();
        if !(mass > 0.0) {
            return Err(Error::ZeroField);
        }
        let mu = psi.re_dot(&lpsi) / mass;
        let mut field = lpsi;
        field.axpy(-mu, psi);
        let relative_norm = (field.mass() / mass).sqrt();
        Ok(Residual { field, mu, relative_norm })
    }
}

/// `Σ_edges |Δf|² / h²` weighted by cell area, i.e. `∫|∇f|²` for fields
/// vanishing on the boundary; equals `−⟨f, Δf⟩` in that case.
fn kinetic_energy(g: &Grid2D, f: &[f64]) -> f64 {
    let (nx, ny) = (g.nx(), g.ny());
    let (hx, hy) = (g.hx(), g.hy());
    let cx = hy / hx;
    let cy = hx / hy;
    let mut rows = Vec::with_capacity(ny);
    for j in 0..ny {
        let mut acc = 0.0;
        if j > 0 && j + 1 < ny {
            for i in 0..nx - 1 {
                let d = f[j * nx + i + 1] - f[j * nx + i];
                acc += cx * d * d;
            }
        }
        if j + 1 < ny {
            for i in 1..nx - 1 {
                let d = f[(j + 1) * nx + i] - f[j * nx + i];
                acc += cy * d * d;
            }
        }
        rows.push(acc);
    }
    tree_sum(&rows)
}

/// Convenience wrapper: builds the functional and evaluates the energy.
pub fn energy(
    psi: &ComplexField2D,
    spec: &PotentialSpec,
    omega: f64,
    epsilon: f64,
    sign: PotentialSign,
) -> Result<EnergyBreakdown> {
    GpFunctional::new(spec, psi.grid(), omega, epsilon, sign)?.energy(psi)
}

pub fn gp_residual(
    psi: &ComplexField2D,
    spec: &PotentialSpec,
    omega: f64,
    epsilon: f64,
    sign: PotentialSign,
) -> Result<Residual> {
    GpFunctional::new(spec, psi.grid(), omega, epsilon, sign)?.residual(psi)
}

pub fn energy_gradient(
    psi: &ComplexField2D,
    spec: &PotentialSpec,
    omega: f64,
    epsilon: f64,
    sign: PotentialSign,
) -> Result<ComplexField2D> {
    GpFunctional::new(spec, psi.grid(), omega, epsilon, sign)?.gradient(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: Grid2D, rng: &mut ChaCha8Rng) -> ComplexField2D {
        let n = grid.len();
        let u = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut f = ComplexField2D::new(grid, u, v).unwrap();
        f.enforce_dirichlet();
        f
    }

    fn cassini() -> PotentialSpec {
        PotentialSpec::cassini(0.25, 0.275).unwrap()
    }

    #[test]
    fn directional_derivative_matches_gradient() {
        let spec = cassini();
        let grid = Grid2D::centered(16, 16, 0.45, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let f = GpFunctional::with_confinement(&spec, &grid, 30.0, 0.05, PotentialSign::Trapping, Confinement::Box)
                .unwrap();
            let mut psi = random_field(grid, &mut rng);
            psi.scale(0.05);
            let eta = random_field(grid, &mut rng);
            let h = 1e-5;
            let mut plus = psi.clone();
            plus.axpy(h, &eta);
            let mut minus = psi.clone();
            minus.axpy(-h, &eta);
            let fd = (f.energy(&plus).unwrap().total - f.energy(&minus).unwrap().total) / (2.0 * h);
            let an = 2.0 * eta.re_dot(&f.gradient(&psi).unwrap());
            let e = f.energy(&psi).unwrap().total;
            assert!((fd - an).abs() <= 1e-6 * (1.0 + e.abs()), "fd {fd} analytic {an}");
        }
    }

    #[test]
    fn zero_and_real_fields() {
        let spec = cassini();
        let grid = Grid2D::centered(20, 12, 0.45, 0.2).unwrap();
        let zero = ComplexField2D::zeros(grid);
        let e = energy(&zero, &spec, 50.0, 0.02, PotentialSign::Trapping).unwrap();
        assert_eq!(e, EnergyBreakdown::default());
        let g = energy_gradient(&zero, &spec, 50.0, 0.02, PotentialSign::Trapping).unwrap();
        assert!(g.u.iter().chain(&g.v).all(|&x| x == 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut real = random_field(grid, &mut rng);
        real.v.iter_mut().for_each(|v| *v = 0.0);
        let e = energy(&real, &spec, 50.0, 0.02, PotentialSign::Trapping).unwrap();
        assert_eq!(e.rotation, 0.0);
        assert!(e.kinetic >= 0.0 && e.interaction >= 0.0);
        let parts = e.kinetic + e.rotation + e.interaction + e.potential;
        assert!((parts - e.total).abs() <= 1e-12 * e.total.abs());
    }

    #[test]
    fn rejects_non_positive_epsilon() {
        let grid = Grid2D::centered(10, 10, 0.45, 0.2).unwrap();
        assert!(GpFunctional::new(&cassini(), &grid, 0.0, 0.0, PotentialSign::Trapping).is_err());
        assert!(GpFunctional::new(&cassini(), &grid, 0.0, -1.0, PotentialSign::Trapping).is_err());
    }

    fn gaussian_kinetic(n: usize) -> f64 {
        let grid = Grid2D::centered(n, n, 8.0, 8.0).unwrap();
        let psi = ComplexField2D::from_fn(grid, |x, y| {
            Complex64::new((-(x * x + y * y) / 2.0).exp() / core::f64::consts::PI.sqrt(), 0.0)
        });
        let f = GpFunctional::from_values(grid, vec![0.0; grid.len()], 0.0, 1.0).unwrap().without_interaction();
        f.energy(&psi).unwrap().kinetic
    }

    #[test]
    fn gaussian_kinetic_energy() {
        // separable oracle: the edge sum factorizes into 1D sums
        let n = 161;
        let h = 16.0 / (n - 1) as f64;
        let g: Vec<f64> = (0..n)
            .map(|i| {
                let x = -8.0 + i as f64 * h;
                (-x * x / 2.0).exp() / core::f64::consts::PI.powf(0.25)
            })
            .collect();
        let diff: f64 = g.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum::<f64>() / h;
        let mass: f64 = g.iter().map(|v| v * v).sum::<f64>() * h;
        let oracle = 2.0 * diff * mass;
        let k1 = gaussian_kinetic(n);
        assert!((k1 - oracle).abs() <= 1e-10, "{k1} vs {oracle}");
        // continuum value 1 after removing the h² error
        let k2 = gaussian_kinetic(2 * n - 1);
        let extrapolated = (4.0 * k2 - k1) / 3.0;
        assert!((extrapolated - 1.0).abs() <= 1e-6, "{extrapolated}");
        assert!((k1 - 1.0).abs() > 1e-5, "discretization error should be visible before extrapolation");
    }

    /// Dense matrix of `L = −½Δ + iℳ + V_eff/(2ε²)` on interior nodes, as a real
    /// block matrix acting on `(u, v)`.
    fn dense_linear_operator(f: &GpFunctional) -> (nalgebra::DMatrix<f64>, Vec<usize>) {
        let g = f.grid();
        let interior: Vec<usize> = (0..g.len())
            .filter(|&k| {
                let (i, j) = g.ij(k);
                !g.is_boundary(i, j)
            })
            .collect();
        let m = interior.len();
        let pos = |k: usize| interior.iter().position(|&q| q == k);
        let mut a = nalgebra::DMatrix::<f64>::zeros(2 * m, 2 * m);
        let (hx, hy, w) = (g.hx(), g.hy(), f.omega());
        for (row, &k) in interior.iter().enumerate() {
            let (i, j) = g.ij(k);
            let diag = 1.0 / (hx * hx) + 1.0 / (hy * hy) + f.veff()[k] / (2.0 * f.epsilon() * f.epsilon());
            a[(row, row)] = diag;
            a[(m + row, m + row)] = diag;
            let nbrs = [
                (i - 1, j, -0.5 / (hx * hx), w * g.y(j) / (2.0 * hx)),
                (i + 1, j, -0.5 / (hx * hx), -w * g.y(j) / (2.0 * hx)),
                (i, j - 1, -0.5 / (hy * hy), -w * g.x(i) / (2.0 * hy)),
                (i, j + 1, -0.5 / (hy * hy), w * g.x(i) / (2.0 * hy)),
            ];
            for (ni, nj, lap, rot) in nbrs {
                if let Some(col) = pos(g.idx(ni, nj)) {
                    a[(row, col)] += lap;
                    a[(m + row, m + col)] += lap;
                    // iℳ(u + iv) = −ℳv + iℳu
                    a[(row, m + col)] -= rot;
                    a[(m + row, col)] += rot;
                }
            }
        }
        (a, interior)
    }

    fn lowest_mode(f: &GpFunctional) -> (f64, ComplexField2D) {
        let (a, interior) = dense_linear_operator(f);
        let m = interior.len();
        let eig = nalgebra::SymmetricEigen::new(a);
        let (idx, lam) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .map(|(i, l)| (i, *l))
            .unwrap();
        let mut psi = ComplexField2D::zeros(*f.grid());
        for (row, &k) in interior.iter().enumerate() {
            psi.u[k] = eig.eigenvectors[(row, idx)];
            psi.v[k] = eig.eigenvectors[(m + row, idx)];
        }
        (lam, psi)
    }

    #[test]
    fn mu_of_linear_ground_state_matches_eigen_oracle() {
        let spec = cassini();
        let grid = Grid2D::centered(14, 10, 0.45, 0.2).unwrap();
        for omega in [0.0, 12.0] {
            let f = GpFunctional::with_confinement(&spec, &grid, omega, 0.05, PotentialSign::Trapping, Confinement::Box)
                .unwrap()
                .without_interaction();
            let (lam, psi) = lowest_mode(&f);
            let r = f.residual(&psi).unwrap();
            assert!((r.mu - lam).abs() <= 1e-8 * lam.abs(), "omega {omega}: {} vs {lam}", r.mu);
            assert!(r.relative_norm <= 1e-8 * lam.abs());
        }
    }

    #[test]
    fn residual_is_orthogonal_to_the_field() {
        let spec = cassini();
        let grid = Grid2D::centered(24, 16, 0.45, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for omega in [0.0, 40.0, 300.0] {
            let psi = random_field(grid, &mut rng);
            let r = gp_residual(&psi, &spec, omega, 0.01, PotentialSign::Trapping).unwrap();
            let overlap = psi.dot(&r.field);
            let scale = psi.norm() * r.field.norm();
            assert!(overlap.re.abs() <= 1e-12 * scale, "{overlap}");
        }
        let zero = ComplexField2D::zeros(grid);
        assert_eq!(gp_residual(&zero, &spec, 1.0, 0.01, PotentialSign::Trapping).unwrap_err(), Error::ZeroField);
    }

    #[test]
    fn mirror_conjugation_and_reflection() {
        let spec = cassini();
        let grid = Grid2D::centered(22, 14, 0.45, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = GpFunctional::with_confinement(&spec, &grid, 120.0, 0.02, PotentialSign::Trapping, Confinement::Box)
            .unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1e-300);
        for _ in 0..5 {
            let psi = random_field(grid, &mut rng);
            let e = f.energy(&psi).unwrap();
            let t = f.energy(&psi.mirror_conjugate().unwrap()).unwrap();
            assert!(close(e.kinetic, t.kinetic) && close(e.rotation, t.rotation));
            assert!(close(e.interaction, t.interaction) && close(e.potential, t.potential));
            let r = f.energy(&psi.reflect_x().unwrap()).unwrap();
            assert!(close(e.rotation, -r.rotation));
            assert!(close(e.kinetic, r.kinetic) && close(e.interaction, r.interaction));
            assert!(close(e.potential, r.potential));
        }
    }

    #[test]
    fn positive_scaling_keeps_the_argmin() {
        let spec = cassini();
        let grid = Grid2D::centered(16, 12, 0.45, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let f = GpFunctional::new(&spec, &grid, 20.0, 0.05, PotentialSign::Trapping).unwrap();
        let candidates: Vec<_> = (0..3).map(|_| random_field(grid, &mut rng)).collect();
        let argmin = |scale: f64| {
            candidates
                .iter()
                .enumerate()
                .map(|(n, c)| (n, scale * f.energy(c).unwrap().total))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap()
                .0
        };
        assert_eq!(argmin(1.0), argmin(2.5));
        assert_eq!(argmin(1.0), argmin(1e-3));
    }

    #[test]
    fn kinetic_only_gradient_is_minus_laplacian() {
        let grid = Grid2D::centered(12, 12, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let psi = random_field(grid, &mut rng);
        let f = GpFunctional::from_values(grid, vec![0.0; grid.len()], 0.0, 1.0).unwrap().without_interaction();
        let g = f.gradient(&psi).unwrap();
        let lap = crate::grid::laplacian(&psi);
        for k in 0..grid.len() {
            assert_eq!(g.u[k], -lap.u[k]);
            assert_eq!(g.v[k], -lap.v[k]);
        }
        // kinetic energy equals −⟨ψ, Δψ⟩
        let e = f.energy(&psi).unwrap().kinetic;
        let q = -psi.re_dot(&lap);
        assert!((e - q).abs() <= 1e-12 * e);
    }

    #[test]
    fn literal_sign_flips_the_potential_term() {
        let spec = cassini();
        let grid = Grid2D::centered(16, 12, 0.45, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let psi = random_field(grid, &mut rng);
        let a = energy(&psi, &spec, 0.0, 0.1, PotentialSign::Trapping).unwrap();
        let b = energy(&psi, &spec, 0.0, 0.1, PotentialSign::Literal).unwrap();
        assert_eq!(a.potential, -b.potential);
        assert_eq!(a.kinetic, b.kinetic);
    }
}
