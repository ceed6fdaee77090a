//! Constrained minimization of the energy at fixed mass, seeding, and
//! continuation in the rotation speed.
//!
//! The descent is a projected gradient flow on the sphere `∫|ψ|² = N`,
//! accelerated by nonlinear conjugate gradients. The gradient is
//! preconditioned with `(α − Δ)⁻¹`, which treats the Laplacian implicitly, and
//! every trial point is pulled back onto the sphere by rescaling.

use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

use crate::dirichlet::{DirichletSine, ShiftedPoisson};
use crate::energy::{Confinement, EnergyBreakdown, GpFunctional, PotentialSign};
use crate::error::{Error, Result};
use crate::grid::{laplacian_into, ComplexField2D, Grid2D};
use crate::potentials::PotentialSpec;
use crate::vortex::{census, SymmetryClass, VortexCensus};

#[derive(Debug, Clone, PartialEq)]
pub enum SeedSpec {
    UniformTf,
    CentralVortex,
    VortexAt(f64, f64),
    MultiVortex(Vec<(f64, f64)>),
    FromFile(String),
}

impl SeedSpec {
    /// Imprinted vortex positions.
    pub fn vortices(&self) -> Vec<(f64, f64)> {
        match self {
            SeedSpec::UniformTf | SeedSpec::FromFile(_) => Vec::new(),
            SeedSpec::CentralVortex => alloc::vec![(0.0, 0.0)],
            SeedSpec::VortexAt(x, y) => alloc::vec![(*x, *y)],
            SeedSpec::MultiVortex(list) => list.clone(),
        }
    }

    /// Short label used in tables.
    pub fn label(&self) -> String {
        match self {
            SeedSpec::UniformTf => "uniform_tf".into(),
            SeedSpec::CentralVortex => "central_vortex".into(),
            SeedSpec::VortexAt(x, y) => alloc::format!("vortex_at({x:.4},{y:.4})"),
            SeedSpec::MultiVortex(list) => {
                let mut s = String::from("multi_vortex(");
                for (n, (x, y)) in list.iter().enumerate() {
                    if n > 0 {
                        s.push(';');
                    }
                    s.push_str(&alloc::format!("{x:.4},{y:.4}"));
                }
                s.push(')');
                s
            }
            SeedSpec::FromFile(path) => alloc::format!("from_file({path})"),
        }
    }

    /// The five seed families: vortex free, one off-centre vortex on each
    /// side, a central vortex, a symmetric pair and a row of three.
    /// Off-axis positions are fractions of the support half-width.
    pub fn families(spec: &PotentialSpec) -> Vec<SeedSpec> {
        let (hx, _) = spec.support_half_widths();
        let x1 = 0.45 * hx;
        let x3 = 0.55 * hx;
        alloc::vec![
            SeedSpec::UniformTf,
            SeedSpec::VortexAt(-x1, 0.0),
            SeedSpec::VortexAt(x1, 0.0),
            SeedSpec::CentralVortex,
            SeedSpec::MultiVortex(alloc::vec![(-x1, 0.0), (x1, 0.0)]),
            SeedSpec::MultiVortex(alloc::vec![(-x3, 0.0), (0.0, 0.0), (x3, 0.0)]),
        ]
    }
}

/// Thomas–Fermi profile `√V⁺` times regularized unit-winding factors,
/// normalized to `∫V⁺`.
pub fn make_seed(seed: &SeedSpec, spec: &PotentialSpec, grid: &Grid2D) -> Result<ComplexField2D> {
    spec.validate()?;
    if let SeedSpec::FromFile(path) = seed {
        return Err(Error::ExternalSeed(path.clone()));
    }
    let cores = seed.vortices();
    for &(x, y) in &cores {
        if !(spec.evaluate(x, y) > 0.0) {
            return Err(Error::SeedOutsideDomain { x, y });
        }
    }
    let delta = 2.0 * grid.hx().max(grid.hy());
    let d2 = delta * delta;
    let mut psi = ComplexField2D::from_fn(*grid, |x, y| {
        let mut z = Complex64::new(spec.evaluate(x, y).max(0.0).sqrt(), 0.0);
        for &(x0, y0) in &cores {
            let (dx, dy) = (x - x0, y - y0);
            z *= Complex64::new(dx, dy) / (dx * dx + dy * dy + d2).sqrt();
        }
        z
    });
    let mass = crate::potentials::positive_mass(spec, grid).mass;
    psi.normalize_to(mass)?;
    Ok(psi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    /// Target for `‖Lψ − μψ‖ / ‖ψ‖`.
    pub tol: f64,
    pub max_iter: usize,
    /// First trial step along the preconditioned direction.
    pub dt0: f64,
    /// Step halvings tried before a direction is declared useless.
    pub max_backtracks: usize,
    /// Keep `(energy, mass)` after every accepted step.
    pub record_history: bool,
    /// Plain preconditioned gradient flow instead of conjugate directions.
    pub steepest_descent: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            tol: 1e-8,
            max_iter: 20_000,
            dt0: 0.5,
            max_backtracks: 60,
            record_history: false,
            steepest_descent: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryPoint {
    pub energy: f64,
    pub mass: f64,
}

#[derive(Debug, Clone)]
pub struct MinimizeOutcome {
    pub field: ComplexField2D,
    pub energy: EnergyBreakdown,
    pub mu: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<HistoryPoint>,
}

struct State {
    psi: ComplexField2D,
    energy: EnergyBreakdown,
    grad: ComplexField2D,
}

impl State {
    fn new(f: &GpFunctional, psi: ComplexField2D) -> Result<Self> {
        let energy = f.energy(&psi)?;
        let grad = f.gradient(&psi)?;
        Ok(State { psi, energy, grad })
    }

    /// `(μ, ‖Lψ − μψ‖/‖ψ‖)` from the stored gradient, `L = grad / 2`.
    fn residual(&self, mass: f64) -> (f64, f64) {
        let mu = 0.5 * self.psi.re_dot(&self.grad) / mass;
        let g = self.psi.grid();
        let r2 = g.integrate(|k| {
            let a = 0.5 * self.grad.u[k] - mu * self.psi.u[k];
            let b = 0.5 * self.grad.v[k] - mu * self.psi.v[k];
            a * a + b * b
        });
        (mu, (r2 / mass).sqrt())
    }

    /// `grad − 2μψ`, the gradient with its radial part removed.
    fn tangent_gradient(&self, mass: f64) -> ComplexField2D {
        let (mu, _) = self.residual(mass);
        let mut r = self.grad.clone();
        r.axpy(-2.0 * mu, &self.psi);
        r
    }
}

struct Preconditioner<'a, S> {
    sine: &'a mut S,
    lap: Vec<f64>,
}

impl<'a, S: ShiftedPoisson> Preconditioner<'a, S> {
    fn new(sine: &'a mut S) -> Self {
        let len = sine.grid().len();
        Preconditioner { sine, lap: alloc::vec![0.0; len] }
    }

    /// Kinetic Rayleigh quotient `⟨ψ, −Δψ⟩ / ⟨ψ, ψ⟩`.
    fn shift(&mut self, psi: &ComplexField2D) -> f64 {
        let g = *psi.grid();
        let mut acc = 0.0;
        for part in [&psi.u, &psi.v] {
            laplacian_into(&g, part, &mut self.lap);
            acc -= g.integrate(|k| part[k] * self.lap[k]);
        }
        acc / psi.mass()
    }

    /// `(α − Δ)⁻¹ z` on the rectangle, cut back to the active nodes.
    fn apply(&mut self, alpha: f64, z: &ComplexField2D, f: &GpFunctional) -> ComplexField2D {
        let mut out = ComplexField2D::zeros(*z.grid());
        self.sine.solve_shifted(alpha, &z.u, &mut out.u);
        self.sine.solve_shifted(alpha, &z.v, &mut out.v);
        f.restrict(&mut out);
        out
    }
}

/// `√N (ψ + t p) / ‖ψ + t p‖`.
fn retract(psi: &ComplexField2D, p: &ComplexField2D, t: f64, mass: f64) -> Result<ComplexField2D> {
    let mut out = psi.clone();
    out.axpy(t, p);
    out.normalize_to(mass)?;
    Ok(out)
}

/// Removes the component of `z` along `psi` in the plain inner product.
fn project_tangent(psi: &ComplexField2D, z: &mut ComplexField2D, mass: f64) {
    let c = psi.re_dot(z) / mass;
    z.axpy(-c, psi);
}

/// Energy along `t ↦ √N (ψ + t p)/‖ψ + t p‖`, exact from a handful of
/// inner products. Differences `E(t) − E(0)` are formed from the polynomial
/// coefficients, so they stay accurate when the decrease is far below the
/// rounding level of `E` itself.
struct LineModel {
    mass: f64,
    n: [f64; 3],
    q: [f64; 3],
    quartic: [f64; 5],
    coupling: f64,
}

impl LineModel {
    fn new(f: &GpFunctional, psi: &ComplexField2D, p: &ComplexField2D, mass: f64) -> Result<Self> {
        let apsi = f.linear_part(psi)?;
        let ap = f.linear_part(p)?;
        let n = [psi.re_dot(psi), psi.re_dot(p), p.re_dot(p)];
        let q = [psi.re_dot(&apsi), p.re_dot(&apsi), p.re_dot(&ap)];
        let g = psi.grid();
        let mut quartic = [0.0; 5];
        let coupling = if f.has_interaction() { 0.5 * f.inv_eps2() } else { 0.0 };
        if coupling != 0.0 {
            // |ψ + t p|² = r0 + 2 r1 t + r2 t² at every node
            let parts = |k: usize| {
                let r0 = psi.u[k] * psi.u[k] + psi.v[k] * psi.v[k];
                let r1 = psi.u[k] * p.u[k] + psi.v[k] * p.v[k];
                let r2 = p.u[k] * p.u[k] + p.v[k] * p.v[k];
                (r0, r1, r2)
            };
            quartic = [
                g.integrate(|k| {
                    let (r0, _, _) = parts(k);
                    r0 * r0
                }),
                g.integrate(|k| {
                    let (r0, r1, _) = parts(k);
                    4.0 * r0 * r1
                }),
                g.integrate(|k| {
                    let (r0, r1, r2) = parts(k);
                    4.0 * r1 * r1 + 2.0 * r0 * r2
                }),
                g.integrate(|k| {
                    let (_, r1, r2) = parts(k);
                    4.0 * r1 * r2
                }),
                g.integrate(|k| {
                    let (_, _, r2) = parts(k);
                    r2 * r2
                }),
            ];
        }
        Ok(LineModel { mass, n, q, quartic, coupling })
    }

    /// `E(t) − E(0)`.
    fn delta(&self, t: f64) -> f64 {
        let [n0, n1, n2] = self.n;
        let [q0, q1, q2] = self.q;
        let nt = n0 + 2.0 * n1 * t + n2 * t * t;
        let quad = ((2.0 * q1 * t + q2 * t * t) * n0 - q0 * (2.0 * n1 * t + n2 * t * t)) / (nt * n0) * self.mass;
        if self.coupling == 0.0 {
            return quad;
        }
        let c = &self.quartic;
        // coefficients of nt² beyond the constant
        let d = [4.0 * n0 * n1, 4.0 * n1 * n1 + 2.0 * n0 * n2, 4.0 * n1 * n2, n2 * n2];
        let mut num = 0.0;
        let mut tp = 1.0;
        for m in 0..4 {
            tp *= t;
            num += (c[m + 1] * n0 * n0 - c[0] * d[m]) * tp;
        }
        quad + self.coupling * num / (nt * nt * n0 * n0) * self.mass * self.mass
    }

    /// Step minimizing the energy along the curve, or `None` when no
    /// decrease can be found.
    fn minimize(&self, guess: f64, max_halvings: usize) -> Option<f64> {
        let mut t = guess;
        let mut ft = self.delta(t);
        let mut halvings = 0;
        while !(ft < 0.0) {
            if halvings >= max_halvings {
                return None;
            }
            t *= 0.5;
            ft = self.delta(t);
            halvings += 1;
        }
        // expand until the energy rises again
        let (mut lo, mut hi) = (0.0, 2.0 * t);
        let mut fh = self.delta(hi);
        let mut expansions = 0;
        while fh < ft && expansions < 60 {
            lo = t;
            t = hi;
            ft = fh;
            hi *= 2.0;
            fh = self.delta(hi);
            expansions += 1;
        }
        // golden section on [lo, hi] around t
        let r = 0.5 * (5.0f64.sqrt() - 1.0);
        let (mut a, mut b) = (lo, hi);
        let mut x1 = b - r * (b - a);
        let mut x2 = a + r * (b - a);
        let (mut f1, mut f2) = (self.delta(x1), self.delta(x2));
        for _ in 0..80 {
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - r * (b - a);
                f1 = self.delta(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + r * (b - a);
                f2 = self.delta(x2);
            }
            if b - a <= 1e-10 * b {
                break;
            }
        }
        let (tb, fb) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
        if fb < ft {
            Some(tb)
        } else {
            Some(t)
        }
    }
}

/// Minimizes `f` over fields with the mass of `psi0`.
pub fn minimize(f: &GpFunctional, psi0: &ComplexField2D, opts: &MinimizeOptions) -> Result<MinimizeOutcome> {
    minimize_with(f, psi0, opts, &mut DirichletSine::new(f.grid()))
}

/// [`minimize`] with a caller-supplied Poisson solver for the preconditioner.
pub fn minimize_with<S: ShiftedPoisson>(
    f: &GpFunctional,
    psi0: &ComplexField2D,
    opts: &MinimizeOptions,
    poisson: &mut S,
) -> Result<MinimizeOutcome> {
    if *psi0.grid() != *f.grid() || *poisson.grid() != *f.grid() {
        return Err(Error::GridMismatch);
    }
    if !(opts.tol > 0.0 && opts.dt0 > 0.0) {
        return Err(Error::Domain("tol and dt0 must be positive".into()));
    }
    let mut psi = psi0.clone();
    psi.enforce_dirichlet();
    f.restrict(&mut psi);
    let mass = psi.mass();
    if !(mass > 0.0) {
        return Err(Error::ZeroField);
    }
    psi.normalize_to(mass)?;

    let mut pre = Preconditioner::new(poisson);
    let mut st = State::new(f, psi)?;
    let mut history = Vec::new();
    if opts.record_history {
        history.push(HistoryPoint { energy: st.energy.total, mass: st.psi.mass() });
    }

    let mut dir: Option<ComplexField2D> = None;
    let mut prev_gd = 0.0;
    let mut prev_pg: Option<ComplexField2D> = None;
    let mut iterations = 0;
    let mut converged = false;
    let mut failures = 0usize;

    loop {
        let (_, res) = st.residual(mass);
        if res <= opts.tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }

        // preconditioned gradient projected onto the tangent space in the P metric;
        // built from r = grad − 2μψ so the small quantities are never differences of large ones
        let r = st.tangent_gradient(mass);
        let alpha = pre.shift(&st.psi).max(1.0);
        let pr = pre.apply(alpha, &r, f);
        let ppsi = pre.apply(alpha, &st.psi, f);
        let c = st.psi.re_dot(&pr) / st.psi.re_dot(&ppsi);
        let mut d = pr;
        d.axpy(-c, &ppsi);
        let gd = r.re_dot(&d);

        let mut p = d.clone();
        p.scale(-1.0);
        if let (false, Some(old), Some(old_pg)) = (opts.steepest_descent, dir.as_ref(), prev_pg.as_ref()) {
            // Polak–Ribière+, with the previous direction moved into the new tangent space
            let beta = ((gd - r.re_dot(old_pg)) / prev_gd).max(0.0);
            if beta.is_finite() && beta > 0.0 {
                let mut moved = old.clone();
                project_tangent(&st.psi, &mut moved, mass);
                p.axpy(beta, &moved);
            }
        }
        let mut slope = 2.0 * r.re_dot(&p);
        if !(slope < 0.0) {
            p = d.clone();
            p.scale(-1.0);
            slope = -2.0 * gd;
        }
        if !(slope < 0.0) {
            // gradient vanishes to rounding along every admissible direction
            converged = res <= opts.tol;
            break;
        }

        let model = LineModel::new(f, &st.psi, &p, mass)?;
        let found = model.minimize(opts.dt0, opts.max_backtracks);
        let accepted = match found {
            Some(t) => Some(State::new(f, retract(&st.psi, &p, t, mass)?)?),
            None => None,
        };

        match accepted {
            Some(next) => {
                failures = 0;
                prev_gd = gd;
                prev_pg = Some(d);
                dir = Some(p);
                st = next;
                iterations += 1;
                if opts.record_history {
                    history.push(HistoryPoint { energy: st.energy.total, mass: st.psi.mass() });
                }
            }
            None => {
                // restart from steepest descent once before declaring failure
                failures += 1;
                dir = None;
                prev_pg = None;
                if failures > 1 {
                    break;
                }
            }
        }
    }

    st.psi.fix_gauge();
    // recompute on the gauge-fixed field so the outcome is self-consistent
    let fin = State::new(f, st.psi)?;
    let (mu, residual_norm) = fin.residual(mass);
    Ok(MinimizeOutcome {
        energy: fin.energy,
        field: fin.psi,
        mu,
        residual_norm,
        iterations,
        converged: converged && residual_norm <= opts.tol * 1.0001,
        history,
    })
}

/// One converged (or abandoned) point of a branch diagram.
#[derive(Debug, Clone)]
pub struct BranchRecord {
    pub omega: f64,
    pub epsilon: f64,
    pub seed: SeedSpec,
    pub energy: EnergyBreakdown,
    /// Eigenvalue of the stationary operator `L`; the multiplier of `E` is `2μ`.
    pub mu: f64,
    pub residual_norm: f64,
    pub census: VortexCensus,
    pub iterations: usize,
    pub converged: bool,
    /// `1 − E/E₀` against the vortex-free record at the same `ω`.
    pub rel_diff_vs_vortex_free: Option<f64>,
    /// The census differs from the one this seed family had at the previous `ω`.
    pub census_changed: bool,
}

impl BranchRecord {
    pub fn branch_id(&self) -> String {
        self.census.symmetry_class.label()
    }

    pub fn from_outcome(omega: f64, epsilon: f64, seed: SeedSpec, spec: &PotentialSpec, out: &MinimizeOutcome) -> Self {
        BranchRecord {
            omega,
            epsilon,
            seed,
            energy: out.energy,
            mu: out.mu,
            residual_norm: out.residual_norm,
            census: census(&out.field, spec),
            iterations: out.iterations,
            converged: out.converged,
            rel_diff_vs_vortex_free: None,
            census_changed: false,
        }
    }
}

/// Problem data shared by every point of a sweep.
#[derive(Debug, Clone)]
pub struct SweepProblem {
    pub spec: PotentialSpec,
    pub grid: Grid2D,
    pub epsilon: f64,
    pub sign: PotentialSign,
    pub confinement: Confinement,
    pub opts: MinimizeOptions,
}

impl SweepProblem {
    pub fn functional(&self, omega: f64) -> Result<GpFunctional> {
        GpFunctional::with_confinement(&self.spec, &self.grid, omega, self.epsilon, self.sign, self.confinement)
    }
}

/// Continues one seed family through `omegas` (ascending), warm-starting
/// every point from the previous converged field. `seed_field` replaces
/// [`make_seed`] when given (file-backed seeds).
pub fn sweep_family(
    problem: &SweepProblem,
    seed: &SeedSpec,
    seed_field: Option<&ComplexField2D>,
    omegas: &[f64],
) -> Result<Vec<(BranchRecord, ComplexField2D)>> {
    sweep_family_with(problem, seed, seed_field, omegas, &mut DirichletSine::new(&problem.grid))
}

/// [`sweep_family`] with a caller-supplied Poisson solver.
pub fn sweep_family_with<S: ShiftedPoisson>(
    problem: &SweepProblem,
    seed: &SeedSpec,
    seed_field: Option<&ComplexField2D>,
    omegas: &[f64],
    poisson: &mut S,
) -> Result<Vec<(BranchRecord, ComplexField2D)>> {
    if omegas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain("omega list must be strictly increasing".into()));
    }
    let mut psi = match seed_field {
        Some(f) => f.clone(),
        None => make_seed(seed, &problem.spec, &problem.grid)?,
    };
    let mut previous: Option<SymmetryClass> = Some(census(&psi, &problem.spec).symmetry_class);
    let base = problem.functional(0.0)?;
    let mut out = Vec::with_capacity(omegas.len());
    for &omega in omegas {
        let f = base.clone().with_omega(omega);
        let res = minimize_with(&f, &psi, &problem.opts, poisson)?;
        let mut rec = BranchRecord::from_outcome(omega, problem.epsilon, seed.clone(), &problem.spec, &res);
        let class = rec.census.symmetry_class;
        rec.census_changed = previous.map_or(false, |p| p != class);
        previous = Some(class);
        psi = res.field.clone();
        out.push((rec, res.field));
    }
    Ok(out)
}

/// Sorts by `(ω, branch_id, seed label)` and fills the relative differences
/// against the lowest vortex-free record at each `ω`.
pub fn finalize_records(records: &mut [BranchRecord]) {
    records.sort_by(|a, b| {
        a.omega
            .total_cmp(&b.omega)
            .then_with(|| a.branch_id().cmp(&b.branch_id()))
            .then_with(|| a.seed.label().cmp(&b.seed.label()))
    });
    let mut start = 0;
    while start < records.len() {
        let omega = records[start].omega;
        let mut end = start;
        while end < records.len() && records[end].omega == omega {
            end += 1;
        }
        let e0 = records[start..end]
            .iter()
            .filter(|r| r.census.symmetry_class == SymmetryClass::VortexFree)
            .map(|r| r.energy.total)
            .fold(f64::INFINITY, f64::min);
        for r in &mut records[start..end] {
            r.rel_diff_vs_vortex_free = if e0.is_finite() { Some(1.0 - r.energy.total / e0) } else { None };
        }
        start = end;
    }
}

/// Sequential sweep over every seed family.
pub fn sweep(problem: &SweepProblem, omegas: &[f64], seeds: &[SeedSpec]) -> Result<Vec<BranchRecord>> {
    let mut records = Vec::new();
    for seed in seeds {
        for (rec, _) in sweep_family(problem, seed, None, omegas)? {
            records.push(rec);
        }
    }
    finalize_records(&mut records);
    Ok(records)
}
