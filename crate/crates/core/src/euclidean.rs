//! Imaginary-time (Euclidean) continuation of the rotating GP dynamics.
//!
//! With `ψ = u + iv` and `t = −iτ`, `u` and `v` become independent complex
//! fields obeying
//!
//! ```text
//! ∂τ u = −i R_v,    ∂τ v = i R_u,
//! R_u = −½Δu − ℳv + c(u² + v² + V_eff)u − μu
//! R_v = −½Δv + ℳu + c(u² + v² + V_eff)v − μv
//! ```
//!
//! where `c = 1/(2ε²)` and squares are complex squares. For real `u, v` the
//! pair `(R_u, R_v)` is `Lψ − μψ` of the energy module, so stationary states
//! are fixed points. The system is elliptic in `(τ, r)` and cannot be
//! integrated forward in `τ`; paths are found as a boundary-value problem on
//! the compactified time `s = tanh τ ∈ [−1, 1]`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;
#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

use crate::energy::GpFunctional;
use crate::error::{Error, Result};
use crate::grid::{laplacian_into, rotation_into, tree_sum, ComplexField2D, Grid2D};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The complexified `(u, v)` of one Euclidean time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexifiedPair {
    grid: Grid2D,
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
}

impl ComplexifiedPair {
    pub fn zeros(grid: Grid2D) -> Self {
        let n = grid.len();
        ComplexifiedPair { grid, u: vec![ZERO; n], v: vec![ZERO; n] }
    }

    pub fn new(grid: Grid2D, u: Vec<Complex64>, v: Vec<Complex64>) -> Result<Self> {
        if u.len() != grid.len() || v.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(ComplexifiedPair { grid, u, v })
    }

    /// Real pair `u = Re ψ`, `v = Im ψ`.
    pub fn from_field(psi: &ComplexField2D) -> Self {
        let to = |a: &[f64]| a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        ComplexifiedPair { grid: *psi.grid(), u: to(&psi.u), v: to(&psi.v) }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Largest imaginary part over both fields.
    pub fn max_imag(&self) -> f64 {
        self.u.iter().chain(&self.v).fold(0.0, |m, z| m.max(z.im.abs()))
    }

    /// `ψ = Re u + i Re v`, dropping the imaginary parts.
    pub fn real_field(&self) -> ComplexField2D {
        let re = |a: &[Complex64]| a.iter().map(|z| z.re).collect();
        ComplexField2D::new(self.grid, re(&self.u), re(&self.v)).expect("lengths match the grid")
    }

    fn axpy(&mut self, a: Complex64, other: &ComplexifiedPair) {
        for (x, y) in self.u.iter_mut().zip(&other.u) {
            *x += a * y;
        }
        for (x, y) in self.v.iter_mut().zip(&other.v) {
            *x += a * y;
        }
    }

    /// `∫ (|u|² + |v|²)`.
    pub fn norm_sqr(&self) -> f64 {
        self.grid.integrate(|k| self.u[k].norm_sqr() + self.v[k].norm_sqr())
    }
}

/// The Euclidean equations for one functional and a frozen `μ`.
#[derive(Debug, Clone)]
pub struct EuclideanSystem {
    f: GpFunctional,
    mu: f64,
}

impl EuclideanSystem {
    pub fn new(f: GpFunctional, mu: f64) -> Self {
        EuclideanSystem { f, mu }
    }

    /// Uses the `μ` of a converged state.
    pub fn from_state(f: GpFunctional, psi: &ComplexField2D) -> Result<Self> {
        let mu = f.residual(psi)?.mu;
        Ok(EuclideanSystem { f, mu })
    }

    pub fn functional(&self) -> &GpFunctional {
        &self.f
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    fn coupling(&self) -> f64 {
        if self.f.has_interaction() {
            self.f.coupling()
        } else {
            0.0
        }
    }

    fn check(&self, p: &ComplexifiedPair) -> Result<()> {
        if p.grid != *self.f.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `(R_u, R_v)`.
    fn stationary_parts(&self, p: &ComplexifiedPair) -> (Vec<Complex64>, Vec<Complex64>) {
        let g = &p.grid;
        let n = g.len();
        let (mut lu, mut lv) = (vec![ZERO; n], vec![ZERO; n]);
        let (mut mu_, mut mv) = (vec![ZERO; n], vec![ZERO; n]);
        laplacian_into(g, &p.u, &mut lu);
        laplacian_into(g, &p.v, &mut lv);
        rotation_into(g, &p.u, self.f.omega(), &mut mu_);
        rotation_into(g, &p.v, self.f.omega(), &mut mv);
        let c = self.coupling();
        let veff = self.f.veff();
        let scale = self.f.coupling();
        let active = self.f.active();
        let (mut ru, mut rv) = (vec![ZERO; n], vec![ZERO; n]);
        for k in 0..n {
            if !active[k] {
                continue;
            }
            let (u, v) = (p.u[k], p.v[k]);
            let w = (u * u + v * v) * c + scale * veff[k] - self.mu;
            ru[k] = lu[k] * -0.5 - mv[k] + w * u;
            rv[k] = lv[k] * -0.5 + mu_[k] + w * v;
        }
        (ru, rv)
    }

    /// `(∂τ u, ∂τ v)`.
    pub fn rhs(&self, p: &ComplexifiedPair) -> Result<ComplexifiedPair> {
        self.check(p)?;
        let (ru, rv) = self.stationary_parts(p);
        Ok(ComplexifiedPair {
            grid: p.grid,
            u: rv.iter().map(|z| -I * z).collect(),
            v: ru.iter().map(|z| I * z).collect(),
        })
    }

    /// Derivative of [`Self::rhs`] at `at` applied to `d`.
    fn linearized_rhs(&self, at: &ComplexifiedPair, d: &ComplexifiedPair) -> ComplexifiedPair {
        let g = &at.grid;
        let n = g.len();
        let (mut lu, mut lv) = (vec![ZERO; n], vec![ZERO; n]);
        let (mut mu_, mut mv) = (vec![ZERO; n], vec![ZERO; n]);
        laplacian_into(g, &d.u, &mut lu);
        laplacian_into(g, &d.v, &mut lv);
        rotation_into(g, &d.u, self.f.omega(), &mut mu_);
        rotation_into(g, &d.v, self.f.omega(), &mut mv);
        let c = self.coupling();
        let veff = self.f.veff();
        let scale = self.f.coupling();
        let active = self.f.active();
        let mut out = ComplexifiedPair::zeros(*g);
        for k in 0..n {
            if !active[k] {
                continue;
            }
            let (u, v) = (at.u[k], at.v[k]);
            let (du, dv) = (d.u[k], d.v[k]);
            let w = (u * u + v * v) * c + scale * veff[k] - self.mu;
            let cross = (u * du + v * dv) * (2.0 * c);
            let ru = lu[k] * -0.5 - mv[k] + w * du + cross * u;
            let rv = lv[k] * -0.5 + mu_[k] + w * dv + cross * v;
            out.u[k] = -I * rv;
            out.v[k] = I * ru;
        }
        out
    }

    /// Nodal density of `L₁ = ½((∇u)² + (∇v)²) + vℳu − uℳv + (cV_eff − μ)(u² + v²) + ½c(u² + v²)²`.
    ///
    /// The gradient terms are written as `−½(uΔu + vΔv)`, which integrates to
    /// the same value for fields vanishing on the boundary.
    pub fn l1_density(&self, p: &ComplexifiedPair) -> Result<Vec<Complex64>> {
        self.check(p)?;
        let g = &p.grid;
        let n = g.len();
        let (mut lu, mut lv) = (vec![ZERO; n], vec![ZERO; n]);
        let (mut mu_, mut mv) = (vec![ZERO; n], vec![ZERO; n]);
        laplacian_into(g, &p.u, &mut lu);
        laplacian_into(g, &p.v, &mut lv);
        rotation_into(g, &p.u, self.f.omega(), &mut mu_);
        rotation_into(g, &p.v, self.f.omega(), &mut mv);
        let c = self.coupling();
        let veff = self.f.veff();
        let scale = self.f.coupling();
        let active = self.f.active();
        Ok((0..n)
            .map(|k| {
                if !active[k] {
                    return ZERO;
                }
                let (u, v) = (p.u[k], p.v[k]);
                let rho = u * u + v * v;
                (u * lu[k] + v * lv[k]) * -0.5
                    + v * mu_[k]
                    - u * mv[k]
                    + rho * (scale * veff[k] - self.mu)
                    + rho * rho * (0.5 * c)
            })
            .collect())
    }

    /// `∫ L₁`. For a real pair this is `E/2 − μN`.
    pub fn l1_integral(&self, p: &ComplexifiedPair) -> Result<Complex64> {
        let d = self.l1_density(p)?;
        Ok(p.grid.integrate_complex(|k| d[k]))
    }

    /// Real-time `∂t ψ = −i(Lψ − μψ)` for a real field.
    pub fn real_time_rhs(&self, psi: &ComplexField2D) -> Result<ComplexField2D> {
        let p = ComplexifiedPair::from_field(psi);
        self.check(&p)?;
        let (ru, rv) = self.stationary_parts(&p);
        let u: Vec<f64> = rv.iter().map(|z| z.re).collect();
        let v: Vec<f64> = ru.iter().map(|z| -z.re).collect();
        ComplexField2D::new(p.grid, u, v)
    }

    /// Growth rate of sine mode `(p, q)` (one-based) under the Euclidean
    /// flow linearized about `u = v = 0`: `√|⟨φ, J²φ⟩| / ‖φ‖` for
    /// `φ = (sin, 0)`. Grows like `|k|²/2` at large wavenumber.
    ///
    /// The sine modes span the whole grid rectangle, so the rate is clean
    /// only with [`crate::Confinement::Box`]; an irregular support mask cuts
    /// the modes off at its edge.
    pub fn growth_rate(&self, p: usize, q: usize) -> Result<f64> {
        let g = *self.f.grid();
        let (nx, ny) = (g.nx(), g.ny());
        if p == 0 || q == 0 || p > nx - 2 || q > ny - 2 {
            return Err(Error::Domain("mode index outside the grid".into()));
        }
        let mut phi = ComplexifiedPair::zeros(g);
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let sx = (core::f64::consts::PI * (p * i) as f64 / (nx - 1) as f64).sin();
                let sy = (core::f64::consts::PI * (q * j) as f64 / (ny - 1) as f64).sin();
                phi.u[g.idx(i, j)] = Complex64::new(sx * sy, 0.0);
            }
        }
        let zero = ComplexifiedPair::zeros(g);
        let once = self.linearized_rhs(&zero, &phi);
        let twice = self.linearized_rhs(&zero, &once);
        let num = g.integrate_complex(|k| phi.u[k] * twice.u[k] + phi.v[k] * twice.v[k]);
        Ok((num.norm() / phi.norm_sqr()).sqrt())
    }
}

/// `N` Chebyshev–Lobatto points `s_k = −cos(πk/(N−1))`, endpoints included.
pub fn lobatto_nodes(n: usize) -> Result<Vec<f64>> {
    if n < 3 {
        return Err(Error::Domain("a path needs at least three time nodes".into()));
    }
    let m = (n - 1) as f64;
    let mut s: Vec<f64> = (0..n).map(|k| -(core::f64::consts::PI * k as f64 / m).cos()).collect();
    // exact symmetry and exact endpoints
    for k in 0..n / 2 {
        let a = 0.5 * (s[n - 1 - k] - s[k]);
        s[k] = -a;
        s[n - 1 - k] = a;
    }
    if n % 2 == 1 {
        s[n / 2] = 0.0;
    }
    s[0] = -1.0;
    s[n - 1] = 1.0;
    Ok(s)
}

/// Trapezoid weights on the nodes `s`.
fn trapezoid_weights(s: &[f64]) -> Vec<f64> {
    let n = s.len();
    (0..n)
        .map(|k| {
            let lo = if k == 0 { s[0] } else { s[k - 1] };
            let hi = if k + 1 == n { s[n - 1] } else { s[k + 1] };
            0.5 * (hi - lo)
        })
        .collect()
}

/// Three-point centred first-derivative weights at interior node `k`.
fn derivative_weights(s: &[f64], k: usize) -> [f64; 3] {
    let h1 = s[k] - s[k - 1];
    let h2 = s[k + 1] - s[k];
    [-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2))]
}

/// States on the compactified time grid; the first and last are the real
/// end states at `τ = ∓∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanPath {
    pub s: Vec<f64>,
    pub states: Vec<ComplexifiedPair>,
}

impl EuclideanPath {
    pub fn new(s: Vec<f64>, states: Vec<ComplexifiedPair>) -> Result<Self> {
        if s.len() < 3 || s.len() != states.len() {
            return Err(Error::Domain("path needs at least three nodes, one state per node".into()));
        }
        if s.windows(2).any(|w| !(w[0] < w[1])) || s.iter().any(|x| !(x.abs() <= 1.0)) {
            return Err(Error::Domain("time nodes must increase inside [−1, 1]".into()));
        }
        let grid = *states[0].grid();
        if states.iter().any(|p| *p.grid() != grid) {
            return Err(Error::GridMismatch);
        }
        Ok(EuclideanPath { s, states })
    }

    /// `τ` at every node; `±∞` at the ends.
    pub fn tau(&self) -> Vec<f64> {
        self.s.iter().map(|&s| if s.abs() >= 1.0 { s * f64::INFINITY } else { s.atanh() }).collect()
    }

    /// The path with `τ → −τ`.
    pub fn reversed(&self) -> EuclideanPath {
        EuclideanPath {
            s: self.s.iter().rev().map(|x| -x).collect(),
            states: self.states.iter().rev().cloned().collect(),
        }
    }

    /// Linear interpolation between `left` and `right` plus `i·amp·s(1 − s²)`
    /// times the mean end state, an odd imaginary kick off the real plane.
    pub fn initial(left: &ComplexField2D, right: &ComplexField2D, nodes: usize, amp: f64) -> Result<Self> {
        if !left.same_grid(right) {
            return Err(Error::GridMismatch);
        }
        let s = lobatto_nodes(nodes)?;
        let (a, b) = (ComplexifiedPair::from_field(left), ComplexifiedPair::from_field(right));
        let last = s.len() - 1;
        let states = s
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                if k == 0 {
                    return a.clone();
                }
                if k == last {
                    return b.clone();
                }
                let wr = 0.5 * (1.0 + x);
                let kick = I * (amp * x * (1.0 - x * x));
                let mut p = ComplexifiedPair::zeros(*a.grid());
                p.axpy(Complex64::new(1.0 - wr, 0.0), &a);
                p.axpy(Complex64::new(wr, 0.0), &b);
                p.axpy(kick * 0.5, &a);
                p.axpy(kick * 0.5, &b);
                p
            })
            .collect();
        EuclideanPath::new(s, states)
    }
}

/// The two parts of the regularized action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionParts {
    /// `∫ i(v ∂τu − u ∂τv)`, odd under `τ → −τ`.
    pub kinetic: Complex64,
    /// `∫ (L₁ − L₁(end))`, even under `τ → −τ`.
    pub potential: Complex64,
}

impl ActionParts {
    pub fn total(&self) -> Complex64 {
        self.kinetic + self.potential
    }
}

/// Relative tolerance on the mismatch of the two end-state values of `∫L₁`.
pub const ENDPOINT_TOLERANCE: f64 = 1e-6;

/// `S_E = ∫dτ ∫dr [L_E − L₁(end)]`.
///
/// The time-derivative part is a line integral and is summed segment by
/// segment, `Σ i∫(v_k u_{k+1} − u_k v_{k+1})`, which needs no Jacobian. The
/// potential part carries `dτ = ds/(1 − s²)` and vanishes at the ends.
pub fn regularized_action(sys: &EuclideanSystem, path: &EuclideanPath) -> Result<ActionParts> {
    let n = path.states.len();
    let grid = *path.states[0].grid();
    let left = sys.l1_integral(&path.states[0])?;
    let right = sys.l1_integral(&path.states[n - 1])?;
    let scale = left.norm().max(right.norm()).max(f64::MIN_POSITIVE);
    if (left - right).norm() > ENDPOINT_TOLERANCE * scale {
        return Err(Error::EndpointMismatch { left: left.re, right: right.re });
    }
    let w = trapezoid_weights(&path.s);
    let mut kin_re = Vec::with_capacity(n);
    let mut kin_im = Vec::with_capacity(n);
    for k in 0..n - 1 {
        let (a, b) = (&path.states[k], &path.states[k + 1]);
        let seg = grid.integrate_complex(|j| a.v[j] * b.u[j] - a.u[j] * b.v[j]) * I;
        kin_re.push(seg.re);
        kin_im.push(seg.im);
    }
    let mut pot_re = Vec::with_capacity(n);
    let mut pot_im = Vec::with_capacity(n);
    for k in 1..n - 1 {
        let jac = 1.0 / (1.0 - path.s[k] * path.s[k]);
        let d = (sys.l1_integral(&path.states[k])? - left) * (w[k] * jac);
        pot_re.push(d.re);
        pot_im.push(d.im);
    }
    Ok(ActionParts {
        kinetic: Complex64::new(tree_sum(&kin_re), tree_sum(&kin_im)),
        potential: Complex64::new(tree_sum(&pot_re), tree_sum(&pot_im)),
    })
}

/// What the path optimizer drives to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PathObjective {
    /// Integrated squared residual of the equations of motion.
    #[default]
    Residual,
    /// `|S_E|²`, a single complex number; kept for comparison only, since its
    /// zeros need not solve the equations of motion.
    ActionModulus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstantonOptions {
    /// Time nodes including both ends.
    pub nodes: usize,
    /// Target for [`path_residual`].
    pub path_tol: f64,
    pub max_newton: usize,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
    /// Relative tolerance of each inner linear solve.
    pub gmres_tol: f64,
    /// Size of the imaginary kick of the initial path.
    pub perturbation: f64,
    pub objective: PathObjective,
}

impl Default for InstantonOptions {
    fn default() -> Self {
        InstantonOptions {
            nodes: 33,
            path_tol: 1e-4,
            max_newton: 40,
            gmres_restart: 60,
            gmres_max_iter: 1200,
            gmres_tol: 1e-4,
            perturbation: 1e-3,
            objective: PathObjective::Residual,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InstantonOutcome {
    pub path: EuclideanPath,
    pub residual: f64,
    pub action: ActionParts,
    pub iterations: usize,
    pub converged: bool,
    /// Residual after every outer iteration, starting with the initial path.
    pub history: Vec<f64>,
    /// `(relative residual, iterations)` of every inner linear solve.
    pub linear_solves: Vec<(f64, usize)>,
}

/// Residual `(1 − s²) ∂s U − rhs(U)` at every interior node, ends excluded.
pub fn path_residual_fields(sys: &EuclideanSystem, path: &EuclideanPath) -> Result<Vec<ComplexifiedPair>> {
    let n = path.states.len();
    let mut out = Vec::with_capacity(n - 2);
    for k in 1..n - 1 {
        let [a, b, c] = derivative_weights(&path.s, k);
        let jac = 1.0 - path.s[k] * path.s[k];
        let mut r = sys.rhs(&path.states[k])?;
        for x in r.u.iter_mut().chain(r.v.iter_mut()) {
            *x = -*x;
        }
        r.axpy(Complex64::new(a * jac, 0.0), &path.states[k - 1]);
        r.axpy(Complex64::new(b * jac, 0.0), &path.states[k]);
        r.axpy(Complex64::new(c * jac, 0.0), &path.states[k + 1]);
        out.push(r);
    }
    Ok(out)
}

fn weighted_norm(s: &[f64], fields: &[ComplexifiedPair], mass: f64) -> f64 {
    let w = trapezoid_weights(s);
    let terms: Vec<f64> = fields.iter().enumerate().map(|(k, r)| w[k + 1] * r.norm_sqr()).collect();
    (tree_sum(&terms) / mass).sqrt()
}

/// `(Σ_s w_s ∫ |R|² / N)^{1/2}`, the equation-of-motion residual of a path
/// relative to the end-state mass, with `s`-trapezoid weights.
pub fn path_residual(sys: &EuclideanSystem, path: &EuclideanPath) -> Result<f64> {
    let fields = path_residual_fields(sys, path)?;
    let mass = path.states[0].norm_sqr().max(f64::MIN_POSITIVE);
    Ok(weighted_norm(&path.s, &fields, mass))
}

/// Flat complex vector of the interior states, `u` then `v` per node.
fn flatten(states: &[ComplexifiedPair]) -> Vec<Complex64> {
    let mut x = Vec::new();
    for p in states {
        x.extend_from_slice(&p.u);
        x.extend_from_slice(&p.v);
    }
    x
}

fn unflatten(grid: Grid2D, x: &[Complex64]) -> Vec<ComplexifiedPair> {
    let n = grid.len();
    x.chunks(2 * n)
        .map(|c| ComplexifiedPair { grid, u: c[..n].to_vec(), v: c[n..].to_vec() })
        .collect()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        let z = x.conj() * y;
        re += z.re;
        im += z.im;
    }
    Complex64::new(re, im)
}

fn vnorm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Newton linearization of the path residual around fixed states.
struct PathOperator<'a> {
    sys: &'a EuclideanSystem,
    s: &'a [f64],
    states: &'a [ComplexifiedPair],
}

impl<'a> PathOperator<'a> {
    /// `J d` for interior perturbations `d` (ends held fixed).
    fn apply(&self, d: &[Complex64]) -> Vec<Complex64> {
        let grid = *self.sys.functional().grid();
        let dp = unflatten(grid, d);
        let m = dp.len();
        let mut out = Vec::with_capacity(d.len());
        for k in 0..m {
            let node = k + 1;
            let [a, b, c] = derivative_weights(self.s, node);
            let jac = 1.0 - self.s[node] * self.s[node];
            let mut r = self.sys.linearized_rhs(&self.states[node], &dp[k]);
            for x in r.u.iter_mut().chain(r.v.iter_mut()) {
                *x = -*x;
            }
            if k > 0 {
                r.axpy(Complex64::new(a * jac, 0.0), &dp[k - 1]);
            }
            r.axpy(Complex64::new(b * jac, 0.0), &dp[k]);
            if k + 1 < m {
                r.axpy(Complex64::new(c * jac, 0.0), &dp[k + 1]);
            }
            out.extend_from_slice(&r.u);
            out.extend_from_slice(&r.v);
        }
        out
    }
}

/// Exact inverse of the path operator with the spatial coupling dropped.
///
/// Keeping only the on-site part of `−½Δ` and the local `(u, v)` coupling,
/// the linearized path equations split into one system of size `2m` along
/// `s` per grid point, factored once per Newton step. The on-site part
/// dominates when `ε` is at or below the grid spacing.
struct LocalPreconditioner {
    points: Vec<(usize, LU<Complex64, Dyn, Dyn>)>,
    m: usize,
    n: usize,
}

impl LocalPreconditioner {
    fn new(sys: &EuclideanSystem, s: &[f64], states: &[ComplexifiedPair]) -> Self {
        let f = sys.functional();
        let grid = *f.grid();
        let n = grid.len();
        let m = states.len() - 2;
        let c = sys.coupling();
        let scale = f.coupling();
        let onsite = 1.0 / (grid.hx() * grid.hx()) + 1.0 / (grid.hy() * grid.hy());
        let weights: Vec<([f64; 3], f64)> =
            (1..=m).map(|node| (derivative_weights(s, node), 1.0 - s[node] * s[node])).collect();
        let mut points = Vec::new();
        for j in 0..n {
            if !f.active()[j] {
                continue;
            }
            let mut a = DMatrix::<Complex64>::zeros(2 * m, 2 * m);
            for k in 0..m {
                let ([wl, wc, wr], jac) = weights[k];
                let (u, v) = (states[k + 1].u[j], states[k + 1].v[j]);
                let w = (u * u + v * v) * c + scale * f.veff()[j] - sys.mu + onsite;
                // δR_u = (w + 2cu²)δu + 2cuv δv,  δR_v = 2cuv δu + (w + 2cv²)δv
                let (huu, huv, hvv) = (w + u * u * (2.0 * c), u * v * (2.0 * c), w + v * v * (2.0 * c));
                let (ru, rv) = (2 * k, 2 * k + 1);
                for (col, wt) in [(k as isize - 1, wl), (k as isize, wc), (k as isize + 1, wr)] {
                    if col < 0 || col as usize >= m {
                        continue;
                    }
                    let col = col as usize;
                    a[(ru, 2 * col)] += Complex64::new(wt * jac, 0.0);
                    a[(rv, 2 * col + 1)] += Complex64::new(wt * jac, 0.0);
                }
                // residual rows are (1 − s²)Dδu + iδR_v and (1 − s²)Dδv − iδR_u
                a[(ru, 2 * k)] += I * huv;
                a[(ru, 2 * k + 1)] += I * hvv;
                a[(rv, 2 * k)] -= I * huu;
                a[(rv, 2 * k + 1)] -= I * huv;
            }
            points.push((j, a.lu()));
        }
        LocalPreconditioner { points, m, n }
    }

    fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        let (m, n) = (self.m, self.n);
        let mut out = vec![ZERO; f.len()];
        let mut rhs = DVector::<Complex64>::zeros(2 * m);
        for (j, lu) in &self.points {
            for k in 0..m {
                rhs[2 * k] = f[2 * k * n + j];
                rhs[2 * k + 1] = f[2 * k * n + n + j];
            }
            if lu.solve_mut(&mut rhs) {
                for k in 0..m {
                    out[2 * k * n + j] = rhs[2 * k];
                    out[2 * k * n + n + j] = rhs[2 * k + 1];
                }
            }
        }
        out
    }
}

/// Restarted GMRES with right preconditioning; returns `x` with
/// `‖b − A x‖ ≤ tol ‖b‖` when it gets there.
fn gmres<A, P>(
    apply: &mut A,
    precond: &mut P,
    b: &[Complex64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> (Vec<Complex64>, f64, usize)
where
    A: FnMut(&[Complex64]) -> Vec<Complex64>,
    P: FnMut(&[Complex64]) -> Vec<Complex64>,
{
    let n = b.len();
    let mut x = vec![ZERO; n];
    let bnorm = vnorm(b);
    if bnorm == 0.0 {
        return (x, 0.0, 0);
    }
    let mut r = b.to_vec();
    let mut done = 0;
    while done < max_iter {
        let beta = vnorm(&r);
        if beta <= tol * bnorm {
            break;
        }
        let mut basis: Vec<Vec<Complex64>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut h: Vec<Vec<Complex64>> = Vec::new();
        let mut cs: Vec<f64> = Vec::new();
        let mut sn: Vec<Complex64> = Vec::new();
        let mut g = vec![Complex64::new(beta, 0.0)];
        let mut zs: Vec<Vec<Complex64>> = Vec::new();
        for j in 0..restart {
            let z = precond(&basis[j]);
            let mut w = apply(&z);
            zs.push(z);
            let mut col = Vec::with_capacity(j + 2);
            for v in &basis {
                let hij = dot(v, &w);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= hij * vi;
                }
                col.push(hij);
            }
            let wn = vnorm(&w);
            col.push(Complex64::new(wn, 0.0));
            // apply the previous rotations to the new column
            for i in 0..j {
                let t = col[i] * cs[i] + sn[i] * col[i + 1];
                col[i + 1] = col[i + 1] * cs[i] - sn[i].conj() * col[i];
                col[i] = t;
            }
            let (a, bb) = (col[j], col[j + 1]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if den == 0.0 {
                (1.0, ZERO)
            } else if a.norm() == 0.0 {
                (0.0, Complex64::new(1.0, 0.0))
            } else {
                let c = a.norm() / den;
                (c, (a / a.norm()) * bb.conj() / den)
            };
            col[j] = a * c + s * bb;
            col[j + 1] = ZERO;
            let gj = g[j];
            g.push(-s.conj() * gj);
            g[j] = gj * c;
            cs.push(c);
            sn.push(s);
            h.push(col);
            done += 1;
            let res = g[j + 1].norm();
            if res <= tol * bnorm || wn == 0.0 || done >= max_iter {
                break;
            }
            basis.push(w.iter().map(|z| z / wn).collect());
        }
        // back substitution on the triangular system
        let k = h.len();
        let mut y = vec![ZERO; k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for (jj, yj) in y.iter().enumerate().skip(i + 1) {
                acc -= h[jj][i] * yj;
            }
            y[i] = acc / h[i][i];
        }
        for (yi, z) in y.iter().zip(&zs) {
            for (xi, zi) in x.iter_mut().zip(z) {
                *xi += yi * zi;
            }
        }
        let ax = apply(&x);
        r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        if h.is_empty() || g[k].norm() <= tol * bnorm {
            break;
        }
    }
    (x, vnorm(&r) / bnorm, done)
}

fn with_interior(path: &EuclideanPath, interior: Vec<ComplexifiedPair>) -> EuclideanPath {
    let n = path.states.len();
    let mut states = Vec::with_capacity(n);
    states.push(path.states[0].clone());
    states.extend(interior);
    states.push(path.states[n - 1].clone());
    EuclideanPath { s: path.s.clone(), states }
}

/// Path between two degenerate end states.
///
/// The interior nodes are solved for by Newton's method on the
/// equation-of-motion residual, each step by preconditioned GMRES, with
/// the ends clamped. The equations are never marched in `τ`.
pub fn find_instanton(
    sys: &EuclideanSystem,
    left: &ComplexField2D,
    right: &ComplexField2D,
    opts: &InstantonOptions,
) -> Result<InstantonOutcome> {
    if *left.grid() != *sys.functional().grid() || !left.same_grid(right) {
        return Err(Error::GridMismatch);
    }
    if !(opts.path_tol > 0.0) {
        return Err(Error::Domain("path_tol must be positive".into()));
    }
    let path = EuclideanPath::initial(left, right, opts.nodes, opts.perturbation)?;
    // fail early on non-degenerate ends
    regularized_action(sys, &path)?;
    match opts.objective {
        PathObjective::Residual => newton_path(sys, path, opts),
        PathObjective::ActionModulus => descend_action(sys, path, opts),
    }
}

fn newton_path(sys: &EuclideanSystem, mut path: EuclideanPath, opts: &InstantonOptions) -> Result<InstantonOutcome> {
    let grid = *sys.functional().grid();
    let mass = path.states[0].norm_sqr().max(f64::MIN_POSITIVE);
    let mut fields = path_residual_fields(sys, &path)?;
    let mut res = weighted_norm(&path.s, &fields, mass);
    let mut history = vec![res];
    let mut linear_solves = Vec::new();
    let mut iterations = 0;
    while res > opts.path_tol && iterations < opts.max_newton {
        let n = path.states.len();
        let rhs: Vec<Complex64> = flatten(&fields).into_iter().map(|z| -z).collect();
        let (step, lin_res, lin_it) = {
            let op = PathOperator { sys, s: &path.s, states: &path.states };
            let pre = LocalPreconditioner::new(sys, &path.s, &path.states);
            gmres(
                &mut |d: &[Complex64]| op.apply(d),
                &mut |d: &[Complex64]| pre.apply(d),
                &rhs,
                opts.gmres_tol,
                opts.gmres_restart,
                opts.gmres_max_iter,
            )
        };
        let base = flatten(&path.states[1..n - 1]);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial: Vec<Complex64> = base.iter().zip(&step).map(|(x, d)| x + d * t).collect();
            let cand = with_interior(&path, unflatten(grid, &trial));
            let cf = path_residual_fields(sys, &cand)?;
            let cr = weighted_norm(&cand.s, &cf, mass);
            if cr.is_finite() && cr < res {
                accepted = Some((cand, cf, cr));
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((cand, cf, cr)) => {
                path = cand;
                fields = cf;
                res = cr;
                history.push(res);
            }
            None => break,
        }
        linear_solves.push((lin_res, lin_it));
    }
    let action = regularized_action(sys, &path)?;
    Ok(InstantonOutcome {
        converged: res <= opts.path_tol,
        path,
        residual: res,
        action,
        iterations,
        history,
        linear_solves,
    })
}

/// Holomorphic derivative of `S_E` with respect to every interior value,
/// per unit cell area.
fn action_derivative(sys: &EuclideanSystem, path: &EuclideanPath) -> Result<Vec<ComplexifiedPair>> {
    let n = path.states.len();
    let w = trapezoid_weights(&path.s);
    let mut out = Vec::with_capacity(n - 2);
    for k in 1..n - 1 {
        let (prev, cur, next) = (&path.states[k - 1], &path.states[k], &path.states[k + 1]);
        let jac = w[k] / (1.0 - path.s[k] * path.s[k]);
        let (ru, rv) = sys.stationary_parts(cur);
        let len = cur.u.len();
        let mut d = ComplexifiedPair::zeros(*cur.grid());
        for j in 0..len {
            d.u[j] = I * (prev.v[j] - next.v[j]) + ru[j] * (2.0 * jac);
            d.v[j] = I * (next.u[j] - prev.u[j]) + rv[j] * (2.0 * jac);
        }
        out.push(d);
    }
    Ok(out)
}

fn descend_action(sys: &EuclideanSystem, mut path: EuclideanPath, opts: &InstantonOptions) -> Result<InstantonOutcome> {
    let grid = *sys.functional().grid();
    let n = path.states.len();
    let mut s = regularized_action(sys, &path)?.total();
    let mut history = vec![path_residual(sys, &path)?];
    let mut iterations = 0;
    let mut t = 1.0;
    while s.norm() > opts.path_tol && iterations < opts.max_newton * 50 {
        let grad = action_derivative(sys, &path)?;
        // steepest descent of |S|² for holomorphic S: −S · conj(∂S)
        let dir: Vec<Complex64> = flatten(&grad).into_iter().map(|g| -(g.conj() * s)).collect();
        let base = flatten(&path.states[1..n - 1]);
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<Complex64> = base.iter().zip(&dir).map(|(x, d)| x + d * t).collect();
            let cand = with_interior(&path, unflatten(grid, &trial));
            let cs = regularized_action(sys, &cand)?.total();
            if cs.norm() < s.norm() {
                accepted = Some((cand, cs));
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((cand, cs)) => {
                path = cand;
                s = cs;
                t *= 2.0;
                history.push(path_residual(sys, &path)?);
            }
            None => break,
        }
    }
    let residual = path_residual(sys, &path)?;
    let action = regularized_action(sys, &path)?;
    Ok(InstantonOutcome {
        converged: s.norm() <= opts.path_tol,
        path,
        residual,
        action,
        iterations,
        history,
        linear_solves: Vec::new(),
    })
}

/// Both readings of the tunnelling exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunnelingTime {
    /// `exp(|Re S_E| / ħ)`: grows with the barrier action, as a time must.
    pub time: f64,
    /// `exp(−|Re S_E| / ħ)`: the matching suppression of the probability.
    pub probability: f64,
}

/// Tunnelling time up to the prefactor, which is not computed.
pub fn tunneling_time(action: Complex64, hbar: f64) -> Result<TunnelingTime> {
    if !(hbar > 0.0) || !hbar.is_finite() {
        return Err(Error::Domain("hbar must be positive".into()));
    }
    let x = action.re.abs() / hbar;
    Ok(TunnelingTime { time: x.exp(), probability: (-x).exp() })
}
