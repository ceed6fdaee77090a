//! Rectangular node grid, complex fields on it, and the finite-difference
//! operators entering the energy and the equations of motion.
//!
//! Nodes are stored row-major with `y` as the outer index: node `(i, j)` lives
//! at `j * nx + i`. Boundary nodes carry the homogeneous Dirichlet condition;
//! every operator here returns zero on them.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;
#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};

/// Smallest admissible node count along either axis.
pub const MIN_NODES: usize = 8;

/// Pairwise (tree) summation in a fixed order.
///
/// The split points depend only on the slice length, so the result is
/// independent of how callers schedule the work that produced the terms.
pub fn tree_sum(terms: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if terms.len() <= LEAF {
        let mut acc = 0.0;
        for t in terms {
            acc += *t;
        }
        return acc;
    }
    let mid = terms.len() / 2;
    tree_sum(&terms[..mid]) + tree_sum(&terms[mid..])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        if nx < MIN_NODES || ny < MIN_NODES {
            return Err(Error::InvalidGrid(alloc::format!(
                "need at least {MIN_NODES} nodes per axis, got {nx}x{ny}"
            )));
        }
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite || x_min >= x_max || y_min >= y_max {
            return Err(Error::InvalidGrid(alloc::format!(
                "extents [{x_min}, {x_max}] x [{y_min}, {y_max}] are not increasing"
            )));
        }
        Ok(Grid2D { nx, ny, x_min, x_max, y_min, y_max })
    }

    /// Grid centred on the origin with half-widths `half_x`, `half_y`.
    pub fn centered(nx: usize, ny: usize, half_x: f64, half_y: f64) -> Result<Self> {
        Self::new(nx, ny, -half_x, half_x, -half_y, half_y)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn extents(&self) -> (f64, f64, f64, f64) {
        (self.x_min, self.x_max, self.y_min, self.y_max)
    }
    pub fn hx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }
    pub fn hy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    // Written about the midpoint so that a grid symmetric about x = 0 has
    // exactly antisymmetric coordinates.
    pub fn x(&self, i: usize) -> f64 {
        axis_coord(self.x_min, self.x_max, self.nx, i)
    }
    pub fn y(&self, j: usize) -> f64 {
        axis_coord(self.y_min, self.y_max, self.ny, j)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    /// Trapezoid weight along x.
    #[inline]
    pub fn wx(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.nx {
            0.5 * self.hx()
        } else {
            self.hx()
        }
    }

    /// Trapezoid weight along y.
    #[inline]
    pub fn wy(&self, j: usize) -> f64 {
        if j == 0 || j + 1 == self.ny {
            0.5 * self.hy()
        } else {
            self.hy()
        }
    }

    /// Node index nearest to `(x, y)`, clamped to the grid.
    pub fn nearest(&self, x: f64, y: f64) -> (usize, usize) {
        let fi = ((x - self.x_min) / self.hx() + 0.5).floor();
        let fj = ((y - self.y_min) / self.hy() + 0.5).floor();
        let clamp = |f: f64, n: usize| -> usize {
            if f < 0.0 {
                0
            } else if f as usize >= n {
                n - 1
            } else {
                f as usize
            }
        };
        (clamp(fi, self.nx), clamp(fj, self.ny))
    }

    /// Whether the grid is mirror-symmetric about `x = 0`.
    pub fn is_symmetric_in_x(&self) -> bool {
        let scale = self.x_max.abs().max(self.x_min.abs());
        (self.x_min + self.x_max).abs() <= 1e-12 * scale
    }

    /// Trapezoid quadrature of a per-node real integrand.
    ///
    /// Rows are summed sequentially and the row totals are combined with
    /// [`tree_sum`], so the reduction order is fixed.
    pub fn integrate<F: Fn(usize) -> f64>(&self, f: F) -> f64 {
        let mut rows = Vec::with_capacity(self.ny);
        for j in 0..self.ny {
            let mut acc = 0.0;
            for i in 0..self.nx {
                acc += self.wx(i) * f(self.idx(i, j));
            }
            rows.push(acc * self.wy(j));
        }
        tree_sum(&rows)
    }

    pub fn integrate_complex<F: Fn(usize) -> Complex64>(&self, f: F) -> Complex64 {
        let mut re = Vec::with_capacity(self.ny);
        let mut im = Vec::with_capacity(self.ny);
        for j in 0..self.ny {
            let mut acc = Complex64::zero();
            for i in 0..self.nx {
                acc += f(self.idx(i, j)) * self.wx(i);
            }
            re.push(acc.re * self.wy(j));
            im.push(acc.im * self.wy(j));
        }
        Complex64::new(tree_sum(&re), tree_sum(&im))
    }
}

fn axis_coord(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let m = (n - 1) as f64;
    mid + half * ((2 * i) as f64 - m) / m
}

/// 5-point Laplacian on interior nodes, zero on the boundary.
pub fn laplacian_into<T>(grid: &Grid2D, f: &[T], out: &mut [T])
where
    T: Copy + Zero + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let (nx, ny) = (grid.nx(), grid.ny());
    let cx = 1.0 / (grid.hx() * grid.hx());
    let cy = 1.0 / (grid.hy() * grid.hy());
    for o in out.iter_mut() {
        *o = T::zero();
    }
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let k = j * nx + i;
            let c = f[k];
            let dxx = (f[k + 1] + f[k - 1] - c * 2.0) * cx;
            let dyy = (f[k + nx] + f[k - nx] - c * 2.0) * cy;
            out[k] = dxx + dyy;
        }
    }
}

/// Centred-difference `omega * (x d/dy - y d/dx)` on interior nodes, zero on the boundary.
pub fn rotation_into<T>(grid: &Grid2D, f: &[T], omega: f64, out: &mut [T])
where
    T: Copy + Zero + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let (nx, ny) = (grid.nx(), grid.ny());
    let ax = omega / (2.0 * grid.hy());
    let ay = omega / (2.0 * grid.hx());
    for o in out.iter_mut() {
        *o = T::zero();
    }
    if omega == 0.0 {
        return;
    }
    for j in 1..ny - 1 {
        let y = grid.y(j);
        for i in 1..nx - 1 {
            let x = grid.x(i);
            let k = j * nx + i;
            let dy = f[k + nx] - f[k - nx];
            let dx = f[k + 1] - f[k - 1];
            out[k] = dy * (x * ax) - dx * (y * ay);
        }
    }
}

/// Discretized wave function `psi = u + i v` on a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField2D {
    grid: Grid2D,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl ComplexField2D {
    pub fn zeros(grid: Grid2D) -> Self {
        let n = grid.len();
        ComplexField2D { grid, u: vec![0.0; n], v: vec![0.0; n] }
    }

    pub fn new(grid: Grid2D, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != grid.len() || v.len() != grid.len() {
            return Err(Error::InvalidGrid(alloc::format!(
                "arrays of length {} / {} do not match {} nodes",
                u.len(),
                v.len(),
                grid.len()
            )));
        }
        if u.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Domain("field contains non-finite values".into()));
        }
        Ok(ComplexField2D { grid, u, v })
    }

    /// Samples `f(x, y)` at every node, then clears the boundary.
    pub fn from_fn<F: Fn(f64, f64) -> Complex64>(grid: Grid2D, f: F) -> Self {
        let mut out = Self::zeros(grid);
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let z = f(grid.x(i), grid.y(j));
                let k = grid.idx(i, j);
                out.u[k] = z.re;
                out.v[k] = z.im;
            }
        }
        out.enforce_dirichlet();
        out
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn at(&self, k: usize) -> Complex64 {
        Complex64::new(self.u[k], self.v[k])
    }

    #[inline]
    pub fn set(&mut self, k: usize, z: Complex64) {
        self.u[k] = z.re;
        self.v[k] = z.im;
    }

    pub fn enforce_dirichlet(&mut self) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        for j in 0..ny {
            for i in 0..nx {
                if self.grid.is_boundary(i, j) {
                    let k = self.grid.idx(i, j);
                    self.u[k] = 0.0;
                    self.v[k] = 0.0;
                }
            }
        }
    }

    /// Whether `other` lives on the same grid (bitwise-equal extents and sizes).
    pub fn same_grid(&self, other: &ComplexField2D) -> bool {
        self.grid == other.grid
    }

    /// `∫ |psi|^2`.
    pub fn mass(&self) -> f64 {
        self.grid.integrate(|k| self.u[k] * self.u[k] + self.v[k] * self.v[k])
    }

    pub fn norm(&self) -> f64 {
        self.mass().sqrt()
    }

    /// `∫ conj(self) * other` without the grid check.
    pub(crate) fn dot(&self, other: &ComplexField2D) -> Complex64 {
        debug_assert!(self.same_grid(other));
        self.grid.integrate_complex(|k| self.at(k).conj() * other.at(k))
    }

    /// `Re ∫ conj(self) * other`, the real inner product on `(u, v)` pairs.
    pub fn re_dot(&self, other: &ComplexField2D) -> f64 {
        debug_assert!(self.same_grid(other));
        self.grid.integrate(|k| self.u[k] * other.u[k] + self.v[k] * other.v[k])
    }

    pub fn scale(&mut self, s: f64) {
        for x in self.u.iter_mut().chain(self.v.iter_mut()) {
            *x *= s;
        }
    }

    /// Multiplies by `e^{i theta}`.
    pub fn rotate_phase(&mut self, theta: f64) {
        let (s, c) = (libm_sin(theta), libm_cos(theta));
        for k in 0..self.u.len() {
            let (u, v) = (self.u[k], self.v[k]);
            self.u[k] = c * u - s * v;
            self.v[k] = s * u + c * v;
        }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &ComplexField2D) {
        debug_assert!(self.same_grid(other));
        for k in 0..self.u.len() {
            self.u[k] += a * other.u[k];
            self.v[k] += a * other.v[k];
        }
    }

    /// Rescales to the given mass; fails on a zero field.
    pub fn normalize_to(&mut self, mass: f64) -> Result<()> {
        let m = self.mass();
        if !(m > 0.0) {
            return Err(Error::ZeroField);
        }
        self.scale((mass / m).sqrt());
        Ok(())
    }

    /// Fixes the global phase so that `∫ psi` is real and non-negative.
    pub fn fix_gauge(&mut self) {
        let total = self.grid.integrate_complex(|k| self.at(k));
        if total.norm() > 0.0 {
            self.rotate_phase(-total.arg());
        }
    }

    /// `psi(x, y) -> psi(-x, y)`.
    pub fn reflect_x(&self) -> Result<ComplexField2D> {
        if !self.grid.is_symmetric_in_x() {
            return Err(Error::InvalidGrid("grid is not symmetric about x = 0".into()));
        }
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mut out = ComplexField2D::zeros(self.grid);
        for j in 0..ny {
            for i in 0..nx {
                let src = self.grid.idx(nx - 1 - i, j);
                let dst = self.grid.idx(i, j);
                out.u[dst] = self.u[src];
                out.v[dst] = self.v[src];
            }
        }
        Ok(out)
    }

    /// The antiunitary mirror `psi(x, y) -> conj(psi(-x, y))` exchanging the
    /// two degenerate off-centre states.
    pub fn mirror_conjugate(&self) -> Result<ComplexField2D> {
        let mut out = self.reflect_x()?;
        for v in out.v.iter_mut() {
            *v = -*v;
        }
        Ok(out)
    }
}

#[inline]
fn libm_sin(x: f64) -> f64 {
    num_traits::Float::sin(x)
}
#[inline]
fn libm_cos(x: f64) -> f64 {
    num_traits::Float::cos(x)
}

/// `Δ f` with Dirichlet boundary.
pub fn laplacian(f: &ComplexField2D) -> ComplexField2D {
    let grid = *f.grid();
    let mut out = ComplexField2D::zeros(grid);
    laplacian_into(&grid, &f.u, &mut out.u);
    laplacian_into(&grid, &f.v, &mut out.v);
    out
}

/// `ℳ f = omega (x ∂y − y ∂x) f`, applied to real and imaginary parts alike.
pub fn rotation_operator(f: &ComplexField2D, omega: f64) -> ComplexField2D {
    let grid = *f.grid();
    let mut out = ComplexField2D::zeros(grid);
    rotation_into(&grid, &f.u, omega, &mut out.u);
    rotation_into(&grid, &f.v, omega, &mut out.v);
    out
}

/// `∫ conj(f) g dr` by trapezoid quadrature.
pub fn inner_product(f: &ComplexField2D, g: &ComplexField2D) -> Result<Complex64> {
    if !f.same_grid(g) {
        return Err(Error::GridMismatch);
    }
    Ok(f.dot(g))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid2D {
        Grid2D::centered(n, n, 1.0, 0.75).unwrap()
    }

    fn pseudo_random(seed: u64, n: usize) -> Vec<f64> {
        // xorshift; good enough for test inputs
        let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        (0..n)
            .map(|_| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect()
    }

    fn random_field(g: Grid2D, seed: u64) -> ComplexField2D {
        let mut f =
            ComplexField2D::new(g, pseudo_random(seed, g.len()), pseudo_random(seed + 7, g.len()))
                .unwrap();
        f.enforce_dirichlet();
        f
    }

    #[test]
    fn rejects_tiny_and_inverted_grids() {
        assert!(matches!(Grid2D::new(2, 16, 0.0, 1.0, 0.0, 1.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid2D::new(16, 7, 0.0, 1.0, 0.0, 1.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid2D::new(16, 16, 1.0, 0.0, 0.0, 1.0), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn coordinates_are_antisymmetric_on_centred_grids() {
        let g = Grid2D::centered(37, 12, 0.4275, 0.17).unwrap();
        for i in 0..g.nx() {
            assert_eq!(g.x(i), -g.x(g.nx() - 1 - i));
        }
        assert_eq!(g.x(0), -0.4275);
        assert_eq!(g.x(36), 0.4275);
    }

    #[test]
    fn laplacian_kills_constants_and_is_exact_on_quadratics() {
        let g = grid(16);
        let c = ComplexField2D::new(g, vec![2.5; g.len()], vec![-1.0; g.len()]).unwrap();
        let lc = laplacian(&c);
        let q = {
            let mut f = ComplexField2D::zeros(g);
            for j in 0..g.ny() {
                for i in 0..g.nx() {
                    f.u[g.idx(i, j)] = g.x(i) * g.x(i);
                }
            }
            f
        };
        let lq = laplacian(&q);
        for j in 1..g.ny() - 1 {
            for i in 1..g.nx() - 1 {
                let k = g.idx(i, j);
                assert!(lc.u[k].abs() < 1e-9 && lc.v[k].abs() < 1e-9);
                assert!((lq.u[k] - 2.0).abs() < 1e-9, "{}", lq.u[k]);
            }
        }
        assert_eq!(lq.u[0], 0.0);
    }

    #[test]
    fn rotation_annihilates_radial_functions() {
        let g = grid(20);
        let f = {
            let mut f = ComplexField2D::zeros(g);
            for j in 0..g.ny() {
                for i in 0..g.nx() {
                    let r2 = g.x(i) * g.x(i) + g.y(j) * g.y(j);
                    f.u[g.idx(i, j)] = r2;
                    f.v[g.idx(i, j)] = -3.0 * r2;
                }
            }
            f
        };
        let m = rotation_operator(&f, 1.7);
        assert!(m.u.iter().chain(m.v.iter()).all(|x| x.abs() < 1e-12));
        let zero = rotation_operator(&random_field(g, 3), 0.0);
        assert!(zero.u.iter().chain(zero.v.iter()).all(|x| *x == 0.0));
    }

    #[test]
    fn laplacian_matches_dense_matrix_apply() {
        let g = grid(16);
        let f = random_field(g, 11);
        // dense matrix over all nodes, rows for boundary nodes left empty
        let n = g.len();
        let mut a = vec![0.0; n * n];
        let (cx, cy) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
        for j in 1..g.ny() - 1 {
            for i in 1..g.nx() - 1 {
                let r = g.idx(i, j);
                a[r * n + r] = -2.0 * (cx + cy);
                a[r * n + g.idx(i + 1, j)] = cx;
                a[r * n + g.idx(i - 1, j)] = cx;
                a[r * n + g.idx(i, j + 1)] = cy;
                a[r * n + g.idx(i, j - 1)] = cy;
            }
        }
        let lf = laplacian(&f);
        for r in 0..n {
            let mut su = 0.0;
            let mut sv = 0.0;
            for c in 0..n {
                su += a[r * n + c] * f.u[c];
                sv += a[r * n + c] * f.v[c];
            }
            assert!((su - lf.u[r]).abs() <= 1e-12 * (1.0 + su.abs()));
            assert!((sv - lf.v[r]).abs() <= 1e-12 * (1.0 + sv.abs()));
        }
    }

    #[test]
    fn operators_are_symmetric_and_antisymmetric() {
        let g = grid(24);
        let f = random_field(g, 5);
        let h = random_field(g, 6);
        let lhs = inner_product(&h, &laplacian(&f)).unwrap();
        let rhs = inner_product(&laplacian(&h), &f).unwrap();
        assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm());

        let mf = rotation_operator(&f, 2.3);
        let mh = rotation_operator(&h, 2.3);
        let a = h.re_dot(&mf);
        let b = mh.re_dot(&f);
        assert!((a + b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn inner_product_is_hermitian_and_checks_grids() {
        let g = grid(16);
        let f = random_field(g, 1);
        let h = random_field(g, 2);
        let ff = inner_product(&f, &f).unwrap();
        assert!(ff.re > 0.0 && ff.im == 0.0);
        let fh = inner_product(&f, &h).unwrap();
        let hf = inner_product(&h, &f).unwrap();
        assert!((fh - hf.conj()).norm() < 1e-15);
        let other = ComplexField2D::zeros(grid(18));
        assert_eq!(inner_product(&f, &other), Err(Error::GridMismatch));
    }

    #[test]
    fn bump_mass_converges_at_second_order() {
        // compactly supported C^2 bump (1 - r^2)^3 on the unit disc; exact mass pi/4
        let exact = core::f64::consts::PI / 4.0;
        let err = |n: usize| {
            let g = Grid2D::centered(n, n, 1.2, 1.2).unwrap();
            let f = ComplexField2D::from_fn(g, |x, y| {
                let r2 = x * x + y * y;
                let b = if r2 < 1.0 { (1.0 - r2) * (1.0 - r2) * (1.0 - r2) } else { 0.0 };
                Complex64::new(num_traits::Float::sqrt(b), 0.0)
            });
            (f.mass() - exact).abs()
        };
        let (e1, e2, e3) = (err(41), err(81), err(161));
        // Richardson: ratio of successive errors approaches 4
        assert!(e1 / e2 > 3.0 && e2 / e3 > 3.0, "{e1} {e2} {e3}");
    }

    #[test]
    fn tree_sum_is_order_fixed() {
        let xs: Vec<f64> = (0..1000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        assert_eq!(tree_sum(&xs).to_bits(), tree_sum(&xs.clone()).to_bits());
        assert!((tree_sum(&xs) - xs.iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn mirror_conjugate_is_an_involution() {
        let g = grid(16);
        let f = random_field(g, 9);
        let back = f.mirror_conjugate().unwrap().mirror_conjugate().unwrap();
        assert_eq!(f, back);
        let skew = Grid2D::new(16, 16, -1.0, 2.0, 0.0, 1.0).unwrap();
        assert!(ComplexField2D::zeros(skew).reflect_x().is_err());
    }
}
