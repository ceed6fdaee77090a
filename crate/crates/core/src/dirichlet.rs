//! Exact inverse of the shifted 5-point Dirichlet Laplacian by separable
//! discrete sine transforms.
//!
//! The transforms here are dense matrix products, O(n³) per solve on an
//! n×n grid. Anything implementing [`ShiftedPoisson`] can stand in for it.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

use crate::grid::Grid2D;

/// Solver for `(shift − Δ) g = f` with homogeneous Dirichlet data, using
/// the 5-point Laplacian of [`crate::grid::laplacian_into`].
pub trait ShiftedPoisson {
    fn grid(&self) -> &Grid2D;
    /// `g` is written on the whole grid, zero on the boundary.
    fn solve_shifted(&mut self, shift: f64, f: &[f64], g: &mut [f64]);
}

#[derive(Debug, Clone)]
pub struct DirichletSine {
    grid: Grid2D,
    mx: usize,
    my: usize,
    // sine matrices, row-major, symmetric
    sx: Vec<f64>,
    sy: Vec<f64>,
    // eigenvalues of −∂xx and −∂yy
    lx: Vec<f64>,
    ly: Vec<f64>,
    norm: f64,
    scratch: Vec<f64>,
    modes: Vec<f64>,
}

fn sine_matrix(m: usize) -> Vec<f64> {
    let mut s = vec![0.0; m * m];
    let d = (m + 1) as f64;
    for a in 0..m {
        for b in 0..m {
            s[a * m + b] = (PI * ((a + 1) * (b + 1)) as f64 / d).sin();
        }
    }
    s
}

fn eigenvalues(m: usize, h: f64) -> Vec<f64> {
    let d = (m + 1) as f64;
    (1..=m)
        .map(|k| {
            let s = (PI * k as f64 / (2.0 * d)).sin();
            4.0 * s * s / (h * h)
        })
        .collect()
}

impl DirichletSine {
    pub fn new(grid: &Grid2D) -> Self {
        let mx = grid.nx() - 2;
        let my = grid.ny() - 2;
        DirichletSine {
            grid: *grid,
            mx,
            my,
            sx: sine_matrix(mx),
            sy: sine_matrix(my),
            lx: eigenvalues(mx, grid.hx()),
            ly: eigenvalues(my, grid.hy()),
            norm: 4.0 / (((mx + 1) * (my + 1)) as f64),
            scratch: vec![0.0; mx * my],
            modes: vec![0.0; mx * my],
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Eigenvalue of `−Δ` for sine mode `(p, q)` (zero-based).
    pub fn eigenvalue(&self, p: usize, q: usize) -> f64 {
        self.lx[p] + self.ly[q]
    }

    pub fn mode_count(&self) -> (usize, usize) {
        (self.mx, self.my)
    }

    /// Forward transform of the interior of `f` into `self.modes` (unnormalized).
    fn forward(&mut self, f: &[f64]) {
        let (mx, my, nx) = (self.mx, self.my, self.grid.nx());
        // rows: scratch[q][p] = Σ_i f[q][i] sx[i][p]
        for q in 0..my {
            let row = &f[(q + 1) * nx + 1..(q + 1) * nx + 1 + mx];
            let out = &mut self.scratch[q * mx..(q + 1) * mx];
            out.iter_mut().for_each(|o| *o = 0.0);
            for (i, &fi) in row.iter().enumerate() {
                if fi == 0.0 {
                    continue;
                }
                let srow = &self.sx[i * mx..(i + 1) * mx];
                for (o, s) in out.iter_mut().zip(srow) {
                    *o += fi * s;
                }
            }
        }
        // columns: modes[b][p] = Σ_q sy[b][q] scratch[q][p]
        self.modes.iter_mut().for_each(|o| *o = 0.0);
        for b in 0..my {
            let out = &mut self.modes[b * mx..(b + 1) * mx];
            for q in 0..my {
                let c = self.sy[b * my + q];
                let src = &self.scratch[q * mx..(q + 1) * mx];
                for (o, s) in out.iter_mut().zip(src) {
                    *o += c * s;
                }
            }
        }
    }

    /// Inverse of [`Self::forward`] from `self.modes`, written into the interior of `out`.
    fn backward(&mut self, out: &mut [f64]) {
        let (mx, my, nx) = (self.mx, self.my, self.grid.nx());
        self.scratch.iter_mut().for_each(|o| *o = 0.0);
        for q in 0..my {
            let dst = &mut self.scratch[q * mx..(q + 1) * mx];
            for b in 0..my {
                let c = self.sy[q * my + b];
                let src = &self.modes[b * mx..(b + 1) * mx];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += c * s;
                }
            }
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        for q in 0..my {
            let src = &self.scratch[q * mx..(q + 1) * mx];
            let dst = &mut out[(q + 1) * nx + 1..(q + 1) * nx + 1 + mx];
            for (i, d) in dst.iter_mut().enumerate() {
                let srow = &self.sx[i * mx..(i + 1) * mx];
                let mut acc = 0.0;
                for (s, m) in srow.iter().zip(src) {
                    acc += s * m;
                }
                *d = acc * self.norm;
            }
        }
    }

    /// Solves `(shift − Δ) g = f` on the interior; `g` is zero on the boundary.
    /// `shift` must keep every mode positive.
    pub fn solve_shifted(&mut self, shift: f64, f: &[f64], g: &mut [f64]) {
        self.apply_spectral(f, g, |lam| 1.0 / (shift + lam));
    }

    /// Applies `φ(−Δ)` for an arbitrary mode multiplier `φ`.
    pub fn apply_spectral<F: Fn(f64) -> f64>(&mut self, f: &[f64], g: &mut [f64], phi: F) {
        self.forward(f);
        let mx = self.mx;
        for b in 0..self.my {
            for p in 0..mx {
                self.modes[b * mx + p] *= phi(self.lx[p] + self.ly[b]);
            }
        }
        self.backward(g);
    }
}

impl ShiftedPoisson for DirichletSine {
    fn grid(&self) -> &Grid2D {
        &self.grid
    }

    fn solve_shifted(&mut self, shift: f64, f: &[f64], g: &mut [f64]) {
        DirichletSine::solve_shifted(self, shift, f, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::laplacian_into;

    #[test]
    fn shifted_solve_inverts_the_stencil() {
        let g = Grid2D::new(19, 13, -0.5, 0.7, -0.3, 0.4).unwrap();
        let mut f = vec![0.0; g.len()];
        for j in 1..g.ny() - 1 {
            for i in 1..g.nx() - 1 {
                f[g.idx(i, j)] = ((i * 7 + j * 3) % 11) as f64 - 5.0;
            }
        }
        let mut solver = DirichletSine::new(&g);
        let mut sol = vec![0.0; g.len()];
        solver.solve_shifted(3.0, &f, &mut sol);
        let mut lap = vec![0.0; g.len()];
        laplacian_into(&g, &sol, &mut lap);
        for k in 0..g.len() {
            let (i, j) = g.ij(k);
            if g.is_boundary(i, j) {
                assert_eq!(sol[k], 0.0);
            } else {
                let back = 3.0 * sol[k] - lap[k];
                assert!((back - f[k]).abs() < 1e-9, "{back} vs {}", f[k]);
            }
        }
    }
}
