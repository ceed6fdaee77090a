//! Shifted Dirichlet Poisson solves through FFT-based DST-I.
//!
//! A DST-I of length `m` is read off the imaginary part of a complex FFT of
//! length `2(m + 1)` applied to the odd extension `[0, x, 0, −x reversed]`.

use std::sync::Arc;

use peanut_core::dirichlet::ShiftedPoisson;
use peanut_core::Grid2D;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

struct Dst1 {
    m: usize,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Dst1 {
    fn new(planner: &mut FftPlanner<f64>, m: usize) -> Self {
        let fft = planner.plan_fft_forward(2 * (m + 1));
        let scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        Dst1 { m, fft, buf: vec![Complex64::new(0.0, 0.0); 2 * (m + 1)], scratch }
    }

    /// `y_k = Σ_n x_n sin(π (k+1)(n+1) / (m+1))`, in place.
    fn run(&mut self, x: &mut [f64]) {
        let m = self.m;
        self.buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        for (n, &v) in x.iter().enumerate() {
            self.buf[n + 1].re = v;
            self.buf[2 * (m + 1) - (n + 1)].re = -v;
        }
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        for (k, y) in x.iter_mut().enumerate() {
            *y = -0.5 * self.buf[k + 1].im;
        }
    }
}

/// Drop-in replacement for the dense transform in the core crate,
/// `O(n² log n)` per solve.
pub struct FftSine {
    grid: Grid2D,
    mx: usize,
    my: usize,
    rows: Dst1,
    cols: Dst1,
    lx: Vec<f64>,
    ly: Vec<f64>,
    modes: Vec<f64>,
    column: Vec<f64>,
}

fn eigenvalues(m: usize, h: f64) -> Vec<f64> {
    let d = (m + 1) as f64;
    (1..=m)
        .map(|k| {
            let s = (std::f64::consts::PI * k as f64 / (2.0 * d)).sin();
            4.0 * s * s / (h * h)
        })
        .collect()
}

impl FftSine {
    pub fn new(grid: &Grid2D) -> Self {
        let (mx, my) = (grid.nx() - 2, grid.ny() - 2);
        let mut planner = FftPlanner::new();
        FftSine {
            grid: *grid,
            mx,
            my,
            rows: Dst1::new(&mut planner, mx),
            cols: Dst1::new(&mut planner, my),
            lx: eigenvalues(mx, grid.hx()),
            ly: eigenvalues(my, grid.hy()),
            modes: vec![0.0; mx * my],
            column: vec![0.0; my],
        }
    }

    fn transform(&mut self) {
        let (mx, my) = (self.mx, self.my);
        for row in self.modes.chunks_mut(mx) {
            self.rows.run(row);
        }
        for p in 0..mx {
            for q in 0..my {
                self.column[q] = self.modes[q * mx + p];
            }
            self.cols.run(&mut self.column);
            for q in 0..my {
                self.modes[q * mx + p] = self.column[q];
            }
        }
    }
}

impl ShiftedPoisson for FftSine {
    fn grid(&self) -> &Grid2D {
        &self.grid
    }

    fn solve_shifted(&mut self, shift: f64, f: &[f64], g: &mut [f64]) {
        let (mx, my, nx) = (self.mx, self.my, self.grid.nx());
        for q in 0..my {
            let src = &f[(q + 1) * nx + 1..(q + 1) * nx + 1 + mx];
            self.modes[q * mx..(q + 1) * mx].copy_from_slice(src);
        }
        self.transform();
        let norm = 4.0 / (((mx + 1) * (my + 1)) as f64);
        for q in 0..my {
            for p in 0..mx {
                self.modes[q * mx + p] *= norm / (shift + self.lx[p] + self.ly[q]);
            }
        }
        self.transform();
        g.iter_mut().for_each(|v| *v = 0.0);
        for q in 0..my {
            let dst = &mut g[(q + 1) * nx + 1..(q + 1) * nx + 1 + mx];
            dst.copy_from_slice(&self.modes[q * mx..(q + 1) * mx]);
        }
    }
}
