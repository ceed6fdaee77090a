//! Vortex detection by discrete phase circulation around grid plaquettes.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // inherent float methods shadow it when std is linked
use num_traits::Float;

use crate::grid::ComplexField2D;
use crate::potentials::{domain_mask, PotentialSpec};

/// Default density floor relative to `max |ψ|`.
pub const DENSITY_FLOOR: f64 = 1e-6;
/// Plaquettes closer than this (Chebyshev distance in cells) join one vortex.
pub const CLUSTER_RADIUS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vortex {
    pub x: f64,
    pub y: f64,
    pub winding: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryClass {
    VortexFree,
    Central,
    OffCenterLeft,
    OffCenterRight,
    SymmetricPair,
    Other(usize),
}

impl SymmetryClass {
    /// Stable label used as branch identifier.
    pub fn label(&self) -> String {
        match self {
            SymmetryClass::VortexFree => "vortex_free".into(),
            SymmetryClass::Central => "central".into(),
            SymmetryClass::OffCenterLeft => "off_center_left".into(),
            SymmetryClass::OffCenterRight => "off_center_right".into(),
            SymmetryClass::SymmetricPair => "symmetric_pair".into(),
            SymmetryClass::Other(n) => alloc::format!("other_{n}"),
        }
    }

    pub fn is_off_center(&self) -> bool {
        matches!(self, SymmetryClass::OffCenterLeft | SymmetryClass::OffCenterRight)
    }

    pub fn mirrored(&self) -> SymmetryClass {
        match self {
            SymmetryClass::OffCenterLeft => SymmetryClass::OffCenterRight,
            SymmetryClass::OffCenterRight => SymmetryClass::OffCenterLeft,
            other => *other,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VortexCensus {
    pub vortices: Vec<Vortex>,
    pub total_winding: i32,
    pub symmetry_class: SymmetryClass,
    /// Plaquettes inside the mask that were skipped for low density.
    pub skipped: usize,
}

impl VortexCensus {
    pub fn count(&self) -> usize {
        self.vortices.len()
    }

    /// Positions packed as `x:y:w` separated by `;`.
    pub fn packed_positions(&self) -> String {
        let mut s = String::new();
        for (n, v) in self.vortices.iter().enumerate() {
            if n > 0 {
                s.push(';');
            }
            s.push_str(&alloc::format!("{:.6}:{:.6}:{}", v.x, v.y, v.winding));
        }
        s
    }

    /// Whether `other` equals this census reflected through `x = 0`, with
    /// equal windings and positions within `tol_x`, `tol_y`.
    pub fn is_mirror_of(&self, other: &VortexCensus, tol_x: f64, tol_y: f64) -> bool {
        if self.vortices.len() != other.vortices.len() || self.symmetry_class != other.symmetry_class.mirrored() {
            return false;
        }
        self.vortices.iter().all(|a| {
            other
                .vortices
                .iter()
                .any(|b| a.winding == b.winding && (a.x + b.x).abs() <= tol_x && (a.y - b.y).abs() <= tol_y)
        })
    }
}

/// Principal value of `arg(b / a)` in `(−π, π]`.
fn phase_step(a: Complex64, b: Complex64) -> f64 {
    (b * a.conj()).arg()
}

/// Winding of the plaquette with lower-left node `(i, j)`, or `None` when a
/// corner has `|ψ| <= floor` (phase undefined).
pub fn plaquette_winding(psi: &ComplexField2D, i: usize, j: usize, floor: f64) -> Option<i32> {
    let g = psi.grid();
    if i + 1 >= g.nx() || j + 1 >= g.ny() {
        return None;
    }
    let corners = [g.idx(i, j), g.idx(i + 1, j), g.idx(i + 1, j + 1), g.idx(i, j + 1)];
    if corners.iter().any(|&k| psi.at(k).norm() <= floor) {
        return None;
    }
    let mut circ = 0.0;
    for n in 0..4 {
        circ += phase_step(psi.at(corners[n]), psi.at(corners[(n + 1) % 4]));
    }
    Some((circ / (2.0 * PI)).round() as i32)
}

/// Density floor `DENSITY_FLOOR * max |ψ|`.
pub fn default_floor(psi: &ComplexField2D) -> f64 {
    let max = (0..psi.u.len()).map(|k| psi.at(k).norm()).fold(0.0, f64::max);
    DENSITY_FLOOR * max
}

/// Scans plaquettes whose four corners lie inside `{V > 0}` and clusters the
/// nonzero ones into vortices.
pub fn census(psi: &ComplexField2D, spec: &PotentialSpec) -> VortexCensus {
    let mask = domain_mask(spec, psi.grid());
    census_with(psi, &mask, default_floor(psi))
}

pub fn census_with(psi: &ComplexField2D, mask: &[bool], floor: f64) -> VortexCensus {
    let g = *psi.grid();
    let (cx, cy) = (g.nx() - 1, g.ny() - 1);
    let mut wind = vec![0i32; cx * cy];
    let mut skipped = 0;
    for j in 0..cy {
        for i in 0..cx {
            let inside = [g.idx(i, j), g.idx(i + 1, j), g.idx(i + 1, j + 1), g.idx(i, j + 1)]
                .iter()
                .all(|&k| mask[k]);
            if !inside {
                continue;
            }
            match plaquette_winding(psi, i, j, floor) {
                Some(w) => wind[j * cx + i] = w,
                None => skipped += 1,
            }
        }
    }

    // connected components over nonzero plaquettes, scanned in index order
    let mut label = vec![usize::MAX; cx * cy];
    let mut vortices = Vec::new();
    let r = CLUSTER_RADIUS as isize;
    for start in 0..cx * cy {
        if wind[start] == 0 || label[start] != usize::MAX {
            continue;
        }
        let id = vortices.len();
        let mut stack = vec![start];
        label[start] = id;
        let (mut sw, mut sx, mut sy, mut net) = (0.0, 0.0, 0.0, 0i32);
        while let Some(c) = stack.pop() {
            let (i, j) = (c % cx, c / cx);
            let w = wind[c];
            let corners = [g.idx(i, j), g.idx(i + 1, j), g.idx(i + 1, j + 1), g.idx(i, j + 1)];
            let dens: f64 = corners.iter().map(|&k| psi.at(k).norm_sqr()).sum::<f64>() * 0.25;
            let weight = dens.max(f64::MIN_POSITIVE);
            sw += weight;
            sx += weight * 0.5 * (g.x(i) + g.x(i + 1));
            sy += weight * 0.5 * (g.y(j) + g.y(j + 1));
            net += w;
            for dj in -r..=r {
                for di in -r..=r {
                    let (ni, nj) = (i as isize + di, j as isize + dj);
                    if ni < 0 || nj < 0 || ni >= cx as isize || nj >= cy as isize {
                        continue;
                    }
                    let n = nj as usize * cx + ni as usize;
                    if wind[n] != 0 && label[n] == usize::MAX {
                        label[n] = id;
                        stack.push(n);
                    }
                }
            }
        }
        if net != 0 {
            vortices.push(Vortex { x: sx / sw, y: sy / sw, winding: net });
        } else {
            // dipole below resolution; keeps its label slot so ids stay unique
            vortices.push(Vortex { x: f64::NAN, y: f64::NAN, winding: 0 });
        }
    }
    vortices.retain(|v| v.winding != 0);
    let total_winding = vortices.iter().map(|v| v.winding).sum();
    let symmetry_class = classify(&vortices, g.hx(), g.hy());
    VortexCensus { vortices, total_winding, symmetry_class, skipped }
}

fn classify(vortices: &[Vortex], hx: f64, hy: f64) -> SymmetryClass {
    match vortices {
        [] => SymmetryClass::VortexFree,
        [v] => {
            if v.x.abs() < hx && v.y.abs() < hy {
                SymmetryClass::Central
            } else if v.x.abs() < hx {
                SymmetryClass::Other(1)
            } else if v.x < 0.0 {
                SymmetryClass::OffCenterLeft
            } else {
                SymmetryClass::OffCenterRight
            }
        }
        [a, b] => {
            let mirror = a.winding == b.winding
                && (a.x + b.x).abs() <= 1.5 * hx
                && (a.y - b.y).abs() <= 1.5 * hy
                && a.x.abs() >= hx;
            if mirror {
                SymmetryClass::SymmetricPair
            } else {
                SymmetryClass::Other(2)
            }
        }
        vs => SymmetryClass::Other(vs.len()),
    }
}
