//! On-disk formats: `GPF1` field dumps, `GPE1` path dumps and `branches.csv`.
//!
//! Binary dumps are little-endian throughout. A field dump is the magic, `u32`
//! `nx, ny`, `f64` extents `x_min, x_max, y_min, y_max`, then `nx·ny` pairs
//! `(u, v)` row-major with `y` outer. A path dump is the magic, `u32 N, nx,
//! ny`, the extents, then per node `s` followed by `(Re u, Im u, Re v, Im v)`
//! at every grid point.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;
use peanut_core::euclidean::{ComplexifiedPair, EuclideanPath};
use peanut_core::solver::BranchRecord;
use peanut_core::{ComplexField2D, Grid2D};

use crate::error::CliError;

pub const FIELD_MAGIC: &[u8; 4] = b"GPF1";
pub const PATH_MAGIC: &[u8; 4] = b"GPE1";

pub const CSV_COLUMNS: [&str; 15] = [
    "omega",
    "branch_id",
    "seed_kind",
    "energy_total",
    "energy_kinetic",
    "energy_rotation",
    "energy_interaction",
    "energy_potential",
    "rel_diff_vs_vortex_free",
    "mu",
    "residual",
    "n_vortices",
    "vortex_positions",
    "converged",
    "census_changed",
];

fn format_error(msg: impl Into<String>) -> CliError {
    CliError::Format(msg.into())
}

fn write_header<W: Write>(w: &mut W, grid: &Grid2D) -> io::Result<()> {
    w.write_u32::<LittleEndian>(grid.nx() as u32)?;
    w.write_u32::<LittleEndian>(grid.ny() as u32)?;
    let (x0, x1, y0, y1) = grid.extents();
    for e in [x0, x1, y0, y1] {
        w.write_f64::<LittleEndian>(e)?;
    }
    Ok(())
}

fn short_header(_: io::Error) -> CliError {
    format_error("truncated header")
}

fn read_grid<R: Read>(r: &mut R) -> Result<Grid2D, CliError> {
    let nx = r.read_u32::<LittleEndian>().map_err(short_header)? as usize;
    let ny = r.read_u32::<LittleEndian>().map_err(short_header)? as usize;
    let mut e = [0.0; 4];
    for v in &mut e {
        *v = r.read_f64::<LittleEndian>().map_err(short_header)?;
    }
    Grid2D::new(nx, ny, e[0], e[1], e[2], e[3]).map_err(|err| format_error(format!("bad grid header: {err}")))
}

fn expect_magic<R: Read>(r: &mut R, magic: &[u8; 4]) -> Result<(), CliError> {
    let mut got = [0u8; 4];
    r.read_exact(&mut got).map_err(|_| format_error("file too short for magic bytes"))?;
    if &got != magic {
        return Err(format_error(format!(
            "bad magic bytes {:?}, expected {}",
            String::from_utf8_lossy(&got),
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}

fn expect_end<R: Read>(r: &mut R) -> Result<(), CliError> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => Ok(()),
        _ => Err(format_error("trailing bytes after payload")),
    }
}

pub fn write_field<W: Write>(w: &mut W, psi: &ComplexField2D) -> io::Result<()> {
    w.write_all(FIELD_MAGIC)?;
    write_header(w, psi.grid())?;
    for (u, v) in psi.u.iter().zip(&psi.v) {
        w.write_f64::<LittleEndian>(*u)?;
        w.write_f64::<LittleEndian>(*v)?;
    }
    Ok(())
}

pub fn read_field<R: Read>(r: &mut R) -> Result<ComplexField2D, CliError> {
    expect_magic(r, FIELD_MAGIC)?;
    let grid = read_grid(r)?;
    let n = grid.len();
    let (mut u, mut v) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        u.push(r.read_f64::<LittleEndian>().map_err(|_| format_error("truncated field payload"))?);
        v.push(r.read_f64::<LittleEndian>().map_err(|_| format_error("truncated field payload"))?);
    }
    expect_end(r)?;
    ComplexField2D::new(grid, u, v).map_err(|e| format_error(format!("bad field payload: {e}")))
}

pub fn save_field(path: &Path, psi: &ComplexField2D) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_field(&mut w, psi)?;
    w.flush()?;
    Ok(())
}

pub fn load_field(path: &Path) -> Result<ComplexField2D, CliError> {
    let mut r = BufReader::new(File::open(path).map_err(|e| CliError::io_at(path, e))?);
    read_field(&mut r).map_err(|e| e.context(path))
}

pub fn write_path<W: Write>(w: &mut W, path: &EuclideanPath) -> io::Result<()> {
    w.write_all(PATH_MAGIC)?;
    w.write_u32::<LittleEndian>(path.s.len() as u32)?;
    write_header(w, path.states[0].grid())?;
    for (s, st) in path.s.iter().zip(&path.states) {
        w.write_f64::<LittleEndian>(*s)?;
        for (u, v) in st.u.iter().zip(&st.v) {
            for x in [u.re, u.im, v.re, v.im] {
                w.write_f64::<LittleEndian>(x)?;
            }
        }
    }
    Ok(())
}

pub fn read_path<R: Read>(r: &mut R) -> Result<EuclideanPath, CliError> {
    expect_magic(r, PATH_MAGIC)?;
    let nodes = r.read_u32::<LittleEndian>().map_err(short_header)? as usize;
    let grid = read_grid(r)?;
    let truncated = |_| format_error("truncated path payload");
    let mut s = Vec::with_capacity(nodes);
    let mut states = Vec::with_capacity(nodes);
    for _ in 0..nodes {
        s.push(r.read_f64::<LittleEndian>().map_err(truncated)?);
        let (mut u, mut v) = (Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len()));
        for _ in 0..grid.len() {
            let mut x = [0.0; 4];
            for c in &mut x {
                *c = r.read_f64::<LittleEndian>().map_err(truncated)?;
            }
            u.push(Complex64::new(x[0], x[1]));
            v.push(Complex64::new(x[2], x[3]));
        }
        states.push(ComplexifiedPair::new(grid, u, v)?);
    }
    expect_end(r)?;
    EuclideanPath::new(s, states).map_err(|e| format_error(format!("bad path: {e}")))
}

pub fn save_path(path: &Path, p: &EuclideanPath) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_path(&mut w, p)?;
    w.flush()?;
    Ok(())
}

pub fn load_path(path: &Path) -> Result<EuclideanPath, CliError> {
    let mut r = BufReader::new(File::open(path).map_err(|e| CliError::io_at(path, e))?);
    read_path(&mut r).map_err(|e| e.context(path))
}

/// Shortest text that parses back to the same `f64`; plain decimals for
/// moderate magnitudes, exponent form otherwise.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn csv_row(r: &BranchRecord) -> [String; 15] {
    let e = &r.energy;
    [
        fmt_f64(r.omega),
        r.branch_id(),
        r.seed.label(),
        fmt_f64(e.total),
        fmt_f64(e.kinetic),
        fmt_f64(e.rotation),
        fmt_f64(e.interaction),
        fmt_f64(e.potential),
        r.rel_diff_vs_vortex_free.map(fmt_f64).unwrap_or_default(),
        fmt_f64(r.mu),
        fmt_f64(r.residual_norm),
        r.census.count().to_string(),
        r.census.packed_positions(),
        r.converged.to_string(),
        r.census_changed.to_string(),
    ]
}

/// Writes `records` in the order given; callers sort them first.
pub fn write_branches<W: Write>(w: W, records: &[BranchRecord]) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_COLUMNS)?;
    for r in records {
        out.write_record(csv_row(r))?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_branches(path: &Path, records: &[BranchRecord]) -> Result<(), CliError> {
    write_branches(BufWriter::new(File::create(path)?), records)
}
