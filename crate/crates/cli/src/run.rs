//! The five commands. Each returns a report; printing and exit codes are
//! left to the binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use peanut_core::euclidean::{find_instanton, EuclideanSystem, InstantonOutcome};
use peanut_core::solver::{
    finalize_records, make_seed, minimize_with, sweep_family_with, BranchRecord, SeedSpec, SweepProblem,
};
use peanut_core::timescales::{effective_time, TimescaleInput, TimescaleVerdict};
use peanut_core::vortex::{census, VortexCensus};
use peanut_core::{ComplexField2D, EnergyBreakdown};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Resolved, RunConfig};
use crate::error::CliError;
use crate::fft::FftSine;
use crate::formats::{load_field, save_branches, save_field, save_path};

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: RunConfig,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub files: Vec<FileEntry>,
    pub all_converged: bool,
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn relative(dir: &Path, p: &Path) -> String {
    p.strip_prefix(dir).unwrap_or(p).to_string_lossy().replace('\\', "/")
}

fn write_manifest(dir: &Path, m: &RunManifest) -> Result<PathBuf, CliError> {
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(m)? + "\n")?;
    Ok(path)
}

/// Seed field for `seed`: built from the trap, or read from disk and checked
/// against the run grid.
pub fn seed_field(seed: &SeedSpec, problem: &SweepProblem) -> Result<ComplexField2D, CliError> {
    match seed {
        SeedSpec::FromFile(path) => {
            let psi = load_field(Path::new(path))?;
            if *psi.grid() != problem.grid {
                return Err(CliError::Config(format!("{path}: grid differs from the configured grid")));
            }
            Ok(psi)
        }
        _ => Ok(make_seed(seed, &problem.spec, &problem.grid)?),
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub record: BranchRecord,
    pub field_path: PathBuf,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
}

pub fn cmd_solve(cfg: &RunConfig, seed: Option<SeedSpec>) -> Result<SolveReport, CliError> {
    let started = now();
    let r = cfg.resolve()?;
    let omega = r.single_omega()?;
    let seed = seed.unwrap_or_else(|| r.seeds[0].clone());
    let p = &r.problem;
    let psi0 = seed_field(&seed, p)?;
    let f = p.functional(omega)?;
    let out = minimize_with(&f, &psi0, &p.opts, &mut FftSine::new(&p.grid))?;
    let mut record = BranchRecord::from_outcome(omega, p.epsilon, seed, &p.spec, &out);
    record.census_changed = census(&psi0, &p.spec).symmetry_class != record.census.symmetry_class;
    finalize_records(std::slice::from_mut(&mut record));

    fs::create_dir_all(&r.output_dir)?;
    let field_path = r.output_dir.join("solve.gpf");
    let csv_path = r.output_dir.join("solve.csv");
    save_field(&field_path, &out.field)?;
    save_branches(&csv_path, std::slice::from_ref(&record))?;
    let files = vec![
        FileEntry {
            path: relative(&r.output_dir, &field_path),
            kind: "field",
            omega: Some(omega),
            seed: Some(record.seed.label()),
            branch_id: Some(record.branch_id()),
            converged: Some(record.converged),
        },
        FileEntry {
            path: relative(&r.output_dir, &csv_path),
            kind: "branches_csv",
            omega: None,
            seed: None,
            branch_id: None,
            converged: None,
        },
    ];
    let manifest = RunManifest {
        tool: "peanut",
        version: env!("CARGO_PKG_VERSION"),
        command: "solve",
        config: cfg.clone(),
        started_unix: started,
        finished_unix: now(),
        files,
        all_converged: record.converged,
    };
    let manifest_path = write_manifest(&r.output_dir, &manifest)?;
    Ok(SolveReport { record, field_path, csv_path, manifest_path })
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub records: Vec<BranchRecord>,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
}

impl SweepReport {
    pub fn all_converged(&self) -> bool {
        self.records.iter().all(|r| r.converged)
    }
}

/// Every seed family continued through the ω list, families in parallel.
/// Each family is a sequential chain, so the thread count changes nothing
/// but the wall time.
pub fn run_families(r: &Resolved) -> Result<Vec<Vec<(BranchRecord, ComplexField2D)>>, CliError> {
    let p = &r.problem;
    r.seeds
        .par_iter()
        .map(|seed| {
            let start = match seed {
                SeedSpec::FromFile(_) => Some(seed_field(seed, p)?),
                _ => None,
            };
            let mut poisson = FftSine::new(&p.grid);
            Ok(sweep_family_with(p, seed, start.as_ref(), &r.omegas, &mut poisson)?)
        })
        .collect()
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<SweepReport, CliError> {
    let started = now();
    let r = cfg.resolve()?;
    if r.omegas.is_empty() {
        return Err(CliError::Config("a [sweep] block or [physics] omega is required".into()));
    }
    let families = run_families(&r)?;

    let fields_dir = r.output_dir.join("fields");
    fs::create_dir_all(&fields_dir)?;
    let mut files = Vec::new();
    let mut records = Vec::new();
    for (si, family) in families.into_iter().enumerate() {
        for (oi, (rec, field)) in family.into_iter().enumerate() {
            let path = fields_dir.join(format!("w{oi:03}_s{si:02}.gpf"));
            save_field(&path, &field)?;
            files.push(FileEntry {
                path: relative(&r.output_dir, &path),
                kind: "field",
                omega: Some(rec.omega),
                seed: Some(rec.seed.label()),
                branch_id: Some(rec.branch_id()),
                converged: Some(rec.converged),
            });
            records.push(rec);
        }
    }
    finalize_records(&mut records);
    let csv_path = r.output_dir.join("branches.csv");
    save_branches(&csv_path, &records)?;
    files.push(FileEntry {
        path: relative(&r.output_dir, &csv_path),
        kind: "branches_csv",
        omega: None,
        seed: None,
        branch_id: None,
        converged: None,
    });
    let manifest = RunManifest {
        tool: "peanut",
        version: env!("CARGO_PKG_VERSION"),
        command: "sweep",
        config: cfg.clone(),
        started_unix: started,
        finished_unix: now(),
        files,
        all_converged: records.iter().all(|r| r.converged),
    };
    let manifest_path = write_manifest(&r.output_dir, &manifest)?;
    Ok(SweepReport { records, csv_path, manifest_path })
}

#[derive(Debug, Clone)]
pub struct AnalyzeReport {
    pub omega: f64,
    pub energy: EnergyBreakdown,
    pub mu: f64,
    pub residual: f64,
    pub mass: f64,
    pub census: VortexCensus,
}

/// Energy, residual and census of a stored field under the configured
/// functional at `omega` (the config's value when `None`).
pub fn cmd_analyze(cfg: &RunConfig, field: &Path, omega: Option<f64>) -> Result<AnalyzeReport, CliError> {
    let r = cfg.resolve()?;
    let omega = match omega {
        Some(w) => w,
        None => r.single_omega()?,
    };
    let psi = load_field(field)?;
    if *psi.grid() != r.problem.grid {
        return Err(CliError::Config(format!("{}: grid differs from the configured grid", field.display())));
    }
    let f = r.problem.functional(omega)?;
    let energy = f.energy(&psi)?;
    let res = f.residual(&psi)?;
    Ok(AnalyzeReport {
        omega,
        energy,
        mu: res.mu,
        residual: res.relative_norm,
        mass: psi.mass(),
        census: census(&psi, &r.problem.spec),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ActionReport {
    pub omega: f64,
    pub epsilon: f64,
    pub mu: f64,
    pub nodes: usize,
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
    pub action_re: f64,
    pub action_im: f64,
    pub kinetic_re: f64,
    pub kinetic_im: f64,
    pub potential_re: f64,
    pub potential_im: f64,
    pub residual_history: Vec<f64>,
}

impl ActionReport {
    fn new(omega: f64, epsilon: f64, mu: f64, out: &InstantonOutcome) -> Self {
        let total: Complex64 = out.action.total();
        ActionReport {
            omega,
            epsilon,
            mu,
            nodes: out.path.s.len(),
            residual: out.residual,
            converged: out.converged,
            iterations: out.iterations,
            action_re: total.re,
            action_im: total.im,
            kinetic_re: out.action.kinetic.re,
            kinetic_im: out.action.kinetic.im,
            potential_re: out.action.potential.re,
            potential_im: out.action.potential.im,
            residual_history: out.history.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EuclidReport {
    pub action: ActionReport,
    pub path_dump: PathBuf,
    pub action_path: PathBuf,
    pub manifest_path: PathBuf,
}

pub fn cmd_euclid(cfg: &RunConfig, left: &Path, right: &Path) -> Result<EuclidReport, CliError> {
    let started = now();
    let r = cfg.resolve()?;
    let omega = r.single_omega()?;
    let (a, b) = (load_field(left)?, load_field(right)?);
    for (p, f) in [(left, &a), (right, &b)] {
        if *f.grid() != r.problem.grid {
            return Err(CliError::Config(format!("{}: grid differs from the configured grid", p.display())));
        }
    }
    let sys = EuclideanSystem::from_state(r.problem.functional(omega)?, &a)?;
    let out = find_instanton(&sys, &a, &b, &r.euclid)?;
    let action = ActionReport::new(omega, r.problem.epsilon, sys.mu(), &out);

    fs::create_dir_all(&r.output_dir)?;
    let path_dump = r.output_dir.join("path.gpe");
    let action_path = r.output_dir.join("action.json");
    save_path(&path_dump, &out.path)?;
    fs::write(&action_path, serde_json::to_string_pretty(&action)? + "\n")?;
    let entry = |p: &Path, kind| FileEntry {
        path: relative(&r.output_dir, p),
        kind,
        omega: Some(omega),
        seed: None,
        branch_id: None,
        converged: Some(out.converged),
    };
    let manifest = RunManifest {
        tool: "peanut",
        version: env!("CARGO_PKG_VERSION"),
        command: "euclid",
        config: cfg.clone(),
        started_unix: started,
        finished_unix: now(),
        files: vec![entry(&path_dump, "path"), entry(&action_path, "action_json")],
        all_converged: out.converged,
    };
    let manifest_path = write_manifest(&r.output_dir, &manifest)?;
    Ok(EuclidReport { action, path_dump, action_path, manifest_path })
}

pub fn cmd_timescales(t_q: f64, t_c: f64, t_a: f64) -> Result<TimescaleVerdict, CliError> {
    let inp = TimescaleInput::new(t_q, t_c, t_a)?;
    Ok(effective_time(&inp)?)
}
