//! Run configuration. The file is TOML restricted to `key = value` lines
//! under `[section]` headers; unknown keys are rejected.
//!
//! ```toml
//! [potential]
//! kind = "cassini"          # cassini | channel | pinned
//! a = 0.25
//! b = 0.275
//!
//! [grid]
//! nx = 128
//! ny = 128
//! margin = 0.15
//!
//! [physics]
//! epsilon = 0.02
//! omega = 60.0
//! potential_sign = "literal" # literal | trapping
//! confinement = "support"    # support | box
//!
//! [sweep]
//! start = 40.0
//! end = 100.0
//! step = 10.0
//!
//! [seeds]
//! list = ["families"]
//!
//! [solver]
//! tol = 1e-8
//! max_iter = 20000
//! dt0 = 0.5
//!
//! [euclid]
//! nodes = 33
//! path_tol = 1e-4
//!
//! [output]
//! dir = "out"
//! ```
//!
//! An optional `[physical]` block (`m, g, n, hbar, rotation, a_geom`)
//! replaces `epsilon` and `omega`.

use std::fs;
use std::path::{Path, PathBuf};

use peanut_core::euclidean::InstantonOptions;
use peanut_core::potentials::{covering_grid, PotentialSpec, DEFAULT_SQUARE_OFFSET, DEFAULT_SQUARE_SIDE};
use peanut_core::solver::{MinimizeOptions, SeedSpec, SweepProblem};
use peanut_core::units::{to_dimensionless, PhysicalParams};
use peanut_core::{Confinement, Grid2D, PotentialSign};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    Cassini {
        a: f64,
        b: f64,
    },
    Channel {
        #[serde(default = "default_side")]
        square_side: f64,
        #[serde(default = "default_offset")]
        square_offset: f64,
        channel_width: f64,
        #[serde(default = "one")]
        channel_value: f64,
        #[serde(default = "one")]
        inside_value: f64,
        #[serde(default = "minus_ten")]
        outside_value: f64,
    },
    Pinned {
        center_value: f64,
        stiffness: f64,
        #[serde(default)]
        pins: Vec<[f64; 2]>,
        pin_depth: f64,
        pin_radius: f64,
    },
}

fn default_side() -> f64 {
    DEFAULT_SQUARE_SIDE
}
fn default_offset() -> f64 {
    DEFAULT_SQUARE_OFFSET
}
fn one() -> f64 {
    1.0
}
fn minus_ten() -> f64 {
    -10.0
}

impl PotentialConfig {
    pub fn spec(&self) -> Result<PotentialSpec, CliError> {
        let spec = match *self {
            PotentialConfig::Cassini { a, b } => PotentialSpec::Cassini { a, b },
            PotentialConfig::Channel {
                square_side,
                square_offset,
                channel_width,
                channel_value,
                inside_value,
                outside_value,
            } => PotentialSpec::PiecewiseChannel {
                square_side,
                square_offset,
                channel_width,
                channel_value,
                inside_value,
                outside_value,
            },
            PotentialConfig::Pinned { center_value, stiffness, ref pins, pin_depth, pin_radius } => {
                PotentialSpec::PinnedHarmonic {
                    center_value,
                    stiffness,
                    pins: pins.iter().map(|p| (p[0], p[1])).collect(),
                    pin_depth,
                    pin_radius,
                }
            }
        };
        spec.validate().map_err(|e| CliError::Config(format!("[potential]: {e}")))?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    /// Fraction by which the box exceeds the support of `V⁺` on each side.
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_margin() -> f64 {
    0.15
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConfig {
    #[default]
    Literal,
    Trapping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfinementConfig {
    #[default]
    Support,
    Box,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub epsilon: Option<f64>,
    pub omega: Option<f64>,
    #[serde(default)]
    pub potential_sign: SignConfig,
    #[serde(default)]
    pub confinement: ConfinementConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedsConfig {
    pub list: Vec<String>,
}

impl Default for SeedsConfig {
    fn default() -> Self {
        SeedsConfig { list: vec!["families".into()] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub dt0: f64,
    pub max_backtracks: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = MinimizeOptions::default();
        SolverConfig { tol: d.tol, max_iter: d.max_iter, dt0: d.dt0, max_backtracks: d.max_backtracks }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EuclidConfig {
    pub nodes: usize,
    pub path_tol: f64,
    pub max_newton: usize,
}

impl Default for EuclidConfig {
    fn default() -> Self {
        let d = InstantonOptions::default();
        EuclidConfig { nodes: d.nodes, path_tol: d.path_tol, max_newton: d.max_newton }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConfig {
    pub m: f64,
    pub g: f64,
    pub n: f64,
    pub hbar: f64,
    pub rotation: f64,
    pub a_geom: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub physics: PhysicsConfig,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub seeds: SeedsConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub euclid: EuclidConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub physical: Option<PhysicalConfig>,
}

/// Everything the commands need, checked and resolved.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub problem: SweepProblem,
    /// Single rotation speed, when one is given.
    pub omega: Option<f64>,
    pub omegas: Vec<f64>,
    pub seeds: Vec<SeedSpec>,
    pub euclid: InstantonOptions,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        // relative paths in the file are relative to the file
        if let Some(base) = path.parent() {
            if cfg.output.dir.is_relative() {
                cfg.output.dir = base.join(&cfg.output.dir);
            }
            for s in &mut cfg.seeds.list {
                if let Some(inner) = s.trim().strip_prefix("from_file(").and_then(|r| r.strip_suffix(')')) {
                    let p = Path::new(inner.trim());
                    if p.is_relative() {
                        *s = format!("from_file({})", base.join(p).display());
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn epsilon_omega(&self) -> Result<(f64, Option<f64>), CliError> {
        match (&self.physical, self.physics.epsilon, self.physics.omega) {
            (Some(p), None, None) => {
                let d = to_dimensionless(&PhysicalParams {
                    m: p.m,
                    g: p.g,
                    n: p.n,
                    hbar: p.hbar,
                    omega: p.rotation,
                    a_geom: p.a_geom,
                })
                .map_err(|e| CliError::Config(format!("[physical]: {e}")))?;
                Ok((d.epsilon, Some(d.omega)))
            }
            (Some(_), _, _) => {
                Err(CliError::Config("[physical] replaces epsilon and omega; give one or the other".into()))
            }
            (None, Some(eps), omega) => Ok((eps, omega)),
            (None, None, _) => Err(CliError::Config("[physics] epsilon is required".into())),
        }
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let spec = self.potential.spec()?;
        let (epsilon, omega) = self.epsilon_omega()?;
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(CliError::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        if let Some(w) = omega {
            if !w.is_finite() {
                return Err(CliError::Config("omega must be finite".into()));
            }
        }
        let g = &self.grid;
        if !(g.margin >= 0.0) {
            return Err(CliError::Config("grid margin must be non-negative".into()));
        }
        let grid: Grid2D =
            covering_grid(&spec, g.nx, g.ny, g.margin).map_err(|e| CliError::Config(format!("[grid]: {e}")))?;

        let omegas = match (&self.sweep, omega) {
            (Some(s), _) => sweep_points(s)?,
            (None, Some(w)) => vec![w],
            (None, None) => Vec::new(),
        };

        let s = &self.solver;
        if !(s.tol > 0.0 && s.dt0 > 0.0) {
            return Err(CliError::Config("[solver] tol and dt0 must be positive".into()));
        }
        let opts = MinimizeOptions {
            tol: s.tol,
            max_iter: s.max_iter,
            dt0: s.dt0,
            max_backtracks: s.max_backtracks,
            ..Default::default()
        };

        let mut seeds = Vec::new();
        for text in &self.seeds.list {
            if text.trim() == "families" {
                seeds.extend(SeedSpec::families(&spec));
            } else {
                seeds.push(parse_seed(text)?);
            }
        }
        if seeds.is_empty() {
            return Err(CliError::Config("[seeds] list is empty".into()));
        }

        let e = &self.euclid;
        if e.nodes < 3 || !(e.path_tol > 0.0) {
            return Err(CliError::Config("[euclid] needs nodes >= 3 and positive path_tol".into()));
        }
        let euclid = InstantonOptions {
            nodes: e.nodes,
            path_tol: e.path_tol,
            max_newton: e.max_newton,
            ..Default::default()
        };

        let sign = match self.physics.potential_sign {
            SignConfig::Literal => PotentialSign::Literal,
            SignConfig::Trapping => PotentialSign::Trapping,
        };
        let confinement = match self.physics.confinement {
            ConfinementConfig::Support => Confinement::Support,
            ConfinementConfig::Box => Confinement::Box,
        };
        Ok(Resolved {
            problem: SweepProblem { spec, grid, epsilon, sign, confinement, opts },
            omega,
            omegas,
            seeds,
            euclid,
            output_dir: self.output.dir.clone(),
        })
    }
}

/// `start, start + step, …` up to `end`, each point computed from its index.
pub fn sweep_points(s: &SweepConfig) -> Result<Vec<f64>, CliError> {
    if !(s.step > 0.0) || !s.start.is_finite() || !s.end.is_finite() {
        return Err(CliError::Config("[sweep] step must be positive and bounds finite".into()));
    }
    if s.end < s.start {
        return Err(CliError::Config("[sweep] end is below start".into()));
    }
    let count = ((s.end - s.start) / s.step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| s.start + k as f64 * s.step).collect())
}

fn parse_numbers(args: &str, what: &str) -> Result<Vec<f64>, CliError> {
    args.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Config(format!("bad number `{t}` in {what}"))))
        .collect()
}

/// `uniform_tf`, `central_vortex`, `vortex_at(x, y)`,
/// `multi_vortex(x, y; x, y; …)` or `from_file(path)`.
pub fn parse_seed(text: &str) -> Result<SeedSpec, CliError> {
    let t = text.trim();
    let call = |name: &str| t.strip_prefix(name).and_then(|r| r.trim_start().strip_prefix('(')).and_then(|r| r.strip_suffix(')'));
    match t {
        "uniform_tf" => return Ok(SeedSpec::UniformTf),
        "central_vortex" => return Ok(SeedSpec::CentralVortex),
        _ => {}
    }
    if let Some(args) = call("vortex_at") {
        let v = parse_numbers(args, t)?;
        if v.len() != 2 {
            return Err(CliError::Config(format!("`{t}` needs two coordinates")));
        }
        return Ok(SeedSpec::VortexAt(v[0], v[1]));
    }
    if let Some(args) = call("multi_vortex") {
        let mut list = Vec::new();
        for pair in args.split(';') {
            let v = parse_numbers(pair, t)?;
            if v.len() != 2 {
                return Err(CliError::Config(format!("`{t}` needs `x, y` pairs separated by `;`")));
            }
            list.push((v[0], v[1]));
        }
        return Ok(SeedSpec::MultiVortex(list));
    }
    if let Some(path) = call("from_file") {
        return Ok(SeedSpec::FromFile(path.trim().to_string()));
    }
    Err(CliError::Config(format!("unknown seed `{t}`")))
}

impl Resolved {
    /// The single rotation speed for `solve` and `euclid`.
    pub fn single_omega(&self) -> Result<f64, CliError> {
        match (self.omega, self.omegas.as_slice()) {
            (Some(w), _) => Ok(w),
            (None, [w]) => Ok(*w),
            _ => Err(CliError::Config("[physics] omega is required for this command".into())),
        }
    }
}
