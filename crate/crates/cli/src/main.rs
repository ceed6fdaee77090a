use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use peanut::config::parse_seed;
use peanut::run::{cmd_analyze, cmd_euclid, cmd_solve, cmd_sweep, cmd_timescales};
use peanut::{CliError, RunConfig};

#[derive(Parser)]
#[command(name = "peanut", version, about = "Rotating condensates in double-well traps")]
struct Cli {
    /// Worker threads for sweeps (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize at one rotation speed from one seed.
    Solve {
        config: PathBuf,
        /// Overrides the first entry of the seed list.
        #[arg(long)]
        seed: Option<String>,
    },
    /// Continue every seed family through the rotation sweep.
    Sweep { config: PathBuf },
    /// Energy, residual and vortex census of a field dump.
    Analyze {
        config: PathBuf,
        field: PathBuf,
        #[arg(long)]
        omega: Option<f64>,
    },
    /// Euclidean path between two stored end states.
    Euclid { config: PathBuf, left: PathBuf, right: PathBuf },
    /// Which process sets the transition time.
    Timescales {
        #[arg(long = "t-q")]
        t_q: f64,
        #[arg(long = "t-c")]
        t_c: f64,
        #[arg(long = "t-a")]
        t_a: f64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let say = |s: String| {
        if !cli.quiet {
            println!("{s}");
        }
    };
    match cli.command {
        Command::Solve { config, seed } => {
            let cfg = RunConfig::load(&config)?;
            let seed = seed.as_deref().map(parse_seed).transpose()?;
            let rep = cmd_solve(&cfg, seed)?;
            let r = &rep.record;
            say(format!(
                "omega={} branch={} energy={:e} mu={:e} residual={:e} iterations={} converged={}",
                r.omega,
                r.branch_id(),
                r.energy.total,
                r.mu,
                r.residual_norm,
                r.iterations,
                r.converged
            ));
            say(format!("wrote {}", rep.field_path.display()));
            if !r.converged {
                return Err(CliError::NotConverged(format!("residual {:e} above tolerance", r.residual_norm)));
            }
        }
        Command::Sweep { config } => {
            let cfg = RunConfig::load(&config)?;
            let rep = cmd_sweep(&cfg)?;
            for r in &rep.records {
                say(format!("{:>10} {:<18} {:<40} {:.12e}", r.omega, r.branch_id(), r.seed.label(), r.energy.total));
            }
            say(format!("wrote {}", rep.csv_path.display()));
            let bad = rep.records.iter().filter(|r| !r.converged).count();
            if bad > 0 {
                return Err(CliError::NotConverged(format!("{bad} of {} points did not converge", rep.records.len())));
            }
        }
        Command::Analyze { config, field, omega } => {
            let cfg = RunConfig::load(&config)?;
            let rep = cmd_analyze(&cfg, &field, omega)?;
            let e = &rep.energy;
            say(format!("omega {}", rep.omega));
            say(format!("energy_total {:e}", e.total));
            say(format!("energy_kinetic {:e}", e.kinetic));
            say(format!("energy_rotation {:e}", e.rotation));
            say(format!("energy_interaction {:e}", e.interaction));
            say(format!("energy_potential {:e}", e.potential));
            say(format!("mass {:e}", rep.mass));
            say(format!("mu {:e}", rep.mu));
            say(format!("residual {:e}", rep.residual));
            say(format!("branch_id {}", rep.census.symmetry_class.label()));
            say(format!("n_vortices {}", rep.census.count()));
            say(format!("vortex_positions {}", rep.census.packed_positions()));
        }
        Command::Euclid { config, left, right } => {
            let cfg = RunConfig::load(&config)?;
            let rep = cmd_euclid(&cfg, &left, &right)?;
            let a = &rep.action;
            say(format!(
                "residual={:e} converged={} S_E={:e}{:+e}i",
                a.residual, a.converged, a.action_re, a.action_im
            ));
            say(format!("wrote {}", rep.path_dump.display()));
            if !a.converged {
                return Err(CliError::NotConverged(format!("path residual {:e} above tolerance", a.residual)));
            }
        }
        Command::Timescales { t_q, t_c, t_a } => {
            let v = cmd_timescales(t_q, t_c, t_a)?;
            say(format!("effective_time={} regime={}", v.effective_time, v.regime.name()));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are config errors here; 2 is reserved for non-convergence
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: cannot start {n} worker threads");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
