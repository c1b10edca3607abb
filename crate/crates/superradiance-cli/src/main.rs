//! Command line front end for the superradiance toolkit.

mod config;
mod oracle;
mod outputs;
mod scenario;
mod sweep;

use clap::{Parser, Subcommand};
use config::{Scenario, validate_config};
use scenario::{Failure, RunContext};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "sr",
    version,
    about = "Superradiant decay of inverted multi-level atomic clouds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads for ensemble runs (default: all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Override the config's ensemble base seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Divide ensemble sizes by this factor (>= 1), for quick passes
    #[arg(long, global = true, default_value_t = 1.0)]
    scale: f64,

    /// Override the config's output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one scenario and write trajectories, peaks, and a manifest
    Run { config: PathBuf },
    /// Execute a scenario along its sweep axis, checkpointing each point
    Sweep { config: PathBuf },
    /// Parse a config and report every problem found
    Validate { config: PathBuf },
    /// Cross-check the solvers against each other on small systems
    OracleCheck,
}

fn load_scenario(path: &PathBuf, ctx: &RunContext) -> Result<(Scenario, String), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
    let mut sc = validate_config(&text).map_err(Failure::Config)?;
    ctx.apply(&mut sc);
    Ok((sc, text))
}

fn describe(sc: &Scenario, ctx: &RunContext) -> Vec<String> {
    let mut lines = vec![format!(
        "valid: solver {:?}, mode {:?}, {} atoms, sigma {:.6}, density {:.6}",
        sc.solver, sc.mode, sc.n_atoms, sc.sigma, sc.density
    )];
    for t in &sc.transitions {
        lines.push(format!(
            "  transition {}: rate {:.6}, wavelength {:.6}",
            t.label, t.gamma, t.lambda
        ));
    }
    lines.push(format!(
        "  {} runs (base seed {}), {} samples, horizon {}",
        sc.runs_for(sc.n_atoms, ctx.scale),
        sc.base_seed,
        sc.samples,
        sc.t_max.map(|t| format!("{t:.6}")).unwrap_or_else(|| "auto".into())
    ));
    if let Some((axis, values)) = &sc.sweep {
        lines.push(format!("  sweep over {axis:?}: {} points", values.len()));
    }
    lines.push(format!(
        "  time unit {:.6e}, length unit {:.6e} (reference transition {})",
        sc.time_unit, sc.length_unit, sc.reference_label
    ));
    lines
}

fn dispatch(cli: &Cli, ctx: &RunContext) -> Result<Vec<String>, Failure> {
    match &cli.command {
        Command::Run { config } => {
            let (sc, text) = load_scenario(config, ctx)?;
            scenario::run_scenario(&sc, &text, ctx).map(|r| r.lines)
        }
        Command::Sweep { config } => {
            let (sc, text) = load_scenario(config, ctx)?;
            sweep::run_sweep(&sc, &text, ctx).map(|r| r.lines)
        }
        Command::Validate { config } => {
            let (sc, _) = load_scenario(config, ctx)?;
            Ok(describe(&sc, ctx))
        }
        Command::OracleCheck => {
            let report = oracle::run_oracle_check()?;
            if report.all_passed {
                Ok(report.lines)
            } else {
                for line in &report.lines {
                    println!("{line}");
                }
                Err(Failure::Numerical("oracle checks failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if !(cli.scale >= 1.0) || !cli.scale.is_finite() {
        eprintln!("configuration errors:\n  - --scale must be a finite number >= 1");
        return ExitCode::from(2);
    }
    let workers = cli.workers.unwrap_or_else(num_threads);
    if let Some(w) = cli.workers {
        // Ignore failure: the pool can only be built once per process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    let ctx = RunContext {
        scale: cli.scale,
        workers,
        seed_override: cli.seed,
        out_override: cli.out.clone(),
    };
    match dispatch(&cli, &ctx) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprint!("{}", f.report());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}

fn num_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
