//! The `run` verb: one scenario, one output directory.

use crate::config::{Scenario, SolverSel};
use crate::outputs::{
    self, EigenRow, Manifest, ManifestTransition, config_sha256, write_atomic, write_manifest,
};
use std::path::{Path, PathBuf};
use superradiance::eigenmodes::averaged_max_decay_rate;
use superradiance::ensemble::{EnsembleSpec, SolverChoice, SolverKind, run_ensemble};
use superradiance::semiclassical::{cascade_trajectory, shape_mu, two_level_trajectory};
use superradiance::trajectory::Trajectory;

/// Problems are sorted by who caused them: bad input exits 2, a system too
/// large for the requested solver exits 3, everything that went wrong while
/// computing or writing exits 4.
#[derive(Debug)]
pub enum Failure {
    Config(Vec<String>),
    Capacity(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Capacity(_) => 3,
            Failure::Numerical(_) => 4,
        }
    }

    pub fn report(&self) -> String {
        match self {
            Failure::Config(errs) => {
                let mut s = String::from("configuration errors:\n");
                for e in errs {
                    s.push_str(&format!("  - {e}\n"));
                }
                s
            }
            Failure::Capacity(m) => format!("capacity: {m}\n"),
            Failure::Numerical(m) => format!("error: {m}\n"),
        }
    }
}

pub fn map_lib_err(e: superradiance::Error) -> Failure {
    match e {
        superradiance::Error::Capacity(m) => Failure::Capacity(m),
        other => Failure::Numerical(other.to_string()),
    }
}

/// Global flags that tune a scenario without editing the config file.
#[derive(Clone, Debug)]
pub struct RunContext {
    pub scale: f64,
    pub workers: usize,
    pub seed_override: Option<u64>,
    pub out_override: Option<PathBuf>,
}

impl RunContext {
    pub fn apply(&self, sc: &mut Scenario) {
        if let Some(s) = self.seed_override {
            sc.base_seed = s;
        }
        if let Some(o) = &self.out_override {
            sc.out_dir = o.clone();
        }
    }
}

fn linspace(end: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| end * i as f64 / (points - 1) as f64)
        .collect()
}

fn solver_name(s: SolverSel) -> &'static str {
    match s {
        SolverSel::Exact => "exact",
        SolverSel::Correlation => "correlation",
        SolverSel::Semiclassical => "semiclassical",
        SolverSel::Eigenmode => "eigenmode",
    }
}

fn mode_name(m: superradiance::couplings::CouplingMode) -> &'static str {
    use superradiance::couplings::CouplingMode::*;
    match m {
        Full => "full",
        InelasticOnly => "inelastic_only",
        Dicke => "dicke",
    }
}

fn manifest_for(
    sc: &Scenario,
    verb: &str,
    config_text: &str,
    ctx: &RunContext,
    runs: usize,
    horizon: f64,
    outputs: Vec<String>,
) -> Manifest {
    Manifest {
        toolkit_version: outputs::TOOLKIT_VERSION.into(),
        config_sha256: config_sha256(config_text),
        verb: verb.into(),
        solver: solver_name(sc.solver).into(),
        mode: mode_name(sc.mode).into(),
        n_atoms: sc.n_atoms,
        sigma: sc.sigma,
        density: sc.density,
        transitions: sc
            .transitions
            .iter()
            .map(|t| ManifestTransition {
                label: t.label.clone(),
                gamma: t.gamma,
                lambda: t.lambda,
            })
            .collect(),
        runs,
        base_seed: sc.base_seed,
        seed_rule: "cloud r uses seed base_seed + r".into(),
        time_unit: sc.time_unit,
        length_unit: sc.length_unit,
        reference_label: sc.reference_label.clone(),
        horizon,
        samples: sc.samples,
        scale: ctx.scale,
        workers: ctx.workers,
        outputs,
    }
}

pub fn manifest_for_sweep(
    sc: &Scenario,
    config_text: &str,
    ctx: &RunContext,
    files: &[String],
) -> Manifest {
    manifest_for(
        sc,
        "sweep",
        config_text,
        ctx,
        sc.runs_for(sc.n_atoms, ctx.scale),
        sc.t_max.unwrap_or(0.0),
        files.to_vec(),
    )
}

fn write_per_run(dir: &Path, per_run: &[Trajectory], files: &mut Vec<String>) -> Result<(), Failure> {
    for (i, tr) in per_run.iter().enumerate() {
        let name = format!("runs/run_{i:04}.csv");
        write_atomic(&dir.join(&name), outputs::csv_string(tr).as_bytes())
            .map_err(|e| Failure::Numerical(format!("writing {name}: {e}")))?;
        files.push(name);
    }
    Ok(())
}

pub struct RunReport {
    pub lines: Vec<String>,
}

/// Execute a non-sweep scenario and write its outputs.
pub fn run_scenario(sc: &Scenario, config_text: &str, ctx: &RunContext) -> Result<RunReport, Failure> {
    if sc.sweep.is_some() {
        return Err(Failure::Config(vec![
            "this config has a [sweep] section; use the sweep verb".into(),
        ]));
    }
    let dir = sc.out_dir.clone();
    std::fs::create_dir_all(&dir)
        .map_err(|e| Failure::Config(vec![format!("cannot create output directory {dir:?}: {e}")]))?;

    match sc.solver {
        SolverSel::Exact | SolverSel::Correlation => run_quantum(sc, config_text, ctx, &dir),
        SolverSel::Semiclassical => run_semiclassical(sc, config_text, ctx, &dir),
        SolverSel::Eigenmode => run_eigenmode(sc, config_text, ctx, &dir),
    }
}

fn run_quantum(
    sc: &Scenario,
    config_text: &str,
    ctx: &RunContext,
    dir: &Path,
) -> Result<RunReport, Failure> {
    let runs = sc.runs_for(sc.n_atoms, ctx.scale);
    let mut spec = EnsembleSpec::new(sc.n_atoms, sc.sigma, sc.transitions.clone(), sc.mode);
    spec.solver = match sc.solver {
        SolverSel::Exact => SolverChoice::Exact,
        _ => SolverChoice::Correlations,
    };
    spec.runs = runs;
    spec.base_seed = sc.base_seed;
    spec.ode = sc.ode.clone();
    spec.samples = sc.samples;
    spec.horizon = sc.t_max;
    spec.min_separation = Some(sc.min_separation_factor * sc.sigma);
    spec.keep_per_run = sc.per_run;

    let result = run_ensemble(&spec).map_err(map_lib_err)?;

    let mut files = vec!["mean.csv".to_string(), "peaks.csv".to_string()];
    write_atomic(
        &dir.join("mean.csv"),
        outputs::mean_csv(&result.mean, &result.total_rate_std_err).as_bytes(),
    )
    .map_err(|e| Failure::Numerical(format!("writing mean.csv: {e}")))?;
    // Quote the ensemble spread at the sample nearest the peak as the
    // uncertainty on the peak rate.
    let peak = result.mean.total_peak().map_err(map_lib_err)?;
    let nearest = result
        .mean
        .times
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            (*a - peak.t_peak).abs().total_cmp(&(*b - peak.t_peak).abs())
        })
        .map(|(i, _)| i)
        .unwrap_or(0);
    let se = result.total_rate_std_err[nearest];
    let peaks_text = outputs::peaks_csv(&result.mean, Some(se)).map_err(map_lib_err)?;
    write_atomic(&dir.join("peaks.csv"), peaks_text.as_bytes())
        .map_err(|e| Failure::Numerical(format!("writing peaks.csv: {e}")))?;
    if let Some(per_run) = &result.per_run {
        write_per_run(dir, per_run, &mut files)?;
    }
    files.push("manifest.json".into());
    let manifest = manifest_for(sc, "run", config_text, ctx, runs, result.horizon, files.clone());
    write_manifest(dir, &manifest)
        .map_err(|e| Failure::Numerical(format!("writing manifest.json: {e}")))?;

    let peak = result.mean.total_peak().map_err(map_lib_err)?;
    let used = match result.solver_used {
        SolverKind::Exact => "exact",
        SolverKind::Correlations => "correlation",
    };
    Ok(RunReport {
        lines: vec![
            format!(
                "{} solver, {} runs, horizon {:.6} (internal time units)",
                used, result.runs, result.horizon
            ),
            format!("peak total rate {:.6} at t = {:.6}", peak.rate_max, peak.t_peak),
            format!("wrote {}", join_files(dir, &files)),
        ],
    })
}

fn run_semiclassical(
    sc: &Scenario,
    config_text: &str,
    ctx: &RunContext,
    dir: &Path,
) -> Result<RunReport, Failure> {
    let n = sc.n_atoms;
    let nf = n as f64;
    let interacting = sc
        .transitions
        .iter()
        .find(|t| t.lambda > 0.0)
        .expect("validated: one interacting transition");
    let k_sigma = 2.0 * std::f64::consts::PI * sc.sigma / interacting.lambda;
    let mu = shape_mu(k_sigma);

    let (tr, horizon) = if sc.transitions.len() == 1 {
        let gamma = interacting.gamma;
        let t_max = sc.t_max.unwrap_or_else(|| {
            // Late-time excitation falls like (1 + Nμ)e^{-Γ(1+Nμ)t}; this
            // horizon leaves about 1e-4 of it.
            ((1.0 + nf * mu).ln() + 1e4f64.ln()) / (gamma * (1.0 + nf * mu))
        });
        let times = linspace(t_max, sc.samples);
        (
            two_level_trajectory(n, mu, gamma, &interacting.label, &times),
            t_max,
        )
    } else {
        let passive = sc
            .transitions
            .iter()
            .find(|t| t.lambda == 0.0)
            .expect("validated: the second transition is non-interacting");
        let t_max = sc
            .t_max
            .unwrap_or_else(|| 1e4f64.ln() / (passive.gamma + interacting.gamma));
        let times = linspace(t_max, sc.samples);
        let mut tr = cascade_trajectory(n, passive.gamma, interacting.gamma, mu, &times)
            .map_err(map_lib_err)?;
        // The rate-equation channels are ordered (passive, interacting);
        // restore the config's labels.
        tr.channel_labels = vec![passive.label.clone(), interacting.label.clone()];
        (tr, t_max)
    };

    let files = vec!["mean.csv".to_string(), "peaks.csv".to_string(), "manifest.json".to_string()];
    let zeros = vec![0.0; tr.times.len()];
    write_atomic(&dir.join("mean.csv"), outputs::mean_csv(&tr, &zeros).as_bytes())
        .map_err(|e| Failure::Numerical(format!("writing mean.csv: {e}")))?;
    let peaks_text = outputs::peaks_csv(&tr, None).map_err(map_lib_err)?;
    write_atomic(&dir.join("peaks.csv"), peaks_text.as_bytes())
        .map_err(|e| Failure::Numerical(format!("writing peaks.csv: {e}")))?;
    let manifest = manifest_for(sc, "run", config_text, ctx, 1, horizon, files.clone());
    write_manifest(dir, &manifest)
        .map_err(|e| Failure::Numerical(format!("writing manifest.json: {e}")))?;

    let peak = tr.total_peak().map_err(map_lib_err)?;
    Ok(RunReport {
        lines: vec![
            format!("semiclassical, kσ = {k_sigma:.6}, μ = {mu:.9}"),
            format!("peak total rate {:.6} at t = {:.6}", peak.rate_max, peak.t_peak),
            format!("wrote {}", join_files(dir, &files)),
        ],
    })
}

fn run_eigenmode(
    sc: &Scenario,
    config_text: &str,
    ctx: &RunContext,
    dir: &Path,
) -> Result<RunReport, Failure> {
    let runs = sc.runs_for(sc.n_atoms, ctx.scale);
    let stats = averaged_max_decay_rate(
        sc.n_atoms,
        sc.sigma,
        &sc.transitions[0],
        sc.mode,
        runs,
        sc.base_seed,
    )
    .map_err(map_lib_err)?;

    let files = vec!["eigen.csv".to_string(), "manifest.json".to_string()];
    let rows = [EigenRow {
        n_atoms: sc.n_atoms,
        density: sc.density,
        mean_max_rate: stats.mean_max_rate,
        std_err: stats.std_err,
        runs: stats.runs,
    }];
    write_atomic(&dir.join("eigen.csv"), outputs::eigen_csv(&rows).as_bytes())
        .map_err(|e| Failure::Numerical(format!("writing eigen.csv: {e}")))?;
    let manifest = manifest_for(sc, "run", config_text, ctx, runs, 0.0, files.clone());
    write_manifest(dir, &manifest)
        .map_err(|e| Failure::Numerical(format!("writing manifest.json: {e}")))?;

    Ok(RunReport {
        lines: vec![
            format!(
                "eigenmode, {} clouds: fastest mode decay {:.6} ± {:.6}",
                stats.runs, stats.mean_max_rate, stats.std_err
            ),
            format!("wrote {}", join_files(dir, &files)),
        ],
    })
}

fn join_files(dir: &Path, files: &[String]) -> String {
    files
        .iter()
        .map(|f| dir.join(f).display().to_string())
        .collect::<Vec<_>>()
        .join(", ")
}
