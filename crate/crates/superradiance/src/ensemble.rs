//! Ensemble averaging over frozen cloud configurations.
//!
//! Each run samples a fresh Gaussian cloud (seed = base seed + run index),
//! builds its couplings, evolves the fully inverted state, and samples
//! observables on a shared time grid. The grid horizon is found with a pilot
//! run that keeps doubling until the emission burst is over: the total rate
//! must fall to 1% of its running peak and no interacting channel may still
//! be rising at the end. Aggregation folds runs in index order, so results
//! are bit-reproducible no matter how the work is scheduled.

use crate::basis::{truncated_pair_count, DEFAULT_MAX_PAIRS};
use crate::cloud::{sample_cloud, DEFAULT_MIN_SEPARATION_FACTOR};
use crate::correlations::{CorrelationMonitor, CorrelationSolver};
use crate::couplings::{build_coupling_set, CouplingMode, CouplingSet, TransitionSpec};
use crate::master::{ExactSolver, MonitorOptions};
use crate::ode::OdeOptions;
use crate::trajectory::Trajectory;
use crate::{Error, Result};
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    /// Exact when the truncated pair basis fits, correlations otherwise.
    Auto,
    Exact,
    Correlations,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Exact,
    Correlations,
}

#[derive(Clone, Debug)]
pub struct EnsembleSpec {
    pub n_atoms: usize,
    pub sigma: f64,
    pub transitions: Vec<TransitionSpec>,
    pub mode: CouplingMode,
    pub solver: SolverChoice,
    pub runs: usize,
    pub base_seed: u64,
    pub ode: OdeOptions,
    /// Points on the shared sample grid.
    pub samples: usize,
    /// Fixed horizon; when absent a pilot run finds one.
    pub horizon: Option<f64>,
    /// Closest allowed pair distance; default is a small fraction of σ.
    pub min_separation: Option<f64>,
    /// Keep every run's trajectory in the result (memory permitting).
    pub keep_per_run: bool,
}

impl EnsembleSpec {
    pub fn new(
        n_atoms: usize,
        sigma: f64,
        transitions: Vec<TransitionSpec>,
        mode: CouplingMode,
    ) -> Self {
        EnsembleSpec {
            n_atoms,
            sigma,
            transitions,
            mode,
            solver: SolverChoice::Auto,
            runs: 1,
            base_seed: 0,
            ode: OdeOptions::default(),
            samples: 400,
            horizon: None,
            min_separation: None,
            keep_per_run: false,
        }
    }

    fn min_separation(&self) -> f64 {
        self.min_separation
            .unwrap_or(DEFAULT_MIN_SEPARATION_FACTOR * self.sigma)
    }

    fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidArgument("need at least one run".into()));
        }
        if self.samples < 8 {
            return Err(Error::InvalidArgument(format!(
                "sample grid of {} points is too coarse",
                self.samples
            )));
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::InvalidArgument(format!("horizon {h} must be positive")));
            }
        }
        Ok(())
    }

    pub fn resolve_solver(&self) -> Result<SolverKind> {
        match self.solver {
            SolverChoice::Exact => Ok(SolverKind::Exact),
            SolverChoice::Correlations => Ok(SolverKind::Correlations),
            SolverChoice::Auto => {
                let fits = truncated_pair_count(self.n_atoms, self.transitions.len())
                    .map(|p| p <= DEFAULT_MAX_PAIRS as u128)
                    .unwrap_or(false);
                Ok(if fits { SolverKind::Exact } else { SolverKind::Correlations })
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct EnsembleResult {
    pub mean: Trajectory,
    /// Standard error of the total emission rate at each sample.
    pub total_rate_std_err: Vec<f64>,
    pub runs: usize,
    pub horizon: f64,
    pub solver_used: SolverKind,
    /// Accepted integrator steps summed over runs.
    pub total_steps: u64,
    /// Individual run trajectories, present when requested.
    pub per_run: Option<Vec<Trajectory>>,
}

fn linspace(end: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| end * i as f64 / (points - 1) as f64).collect()
}

fn build_for_run(spec: &EnsembleSpec, run: usize) -> Result<CouplingSet> {
    let cloud = sample_cloud(
        spec.n_atoms,
        spec.sigma,
        spec.min_separation(),
        spec.base_seed + run as u64,
    )?;
    build_coupling_set(&cloud, &spec.transitions, spec.mode, Some(spec.min_separation()))
}

fn evolve_set(
    set: &CouplingSet,
    kind: SolverKind,
    grid: &[f64],
    ode: &OdeOptions,
) -> Result<(Trajectory, u64)> {
    match kind {
        SolverKind::Exact => {
            let solver = ExactSolver::new(set)?;
            let (tr, stats) = solver.evolve(grid, ode, &MonitorOptions::default())?;
            Ok((tr, stats.accepted as u64))
        }
        SolverKind::Correlations => {
            let solver = CorrelationSolver::new(set)?;
            let (tr, stats) = solver.evolve(grid, ode, &CorrelationMonitor::default())?;
            Ok((tr, stats.accepted as u64))
        }
    }
}

/// True when the grid horizon contains the emission burst: the total rate
/// has fallen to 1% of its peak and no interacting channel peaks at the
/// final sample.
pub fn horizon_contains_burst(tr: &Trajectory, interacting: &[bool]) -> bool {
    let last = tr.total_rate.len() - 1;
    let peak = tr.total_rate.iter().cloned().fold(0.0f64, f64::max);
    if !(peak > 0.0) {
        return false;
    }
    if tr.total_rate[last] > 0.01 * peak {
        return false;
    }
    for (ch, flag) in interacting.iter().enumerate() {
        if !flag {
            continue;
        }
        let series = &tr.rates[ch];
        let mut argmax = 0;
        for (i, v) in series.iter().enumerate() {
            if *v > series[argmax] {
                argmax = i;
            }
        }
        if argmax == last {
            return false;
        }
    }
    true
}

/// Find a horizon for the shared grid by evolving the first run on doubling
/// spans until the burst fits, then padding by 25%.
fn pilot_horizon(spec: &EnsembleSpec, kind: SolverKind) -> Result<f64> {
    let set = build_for_run(spec, 0)?;
    let gamma_tot: f64 = spec.transitions.iter().map(|t| t.gamma).sum();
    let interacting: Vec<bool> = set
        .channels
        .iter()
        .map(|ch| ch.g.iter().enumerate().any(|(q, v)| {
            let n = spec.n_atoms;
            q / n != q % n && *v != crate::C64::new(0.0, 0.0)
        }))
        .collect();
    let mut horizon = 3.0 / gamma_tot;
    for _ in 0..24 {
        let grid = linspace(horizon, spec.samples);
        let (tr, _) = evolve_set(&set, kind, &grid, &spec.ode)?;
        if horizon_contains_burst(&tr, &interacting) {
            return Ok(1.25 * horizon);
        }
        horizon *= 2.0;
    }
    Err(Error::Accuracy(format!(
        "emission burst still unfinished at horizon {horizon:.3e}"
    )))
}

/// Run the full ensemble and average the sampled observables.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<EnsembleResult> {
    spec.validate()?;
    let kind = spec.resolve_solver()?;
    let horizon = match spec.horizon {
        Some(h) => h,
        None => pilot_horizon(spec, kind)?,
    };
    let grid = linspace(horizon, spec.samples);
    let runs: Vec<(Trajectory, u64)> = (0..spec.runs)
        .into_par_iter()
        .map(|r| {
            let set = build_for_run(spec, r)?;
            evolve_set(&set, kind, &grid, &spec.ode)
        })
        .collect::<Result<Vec<_>>>()?;

    let labels = runs[0].0.channel_labels.clone();
    let mut mean = Trajectory::zeros(grid.clone(), labels, spec.n_atoms);
    let mut total_steps = 0u64;
    for (tr, steps) in &runs {
        mean.accumulate(tr)?;
        total_steps += steps;
    }
    let nr = spec.runs as f64;
    mean.scale(1.0 / nr);
    // Two-pass variance: the naive sum-of-squares form cancels to rounding
    // noise when the runs agree, which would report a spurious spread for
    // deterministic ensembles.
    let mut sqdev = vec![0.0f64; grid.len()];
    for (tr, _) in &runs {
        for ((acc, v), m) in sqdev.iter_mut().zip(&tr.total_rate).zip(&mean.total_rate) {
            let d = v - m;
            *acc += d * d;
        }
    }
    let total_rate_std_err: Vec<f64> = sqdev
        .iter()
        .map(|s| {
            if spec.runs > 1 {
                (s / (nr - 1.0) / nr).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let per_run = if spec.keep_per_run {
        Some(runs.into_iter().map(|(tr, _)| tr).collect())
    } else {
        None
    };
    Ok(EnsembleResult {
        mean,
        total_rate_std_err,
        runs: spec.runs,
        horizon,
        solver_used: kind,
        total_steps,
        per_run,
    })
}
