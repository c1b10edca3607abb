//! The `oracle-check` verb: quick cross-solver consistency checks on small
//! systems, meant as a smoke test of an installation.
//!
//! Two independent facts are checked on random clouds. First, at the fully
//! inverted state the correlation solver's derivative of every pair
//! correlator must match the exact solver's derivative of the same
//! observable; this exercises every coupling path with no truncation error,
//! because the hierarchy closure is exact at that state. Second, the two
//! solvers must agree on the excited population while only a small fraction
//! of the cloud has decayed.

use crate::scenario::{Failure, map_lib_err};
use superradiance::cloud::sample_cloud;
use superradiance::correlations::CorrelationSolver;
use superradiance::couplings::{CouplingMode, TransitionSpec, build_coupling_set};
use superradiance::ensemble::{EnsembleSpec, SolverChoice, run_ensemble};
use superradiance::master::{ExactSolver, MonitorOptions};
use superradiance::ode::OdeOptions;

const DERIVATIVE_TOL: f64 = 1e-12;
const POPULATION_TOL: f64 = 1e-5;

fn transitions_for(channels: usize) -> Vec<TransitionSpec> {
    let mut ts = vec![TransitionSpec {
        label: "g".into(),
        gamma: 1.0,
        lambda: 1.0,
        dipole: [1.0, 0.0, 0.0],
    }];
    if channels > 1 {
        ts.push(TransitionSpec {
            label: "a".into(),
            gamma: 0.7,
            lambda: 1.6,
            dipole: [0.0, 0.0, 1.0],
        });
    }
    if channels > 2 {
        ts.push(TransitionSpec {
            label: "q".into(),
            gamma: 0.3,
            lambda: 0.0,
            dipole: [1.0, 0.0, 0.0],
        });
    }
    ts
}

/// Largest deviation between the two solvers' inverted-state derivatives of
/// every pair correlator, relative to the largest coupling magnitude.
fn inverted_derivative_deviation(
    n: usize,
    channels: usize,
    seed: u64,
) -> Result<f64, Failure> {
    let transitions = transitions_for(channels);
    let cloud = sample_cloud(n, 0.6, 1e-3, seed).map_err(map_lib_err)?;
    let set =
        build_coupling_set(&cloud, &transitions, CouplingMode::Full, None).map_err(map_lib_err)?;

    let exact = ExactSolver::new(&set).map_err(map_lib_err)?;
    let corr = CorrelationSolver::new(&set).map_err(map_lib_err)?;

    let ye = exact.initial_inverted();
    let mut dye = vec![superradiance::C64::new(0.0, 0.0); ye.len()];
    exact.rhs(&ye, &mut dye);

    let yc = corr.initial_inverted();
    let mut dyc = vec![superradiance::C64::new(0.0, 0.0); yc.len()];
    let mut ws = corr.workspace();
    corr.rhs(&yc, &mut dyc, &mut ws);

    let mut scale: f64 = 1.0;
    for ch in &set.channels {
        for v in ch.g.iter() {
            scale = scale.max(v.norm());
        }
    }

    let mut worst: f64 = 0.0;
    for ch in 0..set.channels.len() {
        let de = exact.pair_correlations(&dye, ch);
        let dc = corr.correlation_matrix(&dyc, ch);
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((de[[i, j]] - dc[[i, j]]).norm());
            }
        }
    }
    Ok(worst / scale)
}

/// Evolve the same cloud with both solvers over an early window and return
/// the largest excited-population difference per atom.
fn early_population_deviation(n: usize, channels: usize, seed: u64) -> Result<f64, Failure> {
    let transitions = transitions_for(channels);
    let run = |choice: SolverChoice| {
        let mut spec = EnsembleSpec::new(n, 0.6, transitions.clone(), CouplingMode::Full);
        spec.solver = choice;
        spec.base_seed = seed;
        spec.horizon = Some(0.02);
        spec.samples = 16;
        spec.ode = OdeOptions::with_tols(1e-10, 1e-12);
        run_ensemble(&spec).map_err(map_lib_err)
    };
    let exact = run(SolverChoice::Exact)?;
    let corr = run(SolverChoice::Correlations)?;
    let worst = exact
        .mean
        .excited
        .iter()
        .zip(&corr.mean.excited)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    Ok(worst / n as f64)
}

pub struct OracleReport {
    pub lines: Vec<String>,
    pub all_passed: bool,
}

pub fn run_oracle_check() -> Result<OracleReport, Failure> {
    // Exercise the monitors once so a broken build trips here, not mid-run.
    let _ = MonitorOptions::default();

    let mut lines = Vec::new();
    let mut all_passed = true;
    let cases = [(2usize, 1usize), (3, 2), (4, 2), (3, 3)];

    for (i, &(n, channels)) in cases.iter().enumerate() {
        let seed = 1000 + i as u64;
        let dev = inverted_derivative_deviation(n, channels, seed)?;
        let ok = dev <= DERIVATIVE_TOL;
        all_passed &= ok;
        lines.push(format!(
            "{} inverted-state derivatives: {} atoms, {} channels, deviation {dev:.3e} (tol {DERIVATIVE_TOL:.0e})",
            if ok { "PASS" } else { "FAIL" },
            n,
            channels
        ));
    }

    for (i, &(n, channels)) in [(2usize, 1usize), (3, 2)].iter().enumerate() {
        let seed = 2000 + i as u64;
        let dev = early_population_deviation(n, channels, seed)?;
        let ok = dev <= POPULATION_TOL;
        all_passed &= ok;
        lines.push(format!(
            "{} early-time populations: {} atoms, {} channels, deviation {dev:.3e} per atom (tol {POPULATION_TOL:.0e})",
            if ok { "PASS" } else { "FAIL" },
            n,
            channels
        ));
    }

    lines.push(if all_passed {
        "all oracle checks passed".into()
    } else {
        "oracle checks FAILED".into()
    });
    Ok(OracleReport { lines, all_passed })
}
