//! Scenario configuration: TOML parsing, unit normalization, validation.
//!
//! Configs come in two unit styles. Dimensionless style gives `gamma`,
//! `lambda`, `sigma`/`density` directly; SI style gives `gamma_hz` (s⁻¹),
//! `lambda_m` (meters) and `sigma_m`/`density_cm3`. The styles must not be
//! mixed. Either way, everything is normalized once on ingestion so that the
//! reference transition (the first with a finite wavelength) has unit decay
//! rate and unit wavelength; the conversion factors are kept for the
//! manifest.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use superradiance::cloud::{density_from_sigma, sigma_from_density};
use superradiance::couplings::{CouplingMode, TransitionSpec};
use superradiance::ode::OdeOptions;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    solver: String,
    mode: Option<String>,
    n_atoms: usize,
    density: Option<f64>,
    density_cm3: Option<f64>,
    sigma: Option<f64>,
    sigma_m: Option<f64>,
    min_separation_factor: Option<f64>,
    transitions: Vec<RawTransition>,
    ensemble: Option<RawEnsemble>,
    time: Option<RawTime>,
    output: Option<RawOutput>,
    sweep: Option<RawSweep>,
    tolerances: Option<RawTolerances>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransition {
    label: String,
    gamma: Option<f64>,
    gamma_hz: Option<f64>,
    lambda: Option<f64>,
    lambda_m: Option<f64>,
    dipole: Option<[f64; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnsemble {
    n_runs: Option<usize>,
    scaled_runs: Option<bool>,
    base_seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    t_max: Option<f64>,
    samples: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<String>,
    per_run: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: String,
    values: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverSel {
    Exact,
    Correlation,
    Semiclassical,
    Eigenmode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Density,
    NAtoms,
    GammaRatio,
}

#[derive(Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleRule {
    Fixed(usize),
    /// 15360 / N cloud realizations, keeping the per-scenario sampling
    /// budget roughly flat across cloud sizes.
    Scaled,
}

/// A validated scenario in internal units (reference Γ = 1, reference λ = 1).
#[derive(Clone, Debug)]
pub struct Scenario {
    pub solver: SolverSel,
    pub mode: CouplingMode,
    pub n_atoms: usize,
    pub sigma: f64,
    pub density: f64,
    pub transitions: Vec<TransitionSpec>,
    pub ensemble_rule: EnsembleRule,
    pub base_seed: u64,
    pub t_max: Option<f64>,
    pub samples: usize,
    pub out_dir: PathBuf,
    pub per_run: bool,
    pub sweep: Option<(SweepAxis, Vec<f64>)>,
    pub ode: OdeOptions,
    pub min_separation_factor: f64,
    /// Label of the transition whose rate and wavelength set the units.
    pub reference_label: String,
    /// Multiply internal times by this to recover input units (seconds for
    /// SI configs, the input's own time unit otherwise).
    pub time_unit: f64,
    /// Multiply internal lengths by this to recover input units.
    pub length_unit: f64,
}

impl Scenario {
    /// Ensemble size for a given atom count, after the reduction factor.
    pub fn runs_for(&self, n_atoms: usize, scale: f64) -> usize {
        let base = match self.ensemble_rule {
            EnsembleRule::Fixed(n) => n,
            EnsembleRule::Scaled => (15360 / n_atoms.max(1)).max(1),
        };
        ((base as f64 / scale).floor() as usize).max(1)
    }
}

fn parse_solver(s: &str, errors: &mut Vec<String>) -> SolverSel {
    match s {
        "exact" => SolverSel::Exact,
        "correlation" => SolverSel::Correlation,
        "semiclassical" => SolverSel::Semiclassical,
        "eigenmode" => SolverSel::Eigenmode,
        other => {
            errors.push(format!(
                "solver: unknown value {other:?} (expected exact, correlation, semiclassical, or eigenmode)"
            ));
            SolverSel::Correlation
        }
    }
}

fn parse_mode(s: Option<&str>, errors: &mut Vec<String>) -> CouplingMode {
    match s {
        None | Some("full") => CouplingMode::Full,
        Some("inelastic_only") => CouplingMode::InelasticOnly,
        Some("dicke") => CouplingMode::Dicke,
        Some(other) => {
            errors.push(format!(
                "mode: unknown value {other:?} (expected full, inelastic_only, or dicke)"
            ));
            CouplingMode::Full
        }
    }
}

fn parse_axis(s: &str, errors: &mut Vec<String>) -> SweepAxis {
    match s {
        "density" => SweepAxis::Density,
        "n_atoms" => SweepAxis::NAtoms,
        "gamma_ratio" => SweepAxis::GammaRatio,
        other => {
            errors.push(format!(
                "sweep.axis: unknown value {other:?} (expected density, n_atoms, or gamma_ratio)"
            ));
            SweepAxis::Density
        }
    }
}

/// Parse and validate a raw config text. On failure every detected problem
/// is reported, not just the first.
pub fn validate_config(text: &str) -> Result<Scenario, Vec<String>> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| vec![format!("parse error: {e}")])?;
    let mut errors = Vec::new();

    let solver = parse_solver(&raw.solver, &mut errors);
    let mode = parse_mode(raw.mode.as_deref(), &mut errors);
    if raw.n_atoms == 0 {
        errors.push("n_atoms: must be at least 1".into());
    }
    if raw.transitions.is_empty() {
        errors.push("transitions: at least one transition is required".into());
    }

    // Decide the unit style before converting anything.
    let any_si = raw.transitions.iter().any(|t| t.gamma_hz.is_some() || t.lambda_m.is_some())
        || raw.sigma_m.is_some()
        || raw.density_cm3.is_some();
    let any_plain = raw.transitions.iter().any(|t| t.gamma.is_some() || t.lambda.is_some())
        || raw.sigma.is_some()
        || raw.density.is_some();
    if any_si && any_plain {
        errors.push(
            "units: SI keys (gamma_hz, lambda_m, sigma_m, density_cm3) and dimensionless keys \
             (gamma, lambda, sigma, density) cannot be mixed in one config"
            .into(),
        );
    }
    let si_input = any_si && !any_plain;

    struct Tr {
        label: String,
        gamma: f64,
        lambda: f64,
        dipole: [f64; 3],
    }
    let mut parsed: Vec<Tr> = Vec::new();
    for (i, t) in raw.transitions.iter().enumerate() {
        let which = format!("transitions[{i}] ({})", t.label);
        let gamma = match (si_input, t.gamma, t.gamma_hz) {
            (false, Some(g), None) => g,
            (true, None, Some(g)) => g,
            (false, None, None) => {
                errors.push(format!("{which}: missing gamma"));
                1.0
            }
            (true, None, None) => {
                errors.push(format!("{which}: missing gamma_hz"));
                1.0
            }
            _ => {
                errors.push(format!("{which}: give exactly one of gamma / gamma_hz"));
                1.0
            }
        };
        let lambda = match (si_input, t.lambda, t.lambda_m) {
            (false, Some(l), None) => l,
            (true, None, Some(l)) => l,
            (false, None, None) => {
                errors.push(format!("{which}: missing lambda (use 0 for a non-interacting channel)"));
                0.0
            }
            (true, None, None) => {
                errors.push(format!("{which}: missing lambda_m (use 0 for a non-interacting channel)"));
                0.0
            }
            _ => {
                errors.push(format!("{which}: give exactly one of lambda / lambda_m"));
                0.0
            }
        };
        if !(gamma > 0.0) || !gamma.is_finite() {
            errors.push(format!("{which}: decay rate must be positive and finite"));
        }
        if lambda < 0.0 || !lambda.is_finite() {
            errors.push(format!("{which}: wavelength must be non-negative and finite"));
        }
        if t.label.is_empty() {
            errors.push(format!("transitions[{i}]: label must be non-empty"));
        }
        if parsed.iter().any(|p| p.label == t.label) {
            errors.push(format!("transitions[{i}]: duplicate label {:?}", t.label));
        }
        parsed.push(Tr {
            label: t.label.clone(),
            gamma,
            lambda,
            dipole: t.dipole.unwrap_or([1.0, 0.0, 0.0]),
        });
    }

    // Reference transition: first interacting channel, else the first.
    let reference = parsed
        .iter()
        .position(|t| t.lambda > 0.0)
        .unwrap_or(0);
    let (gamma_ref, lambda_ref, reference_label) = if parsed.is_empty() {
        (1.0, 1.0, String::new())
    } else {
        let r = &parsed[reference];
        (r.gamma, if r.lambda > 0.0 { r.lambda } else { 1.0 }, r.label.clone())
    };
    let has_interacting = parsed.iter().any(|t| t.lambda > 0.0);

    let transitions: Vec<TransitionSpec> = parsed
        .iter()
        .map(|t| TransitionSpec {
            label: t.label.clone(),
            gamma: t.gamma / gamma_ref,
            lambda: t.lambda / lambda_ref,
            dipole: t.dipole,
        })
        .collect();

    // Geometry: exactly one of the four width/density keys.
    let geometry_keys = [
        raw.sigma.is_some(),
        raw.sigma_m.is_some(),
        raw.density.is_some(),
        raw.density_cm3.is_some(),
    ];
    let n_geometry = geometry_keys.iter().filter(|k| **k).count();
    if n_geometry != 1 {
        errors.push(format!(
            "geometry: give exactly one of sigma, sigma_m, density, density_cm3 (found {n_geometry})"
        ));
    }
    if (raw.density.is_some() || raw.density_cm3.is_some()) && !has_interacting && !parsed.is_empty()
    {
        errors.push(
            "geometry: density requires a transition with a finite wavelength to set the length scale"
                .into(),
        );
    }

    // Internal density is (number per reference wavelength cubed).
    let mut sigma_internal = None;
    let mut density_internal = None;
    if let Some(s) = raw.sigma {
        sigma_internal = Some(s / lambda_ref);
    }
    if let Some(s) = raw.sigma_m {
        sigma_internal = Some(s / lambda_ref);
    }
    if let Some(d) = raw.density {
        // Densities scale as inverse length cubed, so converting from the
        // input length unit to the reference wavelength multiplies by λ_ref³.
        density_internal = Some(d * lambda_ref.powi(3));
    }
    if let Some(d) = raw.density_cm3 {
        // cm⁻³ to (reference λ)⁻³: λ_ref is in meters here.
        density_internal = Some(d * 1e6 * lambda_ref.powi(3));
    }
    let (sigma, density) = match (sigma_internal, density_internal) {
        (Some(s), None) => {
            if !(s > 0.0) || !s.is_finite() {
                errors.push("sigma: must be positive and finite".into());
                (1.0, 1.0)
            } else {
                (s, density_from_sigma(raw.n_atoms.max(1), s))
            }
        }
        (None, Some(d)) => {
            if !(d > 0.0) || !d.is_finite() {
                errors.push("density: must be positive and finite".into());
                (1.0, 1.0)
            } else {
                match sigma_from_density(raw.n_atoms.max(1), d) {
                    Ok(s) => (s, d),
                    Err(e) => {
                        errors.push(format!("density: {e}"));
                        (1.0, d)
                    }
                }
            }
        }
        _ => (1.0, 1.0),
    };

    let ensemble_rule = match raw.ensemble.as_ref() {
        None => EnsembleRule::Scaled,
        Some(e) => match (e.n_runs, e.scaled_runs.unwrap_or(false)) {
            (Some(_), true) => {
                errors.push("ensemble: give n_runs or scaled_runs, not both".into());
                EnsembleRule::Scaled
            }
            (Some(n), false) => {
                if n == 0 {
                    errors.push("ensemble.n_runs: must be at least 1".into());
                }
                EnsembleRule::Fixed(n.max(1))
            }
            (None, _) => EnsembleRule::Scaled,
        },
    };
    let base_seed = raw.ensemble.as_ref().and_then(|e| e.base_seed).unwrap_or(0);

    let t_max = raw.time.as_ref().and_then(|t| t.t_max);
    if let Some(t) = t_max {
        if !(t > 0.0) || !t.is_finite() {
            errors.push("time.t_max: must be positive and finite".into());
        }
    }
    let samples = raw.time.as_ref().and_then(|t| t.samples).unwrap_or(400);
    if samples < 8 {
        errors.push("time.samples: need at least 8 grid points".into());
    }

    let min_separation_factor = raw.min_separation_factor.unwrap_or(1e-3);
    if !(min_separation_factor >= 0.0) || min_separation_factor >= 1.0 {
        errors.push("min_separation_factor: must lie in [0, 1)".into());
    }

    let mut ode = OdeOptions::default();
    if let Some(t) = raw.tolerances.as_ref() {
        if let Some(r) = t.rel_tol {
            ode.rel_tol = r;
        }
        if let Some(a) = t.abs_tol {
            ode.abs_tol = a;
        }
        if !(ode.rel_tol >= 1e-14 && ode.rel_tol.is_finite()) {
            errors.push("tolerances.rel_tol: out of range".into());
        }
        if !(ode.abs_tol > 0.0 && ode.abs_tol.is_finite()) {
            errors.push("tolerances.abs_tol: out of range".into());
        }
    }

    let sweep = match raw.sweep.as_ref() {
        None => None,
        Some(s) => {
            let axis = parse_axis(&s.axis, &mut errors);
            if s.values.len() < 2 {
                errors.push("sweep.values: a sweep needs at least 2 points".into());
            }
            match axis {
                SweepAxis::Density => {
                    if s.values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                        errors.push("sweep.values: densities must be positive and finite".into());
                    }
                }
                SweepAxis::NAtoms => {
                    if s.values.iter().any(|v| *v < 1.0 || v.fract() != 0.0) {
                        errors.push("sweep.values: atom counts must be positive integers".into());
                    }
                }
                SweepAxis::GammaRatio => {
                    if s.values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                        errors.push("sweep.values: rate ratios must be positive and finite".into());
                    }
                    let labels: Vec<&str> =
                        parsed.iter().map(|t| t.label.as_str()).collect();
                    if !labels.contains(&"g") || !labels.contains(&"a") {
                        errors.push(
                            "sweep.axis = gamma_ratio needs transitions labeled \"g\" and \"a\""
                                .into(),
                        );
                    }
                }
            }
            Some((axis, s.values.clone()))
        }
    };

    // Solver-specific structure checks.
    match solver {
        SolverSel::Semiclassical => {
            let n_int = transitions.iter().filter(|t| t.lambda > 0.0).count();
            let ok = (transitions.len() == 1 && n_int == 1)
                || (transitions.len() == 2 && n_int == 1);
            if !ok && !transitions.is_empty() {
                errors.push(
                    "solver = semiclassical supports one interacting transition, optionally \
                     plus one non-interacting transition"
                        .into(),
                );
            }
        }
        SolverSel::Eigenmode => {
            if transitions.len() != 1 && !transitions.is_empty() {
                errors.push("solver = eigenmode needs exactly one transition".into());
            }
            if transitions.first().is_some_and(|t| t.lambda == 0.0) {
                errors.push("solver = eigenmode needs an interacting transition".into());
            }
        }
        _ => {}
    }

    let out_dir = PathBuf::from(
        raw.output
            .as_ref()
            .and_then(|o| o.directory.clone())
            .unwrap_or_else(|| "out".into()),
    );
    let per_run = raw.output.as_ref().and_then(|o| o.per_run).unwrap_or(false);

    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(Scenario {
        solver,
        mode,
        n_atoms: raw.n_atoms,
        sigma,
        density,
        transitions,
        ensemble_rule,
        base_seed,
        t_max,
        samples,
        out_dir,
        per_run,
        sweep,
        ode,
        min_separation_factor,
        reference_label,
        time_unit: 1.0 / gamma_ref,
        length_unit: lambda_ref,
    })
}
