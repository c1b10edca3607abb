//! The `sweep` verb: one scenario swept along one axis, checkpointed per
//! point so an interrupted sweep resumes where it stopped.

use crate::config::{Scenario, SolverSel, SweepAxis};
use crate::outputs::{
    SweepPoint, config_sha256, summarize_sweep, sweep_csv, write_atomic, write_manifest,
};
use crate::scenario::{Failure, RunContext, RunReport, map_lib_err};
use serde::{Deserialize, Serialize};
use std::path::Path;
use superradiance::cloud::sigma_from_density;
use superradiance::eigenmodes::averaged_max_decay_rate;
use superradiance::ensemble::{EnsembleSpec, SolverChoice, run_ensemble};
use superradiance::semiclassical::{cascade_trajectory, shape_mu, two_level_trajectory};
use superradiance::trajectory::Trajectory;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    config_sha256: String,
    point: SweepPoint,
}

fn axis_name(a: SweepAxis) -> &'static str {
    match a {
        SweepAxis::Density => "density",
        SweepAxis::NAtoms => "n_atoms",
        SweepAxis::GammaRatio => "gamma_ratio",
    }
}

/// Specialize the base scenario to one sweep point.
fn point_scenario(sc: &Scenario, axis: SweepAxis, value: f64) -> Result<Scenario, Failure> {
    let mut p = sc.clone();
    p.sweep = None;
    match axis {
        SweepAxis::Density => {
            p.density = value;
            p.sigma = sigma_from_density(p.n_atoms, value).map_err(map_lib_err)?;
        }
        SweepAxis::NAtoms => {
            p.n_atoms = value as usize;
            p.sigma = sigma_from_density(p.n_atoms, p.density).map_err(map_lib_err)?;
        }
        SweepAxis::GammaRatio => {
            let base = p
                .transitions
                .iter()
                .find(|t| t.label == "a")
                .map(|t| t.gamma)
                .expect("validated: transition \"a\" exists");
            for t in &mut p.transitions {
                if t.label == "g" {
                    t.gamma = value * base;
                }
            }
        }
    }
    Ok(p)
}

/// Peak rates for one point: per channel then the total, emission rates per
/// atom so points with different atom numbers share an axis.
fn trajectory_peaks(tr: &Trajectory, n_atoms: usize) -> Result<Vec<(String, f64, f64)>, Failure> {
    let nf = n_atoms as f64;
    let mut peaks = Vec::with_capacity(tr.channel_labels.len() + 1);
    for (c, l) in tr.channel_labels.iter().enumerate() {
        let p = tr.channel_peak(c).map_err(map_lib_err)?;
        peaks.push((l.clone(), p.rate_max / nf, p.t_peak));
    }
    let p = tr.total_peak().map_err(map_lib_err)?;
    peaks.push(("total".into(), p.rate_max / nf, p.t_peak));
    Ok(peaks)
}

struct PointOutcome {
    peaks: Vec<(String, f64, f64)>,
    horizon: f64,
    runs: usize,
}

fn compute_point(p: &Scenario, ctx: &RunContext) -> Result<PointOutcome, Failure> {
    match p.solver {
        SolverSel::Exact | SolverSel::Correlation => {
            let runs = p.runs_for(p.n_atoms, ctx.scale);
            let mut spec = EnsembleSpec::new(p.n_atoms, p.sigma, p.transitions.clone(), p.mode);
            spec.solver = match p.solver {
                SolverSel::Exact => SolverChoice::Exact,
                _ => SolverChoice::Correlations,
            };
            spec.runs = runs;
            spec.base_seed = p.base_seed;
            spec.ode = p.ode.clone();
            spec.samples = p.samples;
            spec.horizon = p.t_max;
            spec.min_separation = Some(p.min_separation_factor * p.sigma);
            let result = run_ensemble(&spec).map_err(map_lib_err)?;
            Ok(PointOutcome {
                peaks: trajectory_peaks(&result.mean, p.n_atoms)?,
                horizon: result.horizon,
                runs,
            })
        }
        SolverSel::Semiclassical => {
            let interacting = p
                .transitions
                .iter()
                .find(|t| t.lambda > 0.0)
                .expect("validated: one interacting transition");
            let nf = p.n_atoms as f64;
            let mu = shape_mu(2.0 * std::f64::consts::PI * p.sigma / interacting.lambda);
            let (tr, horizon) = if p.transitions.len() == 1 {
                let g = interacting.gamma;
                let t_max = p
                    .t_max
                    .unwrap_or_else(|| ((1.0 + nf * mu).ln() + 1e4f64.ln()) / (g * (1.0 + nf * mu)));
                let times: Vec<f64> = (0..p.samples)
                    .map(|i| t_max * i as f64 / (p.samples - 1) as f64)
                    .collect();
                (
                    two_level_trajectory(p.n_atoms, mu, g, &interacting.label, &times),
                    t_max,
                )
            } else {
                let passive = p
                    .transitions
                    .iter()
                    .find(|t| t.lambda == 0.0)
                    .expect("validated: the second transition is non-interacting");
                let t_max = p
                    .t_max
                    .unwrap_or_else(|| 1e4f64.ln() / (passive.gamma + interacting.gamma));
                let times: Vec<f64> = (0..p.samples)
                    .map(|i| t_max * i as f64 / (p.samples - 1) as f64)
                    .collect();
                let mut tr =
                    cascade_trajectory(p.n_atoms, passive.gamma, interacting.gamma, mu, &times)
                        .map_err(map_lib_err)?;
                tr.channel_labels = vec![passive.label.clone(), interacting.label.clone()];
                (tr, t_max)
            };
            Ok(PointOutcome {
                peaks: trajectory_peaks(&tr, p.n_atoms)?,
                horizon,
                runs: 1,
            })
        }
        SolverSel::Eigenmode => {
            let runs = p.runs_for(p.n_atoms, ctx.scale);
            let stats = averaged_max_decay_rate(
                p.n_atoms,
                p.sigma,
                &p.transitions[0],
                p.mode,
                runs,
                p.base_seed,
            )
            .map_err(map_lib_err)?;
            // Modal decay rates are reported as is, not per atom; the axis
            // location of the maximum is what a sweep is after.
            Ok(PointOutcome {
                peaks: vec![
                    ("mode".into(), stats.mean_max_rate, 0.0),
                    ("total".into(), stats.mean_max_rate, 0.0),
                ],
                horizon: 0.0,
                runs,
            })
        }
    }
}

fn checkpoint_path(dir: &Path, index: usize) -> std::path::PathBuf {
    dir.join("checkpoints").join(format!("point_{index:04}.json"))
}

fn load_checkpoint(dir: &Path, index: usize, sha: &str) -> Option<SweepPoint> {
    let text = std::fs::read_to_string(checkpoint_path(dir, index)).ok()?;
    let cp: Checkpoint = serde_json::from_str(&text).ok()?;
    // A checkpoint from an edited config describes a different sweep.
    (cp.config_sha256 == sha).then_some(cp.point)
}

fn store_checkpoint(dir: &Path, sha: &str, point: &SweepPoint) -> Result<(), Failure> {
    let cp = Checkpoint { config_sha256: sha.into(), point: point.clone() };
    let text = serde_json::to_string_pretty(&cp).expect("checkpoint serializes");
    write_atomic(&checkpoint_path(dir, point.index), text.as_bytes())
        .map_err(|e| Failure::Numerical(format!("writing checkpoint {}: {e}", point.index)))
}

pub fn run_sweep(sc: &Scenario, config_text: &str, ctx: &RunContext) -> Result<RunReport, Failure> {
    let (axis, values) = sc
        .sweep
        .clone()
        .ok_or_else(|| Failure::Config(vec!["the sweep verb needs a [sweep] section".into()]))?;
    let dir = sc.out_dir.clone();
    std::fs::create_dir_all(dir.join("checkpoints"))
        .map_err(|e| Failure::Config(vec![format!("cannot create output directory {dir:?}: {e}")]))?;
    let sha = config_sha256(config_text);

    let mut lines = Vec::new();
    let mut points: Vec<SweepPoint> = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        if let Some(p) = load_checkpoint(&dir, i, &sha) {
            lines.push(format!(
                "point {}/{} ({} = {v}): cached ({})",
                i + 1,
                values.len(),
                axis_name(axis),
                p.status
            ));
            points.push(p);
            continue;
        }
        let point = match point_scenario(sc, axis, v).and_then(|p| {
            compute_point(&p, ctx).map(|o| (p, o))
        }) {
            Ok((p, o)) => SweepPoint {
                index: i,
                axis_value: v,
                n_atoms: p.n_atoms,
                density: p.density,
                runs: o.runs,
                status: "ok".into(),
                error: String::new(),
                peaks: o.peaks,
                horizon: o.horizon,
            },
            Err(Failure::Config(errs)) => {
                return Err(Failure::Config(errs));
            }
            Err(f) => SweepPoint {
                index: i,
                axis_value: v,
                n_atoms: sc.n_atoms,
                density: sc.density,
                runs: 0,
                status: "failed".into(),
                error: f.report().trim().to_string(),
                peaks: Vec::new(),
                horizon: 0.0,
            },
        };
        store_checkpoint(&dir, &sha, &point)?;
        match point.status.as_str() {
            "ok" => {
                let total = point.total_peak_per_atom().unwrap_or(f64::NAN);
                lines.push(format!(
                    "point {}/{} ({} = {v}): peak {total:.6} per atom",
                    i + 1,
                    values.len(),
                    axis_name(axis)
                ));
            }
            _ => lines.push(format!(
                "point {}/{} ({} = {v}): FAILED: {}",
                i + 1,
                values.len(),
                axis_name(axis),
                point.error
            )),
        }
        points.push(point);
    }

    write_atomic(&dir.join("sweep.csv"), sweep_csv(&points).as_bytes())
        .map_err(|e| Failure::Numerical(format!("writing sweep.csv: {e}")))?;
    let summary = summarize_sweep(axis_name(axis), &points);
    let summary_text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_atomic(&dir.join("sweep_summary.json"), summary_text.as_bytes())
        .map_err(|e| Failure::Numerical(format!("writing sweep_summary.json: {e}")))?;

    let files: Vec<String> = vec![
        "sweep.csv".into(),
        "sweep_summary.json".into(),
        "manifest.json".into(),
    ];
    let manifest = crate::scenario::manifest_for_sweep(sc, config_text, ctx, &files);
    write_manifest(&dir, &manifest)
        .map_err(|e| Failure::Numerical(format!("writing manifest.json: {e}")))?;

    if let Some(arg) = summary.argmax_axis_value {
        lines.push(format!(
            "maximum per-atom peak rate {:.6} at {} = {}",
            summary.max_rate_per_atom.unwrap_or(f64::NAN),
            axis_name(axis),
            arg
        ));
    }
    lines.push(format!(
        "{} of {} points completed, {} failed",
        summary.completed,
        points.len(),
        summary.failed
    ));
    lines.push(format!(
        "wrote {}, {}, {}",
        dir.join("sweep.csv").display(),
        dir.join("sweep_summary.json").display(),
        dir.join("manifest.json").display()
    ));
    Ok(RunReport { lines })
}
