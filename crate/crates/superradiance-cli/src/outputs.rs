//! Output files: run manifest, peak statistics, sweep tables.
//!
//! Every file is written atomically (temp file in the same directory, then
//! rename) so an interrupted run never leaves a truncated CSV behind a
//! checkpoint that claims it is complete.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write as _;
use std::path::Path;
use superradiance::trajectory::Trajectory;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn config_sha256(text: &str) -> String {
    let mut h = Sha256::new();
    h.update(text.as_bytes());
    format!("{:x}", h.finalize())
}

/// Write `bytes` to `path` via a sibling temp file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

#[derive(Serialize)]
pub struct ManifestTransition {
    pub label: String,
    pub gamma: f64,
    pub lambda: f64,
}

/// Record of what produced the files next to it. Field order is fixed and
/// there is no timestamp, so identical inputs give identical manifests.
#[derive(Serialize)]
pub struct Manifest {
    pub toolkit_version: String,
    pub config_sha256: String,
    pub verb: String,
    pub solver: String,
    pub mode: String,
    pub n_atoms: usize,
    pub sigma: f64,
    pub density: f64,
    pub transitions: Vec<ManifestTransition>,
    pub runs: usize,
    pub base_seed: u64,
    pub seed_rule: String,
    pub time_unit: f64,
    pub length_unit: f64,
    pub reference_label: String,
    pub horizon: f64,
    pub samples: usize,
    pub scale: f64,
    pub workers: usize,
    pub outputs: Vec<String>,
}

pub fn write_manifest(dir: &Path, m: &Manifest) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(m).expect("manifest serializes");
    write_atomic(&dir.join("manifest.json"), text.as_bytes())
}

/// Render a trajectory's CSV form in memory.
pub fn csv_string(tr: &Trajectory) -> String {
    let mut buf = Vec::new();
    tr.write_csv(&mut buf).expect("in-memory write cannot fail");
    String::from_utf8(buf).expect("trajectory CSV is UTF-8")
}

/// Peak statistics per channel plus the total, one row each.
pub fn peaks_csv(tr: &Trajectory, std_err_peak: Option<f64>) -> superradiance::Result<String> {
    let mut out = String::from("channel,rate_max,t_peak,at_origin,std_err\n");
    for (c, label) in tr.channel_labels.iter().enumerate() {
        let p = tr.channel_peak(c)?;
        out.push_str(&format!("{label},{},{},{},\n", p.rate_max, p.t_peak, p.at_origin as u8));
    }
    let p = tr.total_peak()?;
    let se = std_err_peak.map(|s| format!("{s}")).unwrap_or_default();
    out.push_str(&format!("total,{},{},{},{se}\n", p.rate_max, p.t_peak, p.at_origin as u8));
    Ok(out)
}

/// Ensemble mean trajectory with the standard error of the total rate.
pub fn mean_csv(tr: &Trajectory, total_rate_std_err: &[f64]) -> String {
    let base = csv_string(tr);
    let mut out = String::new();
    for (i, line) in base.lines().enumerate() {
        out.push_str(line);
        if i == 0 {
            out.push_str(",gamma_total_std_err");
        } else {
            out.push_str(&format!(",{}", total_rate_std_err[i - 1]));
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
pub struct EigenRow {
    pub n_atoms: usize,
    pub density: f64,
    pub mean_max_rate: f64,
    pub std_err: f64,
    pub runs: usize,
}

pub fn eigen_csv(rows: &[EigenRow]) -> String {
    let mut out = String::from("n_atoms,density,mean_max_rate,std_err,runs\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n_atoms, r.density, r.mean_max_rate, r.std_err, r.runs
        ));
    }
    out
}

/// One completed sweep point. Rates are per atom so different N are
/// comparable on the same axis.
#[derive(Clone, Debug, Serialize, serde::Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub axis_value: f64,
    pub n_atoms: usize,
    pub density: f64,
    pub runs: usize,
    pub status: String,
    pub error: String,
    /// Per-channel (label, peak rate per atom, peak time); the total last.
    pub peaks: Vec<(String, f64, f64)>,
    pub horizon: f64,
}

impl SweepPoint {
    pub fn total_peak_per_atom(&self) -> Option<f64> {
        self.peaks.last().map(|p| p.1)
    }
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let labels: Vec<String> = points
        .iter()
        .find(|p| p.status == "ok")
        .map(|p| p.peaks.iter().map(|(l, _, _)| l.clone()).collect())
        .unwrap_or_default();
    let mut out = String::from("index,axis_value,n_atoms,density,runs,horizon,status");
    for l in &labels {
        out.push_str(&format!(",rate_max_{l},t_peak_{l}"));
    }
    out.push_str(",error\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}",
            p.index, p.axis_value, p.n_atoms, p.density, p.runs, p.horizon, p.status
        ));
        for i in 0..labels.len() {
            match p.peaks.get(i) {
                Some((_, r, t)) if p.status == "ok" => out.push_str(&format!(",{r},{t}")),
                _ => out.push_str(",,"),
            }
        }
        out.push_str(&format!(",{}\n", p.error.replace(',', ";").replace('\n', " ")));
    }
    out
}

#[derive(Serialize)]
pub struct SweepSummary {
    pub axis: String,
    pub argmax_axis_value: Option<f64>,
    pub max_rate_per_atom: Option<f64>,
    pub completed: usize,
    pub failed: usize,
}

pub fn summarize_sweep(axis: &str, points: &[SweepPoint]) -> SweepSummary {
    let mut best: Option<(f64, f64)> = None;
    let mut completed = 0;
    let mut failed = 0;
    for p in points {
        if p.status == "ok" {
            completed += 1;
            if let Some(r) = p.total_peak_per_atom() {
                if best.map(|(_, b)| r > b).unwrap_or(true) {
                    best = Some((p.axis_value, r));
                }
            }
        } else {
            failed += 1;
        }
    }
    SweepSummary {
        axis: axis.into(),
        argmax_axis_value: best.map(|(a, _)| a),
        max_rate_per_atom: best.map(|(_, r)| r),
        completed,
        failed,
    }
}
