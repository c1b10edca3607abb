//! Sampled observable curves shared by every solver, plus peak extraction.

use crate::{Error, Result};
use std::io::Write;

/// Time series of the populations and emission rates of one run (or an
/// ensemble mean). Populations are atom counts, rates are photons per unit
/// time; `total_rate` is the sum over channels.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub channel_labels: Vec<String>,
    pub n_atoms: usize,
    /// Shared-excited-state population N_e per sample.
    pub excited: Vec<f64>,
    /// Per-channel lower-level populations, indexed [channel][sample].
    pub populations: Vec<Vec<f64>>,
    /// Per-channel photon emission rates, indexed [channel][sample].
    pub rates: Vec<Vec<f64>>,
    pub total_rate: Vec<f64>,
}

/// Location and height of an emission-rate maximum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakStats {
    pub rate_max: f64,
    pub t_peak: f64,
    /// The series is monotone decreasing, so the "peak" sits at the first
    /// sample and t_peak is the grid origin.
    pub at_origin: bool,
}

impl Trajectory {
    /// Zero-filled trajectory over a fixed sample grid.
    pub fn zeros(times: Vec<f64>, channel_labels: Vec<String>, n_atoms: usize) -> Self {
        let n = times.len();
        let n_ch = channel_labels.len();
        Trajectory {
            times,
            channel_labels,
            n_atoms,
            excited: vec![0.0; n],
            populations: vec![vec![0.0; n]; n_ch],
            rates: vec![vec![0.0; n]; n_ch],
            total_rate: vec![0.0; n],
        }
    }

    /// Fill one sample slot; `pops` and `rates` are per channel.
    pub fn set_sample(&mut self, s: usize, excited: f64, pops: &[f64], rates: &[f64]) {
        self.excited[s] = excited;
        let mut total = 0.0;
        for ch in 0..self.channel_labels.len() {
            self.populations[ch][s] = pops[ch];
            self.rates[ch][s] = rates[ch];
            total += rates[ch];
        }
        self.total_rate[s] = total;
    }

    pub fn channel_index(&self, label: &str) -> Option<usize> {
        self.channel_labels.iter().position(|l| l == label)
    }

    /// Peak of one channel's emission rate.
    pub fn channel_peak(&self, channel: usize) -> Result<PeakStats> {
        peak_stats(&self.times, &self.rates[channel])
    }

    /// Peak of the summed emission rate.
    pub fn total_peak(&self) -> Result<PeakStats> {
        peak_stats(&self.times, &self.total_rate)
    }

    /// Accumulate another trajectory on the identical grid (for ensemble
    /// means). Grids must match exactly; ensemble members are integrated on
    /// a common grid precisely so this holds.
    pub fn accumulate(&mut self, other: &Trajectory) -> Result<()> {
        if self.times != other.times
            || self.channel_labels != other.channel_labels
            || self.n_atoms != other.n_atoms
        {
            return Err(Error::InvalidArgument(
                "cannot accumulate trajectories on different grids".into(),
            ));
        }
        for (a, b) in self.excited.iter_mut().zip(&other.excited) {
            *a += b;
        }
        for ch in 0..self.channel_labels.len() {
            for (a, b) in self.populations[ch].iter_mut().zip(&other.populations[ch]) {
                *a += b;
            }
            for (a, b) in self.rates[ch].iter_mut().zip(&other.rates[ch]) {
                *a += b;
            }
        }
        for (a, b) in self.total_rate.iter_mut().zip(&other.total_rate) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&mut self, w: f64) {
        for v in self.excited.iter_mut() {
            *v *= w;
        }
        for ch in 0..self.channel_labels.len() {
            for v in self.populations[ch].iter_mut() {
                *v *= w;
            }
            for v in self.rates[ch].iter_mut() {
                *v *= w;
            }
        }
        for v in self.total_rate.iter_mut() {
            *v *= w;
        }
    }

    /// Write the schema `t, n_e, n_<label>..., gamma_<label>..., gamma_total`
    /// with shortest round-trip float formatting (deterministic bytes for
    /// identical data).
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = String::from("t,n_e");
        for l in &self.channel_labels {
            header.push_str(&format!(",n_{l}"));
        }
        for l in &self.channel_labels {
            header.push_str(&format!(",gamma_{l}"));
        }
        header.push_str(",gamma_total\n");
        out.write_all(header.as_bytes())?;
        for s in 0..self.times.len() {
            let mut line = format!("{},{}", self.times[s], self.excited[s]);
            for ch in 0..self.channel_labels.len() {
                line.push_str(&format!(",{}", self.populations[ch][s]));
            }
            for ch in 0..self.channel_labels.len() {
                line.push_str(&format!(",{}", self.rates[ch][s]));
            }
            line.push_str(&format!(",{}\n", self.total_rate[s]));
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

/// Peak of a sampled series by quadratic interpolation through the three
/// samples bracketing the discrete maximum.
///
/// A series whose maximum sits on the first sample and immediately decreases
/// is reported as `at_origin` (delay time zero). A maximum on the last
/// sample means the grid does not cover the peak and is an error; drivers
/// extend their horizon rather than guessing.
pub fn peak_stats(times: &[f64], series: &[f64]) -> Result<PeakStats> {
    if times.len() != series.len() || times.len() < 2 {
        return Err(Error::InvalidArgument(
            "peak extraction needs at least two samples on a matching grid".into(),
        ));
    }
    let mut s_max = 0;
    for (s, v) in series.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::Accuracy(format!("non-finite rate sample at index {s}")));
        }
        if *v > series[s_max] {
            s_max = s;
        }
    }
    if s_max == 0 {
        return Ok(PeakStats { rate_max: series[0], t_peak: times[0], at_origin: true });
    }
    if s_max == times.len() - 1 {
        return Err(Error::Accuracy(format!(
            "rate still rising at the final sample (t = {:.6e}); horizon too short",
            times[s_max]
        )));
    }
    let (x1, x2, x3) = (times[s_max - 1], times[s_max], times[s_max + 1]);
    let (y1, y2, y3) = (series[s_max - 1], series[s_max], series[s_max + 1]);
    let d1 = y1 / ((x1 - x2) * (x1 - x3));
    let d2 = y2 / ((x2 - x1) * (x2 - x3));
    let d3 = y3 / ((x3 - x1) * (x3 - x2));
    let a = d1 + d2 + d3;
    if a >= 0.0 {
        // Degenerate (flat or upward-curved) triple; the discrete maximum is
        // the best available answer.
        return Ok(PeakStats { rate_max: y2, t_peak: x2, at_origin: false });
    }
    let b = d1 * (x2 + x3) + d2 * (x1 + x3) + d3 * (x1 + x2);
    let xv = (b / (2.0 * a)).clamp(x1, x3);
    let yv = d1 * (xv - x2) * (xv - x3) + d2 * (xv - x1) * (xv - x3) + d3 * (xv - x1) * (xv - x2);
    Ok(PeakStats { rate_max: yv, t_peak: xv, at_origin: false })
}
