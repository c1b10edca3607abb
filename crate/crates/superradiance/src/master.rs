//! Numerically exact master-equation evolution in the truncated pair basis.
//!
//! The generator has three parts per decay channel: independent single-atom
//! decay, coherent drift (one side of the density matrix trades an excitation
//! between two atoms, weighted by the complex pair coupling g), and
//! correlated jumps (both sides lose an excitation, weighted by the
//! dissipative coupling). All three preserve the class structure of
//! [`crate::basis::LiouvilleBasis`].
//!
//! The state starts fully inverted; that is the one initial condition whose
//! reachable set the truncated basis spans, so no other initial state is
//! accepted.

use crate::basis::LiouvilleBasis;
use crate::couplings::CouplingSet;
use crate::ode::{integrate, OdeOptions, StepStats};
use crate::trajectory::Trajectory;
use crate::{C64, Error, Result};
use ndarray::Array2;

struct ChannelData {
    label: String,
    gamma: f64,
    /// Flat n×n complex drift couplings, zero diagonal.
    g: Vec<C64>,
    /// Flat n×n jump weights: γ on the diagonal, dissipative coupling off it.
    k: Vec<f64>,
    /// False when every pair coupling vanishes (zero-wavelength channel).
    coupled: bool,
}

pub struct ExactSolver {
    basis: LiouvilleBasis,
    channels: Vec<ChannelData>,
    gamma_tot: f64,
}

/// Invariant thresholds checked after every accepted step.
#[derive(Clone, Copy, Debug)]
pub struct MonitorOptions {
    pub trace_tol: f64,
    pub hermiticity_tol: f64,
}

impl Default for MonitorOptions {
    fn default() -> Self {
        MonitorOptions { trace_tol: 1e-8, hermiticity_tol: 1e-10 }
    }
}

impl ExactSolver {
    /// Build the solver for one cloud's coupling set. Fails with a capacity
    /// error when the truncated basis would not fit; that is the signal to
    /// use the correlation solver instead.
    pub fn new(couplings: &CouplingSet) -> Result<Self> {
        let n = couplings.n_atoms;
        let basis = LiouvilleBasis::build(n, couplings.channels.len())?;
        let channels = couplings
            .channels
            .iter()
            .map(|ch| {
                let mut g = vec![C64::new(0.0, 0.0); n * n];
                let mut k = vec![0.0; n * n];
                let mut coupled = false;
                for i in 0..n {
                    k[i * n + i] = ch.gamma;
                    for j in 0..n {
                        if i != j {
                            let gij = ch.g[[i, j]];
                            g[i * n + j] = gij;
                            k[i * n + j] = 2.0 * gij.re;
                            if gij != C64::new(0.0, 0.0) {
                                coupled = true;
                            }
                        }
                    }
                }
                ChannelData { label: ch.label.clone(), gamma: ch.gamma, g, k, coupled }
            })
            .collect();
        Ok(ExactSolver { basis, channels, gamma_tot: couplings.total_gamma() })
    }

    pub fn basis(&self) -> &LiouvilleBasis {
        &self.basis
    }

    /// Fully inverted density matrix: coefficient 1 on |all excited⟩⟨all
    /// excited|.
    pub fn initial_inverted(&self) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.basis.pair_count()];
        y[self.basis.inverted_pair_index()] = C64::new(1.0, 0.0);
        y
    }

    /// Apply the generator: dy = L[y].
    ///
    /// Sources are walked over the upper triangle of each class block and
    /// every write is paired with its conjugate mirror, which keeps dy
    /// exactly Hermitian (in floating point, not just analytically) whenever
    /// y is. Coefficients that are exactly zero are skipped; early in the
    /// decay most of the state is still unpopulated and this saves most of
    /// the work.
    pub fn rhs(&self, y: &[C64], dy: &mut [C64]) {
        debug_assert_eq!(y.len(), self.basis.pair_count());
        let b = &self.basis;
        let n = b.n_atoms();
        let zero = C64::new(0.0, 0.0);
        for v in dy.iter_mut() {
            *v = zero;
        }
        for c in 0..b.class_count() as u32 {
            let members = b.class_states(c);
            let s = members.len();
            let o = b.class_block_offset(c);
            for pi in 0..s {
                let m = members[pi] as usize;
                let em = b.excited_atoms(m).len();
                for pj in pi..s {
                    let z = y[o + pi * s + pj];
                    if z == zero {
                        continue;
                    }
                    let nst = members[pj] as usize;
                    let diag = pi == pj;
                    let en = b.excited_atoms(nst).len();
                    let dec = 0.5 * self.gamma_tot * (em + en) as f64;
                    dy[o + pi * s + pj] -= dec * z;
                    if !diag {
                        dy[o + pj * s + pi] -= dec * z.conj();
                    }
                    for (ch, cd) in self.channels.iter().enumerate() {
                        if cd.coupled {
                            // Drift on the left state: excitation hops
                            // between atoms of m.
                            for hop in b.drift_hops(ch, m) {
                                let gij = cd.g[hop.i as usize * n + hop.j as usize];
                                let w = gij * z;
                                let tp = hop.target_pos as usize;
                                dy[o + tp * s + pj] -= w;
                                if !diag {
                                    dy[o + pj * s + tp] -= w.conj();
                                }
                            }
                            // Drift on the right state.
                            for hop in b.drift_hops(ch, nst) {
                                let gij = cd.g[hop.i as usize * n + hop.j as usize];
                                let w = gij.conj() * z;
                                let tp = hop.target_pos as usize;
                                dy[o + pi * s + tp] -= w;
                                if !diag {
                                    dy[o + tp * s + pi] -= w.conj();
                                }
                            }
                        }
                        // Correlated jump into the class one step down.
                        let Some(tc) = b.jump_target_class(c, ch) else { continue };
                        let o2 = b.class_block_offset(tc);
                        let s2 = b.class_size(tc);
                        if cd.coupled {
                            for hm in b.jump_hops(ch, m) {
                                let row = o2 + hm.target_pos as usize * s2;
                                let col_j = hm.j as usize;
                                for hn in b.jump_hops(ch, nst) {
                                    let kij = cd.k[hn.j as usize * n + col_j];
                                    let w = kij * z;
                                    let tq = hn.target_pos as usize;
                                    dy[row + tq] += w;
                                    if !diag {
                                        dy[o2 + tq * s2 + hm.target_pos as usize] += w.conj();
                                    }
                                }
                            }
                        } else {
                            // Uncoupled channel: only both-sides-same-atom
                            // jumps survive. Both hop lists are ascending in
                            // atom index, so a merge scan finds the matches.
                            let hm = b.jump_hops(ch, m);
                            let hn = b.jump_hops(ch, nst);
                            let (mut a, mut q) = (0, 0);
                            while a < hm.len() && q < hn.len() {
                                match hm[a].j.cmp(&hn[q].j) {
                                    std::cmp::Ordering::Less => a += 1,
                                    std::cmp::Ordering::Greater => q += 1,
                                    std::cmp::Ordering::Equal => {
                                        let w = cd.gamma * z;
                                        let tp = hm[a].target_pos as usize;
                                        let tq = hn[q].target_pos as usize;
                                        dy[o2 + tp * s2 + tq] += w;
                                        if !diag {
                                            dy[o2 + tq * s2 + tp] += w.conj();
                                        }
                                        a += 1;
                                        q += 1;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    /// Trace of the density matrix (sum of diagonal coefficients).
    pub fn trace(&self, y: &[C64]) -> C64 {
        let b = &self.basis;
        let mut tr = C64::new(0.0, 0.0);
        for c in 0..b.class_count() as u32 {
            let s = b.class_size(c);
            let o = b.class_block_offset(c);
            for p in 0..s {
                tr += y[o + p * s + p];
            }
        }
        tr
    }

    /// Largest deviation from Hermiticity across all class blocks.
    pub fn hermiticity_defect(&self, y: &[C64]) -> f64 {
        let b = &self.basis;
        let mut worst = 0.0f64;
        for c in 0..b.class_count() as u32 {
            let s = b.class_size(c);
            let o = b.class_block_offset(c);
            for pi in 0..s {
                for pj in pi..s {
                    let d = (y[o + pi * s + pj] - y[o + pj * s + pi].conj()).norm();
                    worst = worst.max(d);
                }
            }
        }
        worst
    }

    /// Excited population and per-channel lower-level populations.
    pub fn populations(&self, y: &[C64]) -> (f64, Vec<f64>) {
        let b = &self.basis;
        let mut n_e = 0.0;
        let mut pops = vec![0.0; self.channels.len()];
        for c in 0..b.class_count() as u32 {
            let s = b.class_size(c);
            let o = b.class_block_offset(c);
            let mut tr = 0.0;
            for p in 0..s {
                tr += y[o + p * s + p].re;
            }
            let occ = b.class_counts(c);
            n_e += occ[0] as f64 * tr;
            for ch in 0..self.channels.len() {
                pops[ch] += occ[ch + 1] as f64 * tr;
            }
        }
        (n_e, pops)
    }

    /// Per-channel photon emission rates from an already evaluated
    /// derivative vector: γ_ch = d/dt (channel population).
    pub fn emission_rates(&self, dy: &[C64]) -> Vec<f64> {
        let (_, rates) = self.populations(dy);
        rates
    }

    /// Pair-correlation matrix ⟨(lower n)(raise m)⟩ for one channel,
    /// reduced from any coefficient vector (state or derivative).
    pub fn pair_correlations(&self, coeffs: &[C64], ch: usize) -> Array2<C64> {
        let b = &self.basis;
        let n = b.n_atoms();
        let mut out = Array2::<C64>::zeros((n, n));
        for c in 0..b.class_count() as u32 {
            let members = b.class_states(c);
            let s = members.len();
            let o = b.class_block_offset(c);
            for (pu, &u) in members.iter().enumerate() {
                let u = u as usize;
                let zdiag = coeffs[o + pu * s + pu];
                for &i in b.atoms_in_channel_level(u, ch) {
                    out[[i as usize, i as usize]] += zdiag;
                }
                for hop in b.drift_hops(ch, u) {
                    // Hop (i, j) lowers j and raises i, which is exactly the
                    // operator pair whose expectation lands at [j][i].
                    out[[hop.j as usize, hop.i as usize]] +=
                        coeffs[o + pu * s + hop.target_pos as usize];
                }
            }
        }
        out
    }

    /// Channel labels in declaration order.
    pub fn labels(&self) -> Vec<String> {
        self.channels.iter().map(|c| c.label.clone()).collect()
    }

    /// Evolve the fully inverted state and sample population and rate
    /// observables on `sample_times` (ascending, starting at 0). Rates are
    /// evaluated by applying the generator to the interpolated state, never
    /// by differencing samples.
    pub fn evolve(
        &self,
        sample_times: &[f64],
        opts: &OdeOptions,
        monitors: &MonitorOptions,
    ) -> Result<(Trajectory, StepStats)> {
        let Some(&t_end) = sample_times.last() else {
            return Err(Error::InvalidArgument("sample grid must be non-empty".into()));
        };
        let y0 = self.initial_inverted();
        let mut tr =
            Trajectory::zeros(sample_times.to_vec(), self.labels(), self.basis.n_atoms());
        let mut scratch = vec![C64::new(0.0, 0.0); y0.len()];
        let trace_tol = monitors.trace_tol;
        let herm_tol = monitors.hermiticity_tol;
        let (_, stats) = integrate(
            |_t, y: &[C64], dy: &mut [C64]| self.rhs(y, dy),
            0.0,
            &y0,
            t_end,
            sample_times,
            opts,
            |s, _t, ys| {
                self.rhs(ys, &mut scratch);
                let (n_e, pops) = self.populations(ys);
                let rates = self.emission_rates(&scratch);
                tr.set_sample(s, n_e, &pops, &rates);
                Ok(())
            },
            |t, y| {
                let trace = self.trace(y);
                if (trace.re - 1.0).abs() > trace_tol || trace.im.abs() > trace_tol {
                    return Err(Error::Accuracy(format!(
                        "trace drifted to {trace} at t = {t:.6e}"
                    )));
                }
                let defect = self.hermiticity_defect(y);
                if defect > herm_tol {
                    return Err(Error::Accuracy(format!(
                        "hermiticity defect {defect:.3e} at t = {t:.6e}"
                    )));
                }
                Ok(())
            },
        )?;
        Ok((tr, stats))
    }
}
