//! Second-order correlation dynamics with a cumulant closure.
//!
//! The state is one complex N×N matrix per decay channel: diagonal entries
//! are level populations per atom, off-diagonal entries are the pair
//! coherences that drive collective emission. Quartic expectation values are
//! factorized into products of pair functions, always splitting off a
//! lower-level population factor; those factors vanish on the fully inverted
//! state, so the closure is accurate until an appreciable fraction of the
//! population has decayed through an interacting channel.
//!
//! The per-site j-sums for all atoms are a single matrix product per
//! channel, so one right-hand side costs one gemm per coupled channel plus
//! O(N²) elementwise work instead of the naive O(N³) triple loop.

use crate::couplings::CouplingSet;
use crate::ode::{integrate, OdeOptions, StepStats};
use crate::trajectory::Trajectory;
use crate::{C64, Error, Result};
use faer::{Accum, MatMut, MatRef, Par};
use ndarray::Array2;

pub struct CorrelationSolver {
    n: usize,
    labels: Vec<String>,
    gammas: Vec<f64>,
    gamma_tot: f64,
    /// Flat n×n complex pair couplings per channel, zero diagonal.
    g: Vec<Vec<C64>>,
    coupled: Vec<bool>,
}

/// Scratch buffers reused across right-hand-side evaluations.
pub struct Workspace {
    /// Per channel: G·C, flat n×n.
    a3: Vec<Vec<C64>>,
    /// Per site: Σ over channels of (G·C) diagonal.
    s_tot: Vec<C64>,
    /// Per site: excited-state probability.
    p_e: Vec<f64>,
    /// Upper triangle: Σ over channels of 2Re(g_nm)·C[m][n].
    w: Vec<C64>,
}

/// Invariant threshold checked after every accepted step.
#[derive(Clone, Copy, Debug)]
pub struct CorrelationMonitor {
    pub hermiticity_tol: f64,
}

impl Default for CorrelationMonitor {
    fn default() -> Self {
        CorrelationMonitor { hermiticity_tol: 1e-10 }
    }
}

impl CorrelationSolver {
    pub fn new(set: &CouplingSet) -> Result<Self> {
        let n = set.n_atoms;
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one atom".into()));
        }
        let mut g = Vec::new();
        let mut coupled = Vec::new();
        for ch in &set.channels {
            let mut flat = vec![C64::new(0.0, 0.0); n * n];
            let mut any = false;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        flat[i * n + j] = ch.g[[i, j]];
                        if flat[i * n + j] != C64::new(0.0, 0.0) {
                            any = true;
                        }
                    }
                }
            }
            g.push(flat);
            coupled.push(any);
        }
        Ok(CorrelationSolver {
            n,
            labels: set.channels.iter().map(|c| c.label.clone()).collect(),
            gammas: set.channels.iter().map(|c| c.gamma).collect(),
            gamma_tot: set.total_gamma(),
            g,
            coupled,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.n
    }

    pub fn n_channels(&self) -> usize {
        self.gammas.len()
    }

    pub fn labels(&self) -> Vec<String> {
        self.labels.clone()
    }

    pub fn state_len(&self) -> usize {
        self.n * self.n * self.gammas.len()
    }

    /// Fully inverted initial state: every correlation matrix is zero.
    pub fn initial_inverted(&self) -> Vec<C64> {
        vec![C64::new(0.0, 0.0); self.state_len()]
    }

    pub fn workspace(&self) -> Workspace {
        let n = self.n;
        Workspace {
            a3: vec![vec![C64::new(0.0, 0.0); n * n]; self.gammas.len()],
            s_tot: vec![C64::new(0.0, 0.0); n],
            p_e: vec![0.0; n],
            w: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    /// Apply the closed equations of motion: dy = F[y].
    ///
    /// Off-diagonal entries are computed for n < m only and mirrored by
    /// conjugation; diagonals are written with zero imaginary part. Both
    /// together keep the state exactly Hermitian in floating point.
    pub fn rhs(&self, y: &[C64], dy: &mut [C64], ws: &mut Workspace) {
        let n = self.n;
        let nn = n * n;
        let n_ch = self.gammas.len();
        debug_assert_eq!(y.len(), nn * n_ch);

        for i in 0..n {
            ws.p_e[i] = 1.0;
        }
        for ch in 0..n_ch {
            let o = ch * nn;
            for i in 0..n {
                ws.p_e[i] -= y[o + i * n + i].re;
            }
        }

        for ch in 0..n_ch {
            if self.coupled[ch] {
                let lhs = MatRef::from_row_major_slice(&self.g[ch], n, n);
                let rhs_m = MatRef::from_row_major_slice(&y[ch * nn..(ch + 1) * nn], n, n);
                let dst = MatMut::from_row_major_slice_mut(&mut ws.a3[ch], n, n);
                faer::linalg::matmul::matmul(
                    dst,
                    Accum::Replace,
                    lhs,
                    rhs_m,
                    C64::new(1.0, 0.0),
                    Par::Seq,
                );
            } else {
                for v in ws.a3[ch].iter_mut() {
                    *v = C64::new(0.0, 0.0);
                }
            }
        }

        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for ch in 0..n_ch {
                acc += ws.a3[ch][i * n + i];
            }
            ws.s_tot[i] = acc;
        }

        for pn in 0..n {
            for pm in pn + 1..n {
                let mut acc = C64::new(0.0, 0.0);
                for ch in 0..n_ch {
                    acc += 2.0 * self.g[ch][pn * n + pm].re * y[ch * nn + pm * n + pn];
                }
                ws.w[pn * n + pm] = acc;
            }
        }

        for ch in 0..n_ch {
            let o = ch * nn;
            let gam = self.gammas[ch];
            let gch = &self.g[ch];
            let a3 = &ws.a3[ch];
            for i in 0..n {
                dy[o + i * n + i] =
                    C64::new(gam * ws.p_e[i] + 2.0 * a3[i * n + i].re, 0.0);
            }
            for pn in 0..n {
                let pa_n = y[o + pn * n + pn].re;
                let pe_n = ws.p_e[pn];
                let d_n = pe_n - pa_n;
                let s_n = a3[pn * n + pn];
                for pm in pn + 1..n {
                    let gnm = gch[pn * n + pm];
                    let c_nm = y[o + pn * n + pm];
                    let c_mn = y[o + pm * n + pn];
                    let pa_m = y[o + pm * n + pm].re;
                    let pe_m = ws.p_e[pm];
                    let d_m = pe_m - pa_m;
                    let s_m = a3[pm * n + pm];
                    // Sinks from the other channels' hopping, with the
                    // j = m, n exclusions restored.
                    let cross = (ws.s_tot[pn] - s_n) + (ws.s_tot[pm] - s_m).conj()
                        - (ws.w[pn * n + pm] - 2.0 * gnm.re * c_mn);
                    let mut v = -self.gamma_tot * c_nm;
                    v += (a3[pm * n + pn].conj() - gnm.conj() * pa_n) * d_m;
                    v += (a3[pn * n + pm] - gnm * pa_m) * d_n;
                    v -= c_nm * cross;
                    v += 2.0 * gnm.re * (pe_n * pe_m);
                    v -= gnm * (pa_n * pe_m);
                    v -= gnm.conj() * (pa_m * pe_n);
                    dy[o + pn * n + pm] = v;
                    dy[o + pm * n + pn] = v.conj();
                }
            }
        }
    }

    /// Largest deviation from Hermiticity across channel matrices.
    pub fn hermiticity_defect(&self, y: &[C64]) -> f64 {
        let n = self.n;
        let nn = n * n;
        let mut worst = 0.0f64;
        for ch in 0..self.gammas.len() {
            let o = ch * nn;
            for pn in 0..n {
                worst = worst.max(y[o + pn * n + pn].im.abs());
                for pm in pn + 1..n {
                    worst = worst
                        .max((y[o + pn * n + pm] - y[o + pm * n + pn].conj()).norm());
                }
            }
        }
        worst
    }

    /// Per-channel photon emission rates evaluated directly from the state.
    pub fn emission_rates(&self, y: &[C64]) -> Vec<f64> {
        let n = self.n;
        let nn = n * n;
        let (n_e, _) = self.populations(y);
        let mut rates = Vec::with_capacity(self.gammas.len());
        for ch in 0..self.gammas.len() {
            let o = ch * nn;
            let mut acc = 0.0;
            if self.coupled[ch] {
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            acc += (self.g[ch][i * n + j] * y[o + j * n + i]).re;
                        }
                    }
                }
            }
            rates.push(self.gammas[ch] * n_e + 2.0 * acc);
        }
        rates
    }

    /// Excited population and per-channel lower-level populations.
    pub fn populations(&self, y: &[C64]) -> (f64, Vec<f64>) {
        let n = self.n;
        let nn = n * n;
        let mut pops = Vec::with_capacity(self.gammas.len());
        let mut total = 0.0;
        for ch in 0..self.gammas.len() {
            let o = ch * nn;
            let mut p = 0.0;
            for i in 0..n {
                p += y[o + i * n + i].re;
            }
            pops.push(p);
            total += p;
        }
        (n as f64 - total, pops)
    }

    /// One channel's correlation matrix, same orientation as the exact
    /// solver's reduction: entry [n][m] is ⟨(lower n)(raise m)⟩.
    pub fn correlation_matrix(&self, y: &[C64], ch: usize) -> Array2<C64> {
        let n = self.n;
        let o = ch * n * n;
        Array2::from_shape_fn((n, n), |(i, j)| y[o + i * n + j])
    }

    /// Evolve the fully inverted state and sample population and rate
    /// observables on `sample_times` (ascending, starting at 0).
    pub fn evolve(
        &self,
        sample_times: &[f64],
        opts: &OdeOptions,
        monitor: &CorrelationMonitor,
    ) -> Result<(Trajectory, StepStats)> {
        let Some(&t_end) = sample_times.last() else {
            return Err(Error::InvalidArgument("sample grid must be non-empty".into()));
        };
        let y0 = self.initial_inverted();
        let mut ws = self.workspace();
        let mut tr = Trajectory::zeros(sample_times.to_vec(), self.labels(), self.n);
        let herm_tol = monitor.hermiticity_tol;
        let (_, stats) = integrate(
            |_t, y: &[C64], dy: &mut [C64]| self.rhs(y, dy, &mut ws),
            0.0,
            &y0,
            t_end,
            sample_times,
            opts,
            |s, _t, ys| {
                let (n_e, pops) = self.populations(ys);
                let rates = self.emission_rates(ys);
                tr.set_sample(s, n_e, &pops, &rates);
                Ok(())
            },
            |t, y| {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::Cloud;
    use crate::couplings::{build_coupling_set, CouplingMode, TransitionSpec};
    use crate::master::{ExactSolver, MonitorOptions};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn tr_spec(label: &str, gamma: f64, lambda: f64, dipole: [f64; 3]) -> TransitionSpec {
        TransitionSpec { label: label.into(), gamma, lambda, dipole }
    }

    fn cloud_at(positions: Vec<[f64; 3]>) -> Cloud {
        Cloud { positions, sigma: 1.0, seed: 0 }
    }

    // Literal transcription of the closed equations with explicit j-sums,
    // no matrix products, no mirroring: every entry computed independently.
    fn naive_rhs(set: &CouplingSet, y: &[C64]) -> Vec<C64> {
        let n = set.n_atoms;
        let nn = n * n;
        let n_ch = set.channels.len();
        let zero = C64::new(0.0, 0.0);
        let gamma_tot: f64 = set.channels.iter().map(|c| c.gamma).sum();
        let g = |al: usize, i: usize, j: usize| -> C64 {
            if i == j {
                zero
            } else {
                set.channels[al].g[[i, j]]
            }
        };
        let c = |al: usize, i: usize, j: usize| y[al * nn + i * n + j];
        let pa = |al: usize, i: usize| c(al, i, i).re;
        let psum = |i: usize| (0..n_ch).map(|b| pa(b, i)).sum::<f64>();
        let mut dy = vec![zero; y.len()];
        for al in 0..n_ch {
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    if j != i {
                        acc += (g(al, i, j) * c(al, j, i)).re;
                    }
                }
                dy[al * nn + i * n + i] = C64::new(
                    set.channels[al].gamma * (1.0 - psum(i)) + 2.0 * acc,
                    0.0,
                );
            }
            for nq in 0..n {
                for m in 0..n {
                    if m == nq {
                        continue;
                    }
                    let mut v = -gamma_tot * c(al, nq, m);
                    for j in 0..n {
                        if j == m || j == nq {
                            continue;
                        }
                        v += g(al, j, m).conj()
                            * c(al, nq, j)
                            * (1.0 - pa(al, m) - psum(m));
                        v += g(al, nq, j) * c(al, j, m) * (1.0 - pa(al, nq) - psum(nq));
                        for b in 0..n_ch {
                            if b != al {
                                v -= g(b, nq, j) * c(al, nq, m) * c(b, j, nq);
                                v -= g(b, j, m).conj() * c(al, nq, m) * c(b, m, j);
                            }
                        }
                    }
                    let pe_n = 1.0 - psum(nq);
                    let pe_m = 1.0 - psum(m);
                    v += 2.0 * g(al, nq, m).re * pe_n * pe_m;
                    v -= g(al, nq, m) * pa(al, nq) * pe_m;
                    v -= g(al, nq, m).conj() * pa(al, m) * pe_n;
                    dy[al * nn + nq * n + m] = v;
                }
            }
        }
        dy
    }

    fn random_hermitian_state(solver: &CorrelationSolver, seed: u64) -> Vec<C64> {
        let n = solver.n_atoms();
        let nn = n * n;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let mut y = solver.initial_inverted();
        for ch in 0..solver.n_channels() {
            let o = ch * nn;
            for i in 0..n {
                y[o + i * n + i] = C64::new(0.25 * rng.random::<f64>(), 0.0);
                for j in i + 1..n {
                    let v = C64::new(
                        0.2 * (rng.random::<f64>() - 0.5),
                        0.2 * (rng.random::<f64>() - 0.5),
                    );
                    y[o + i * n + j] = v;
                    y[o + j * n + i] = v.conj();
                }
            }
        }
        y
    }

    #[test]
    fn kernel_matches_literal_sum_transcription() {
        let set = build_coupling_set(
            &cloud_at(vec![
                [0.0, 0.0, 0.0],
                [0.3, 0.1, -0.2],
                [-0.25, 0.3, 0.15],
                [0.1, -0.4, 0.3],
                [0.5, 0.2, 0.1],
            ]),
            &[
                tr_spec("a", 1.0, 1.0, [1.0, 0.0, 0.0]),
                tr_spec("b", 0.6, 0.37, [0.0, 1.0, 0.5]),
                tr_spec("q", 0.9, 0.0, [1.0, 0.0, 0.0]),
            ],
            CouplingMode::Full,
            None,
        )
        .unwrap();
        let solver = CorrelationSolver::new(&set).unwrap();
        for seed in [1u64, 7, 42] {
            let y = random_hermitian_state(&solver, seed);
            let mut dy = vec![C64::new(0.0, 0.0); y.len()];
            let mut ws = solver.workspace();
            solver.rhs(&y, &mut dy, &mut ws);
            let reference = naive_rhs(&set, &y);
            let scale = reference.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
            for (a, b) in dy.iter().zip(&reference) {
                assert!(
                    (a - b).norm() <= 1e-12 * scale.max(1.0),
                    "kernel {a} vs reference {b}"
                );
            }
        }
    }

    #[test]
    fn inverted_state_rate_matrix_is_the_coupling_matrix() {
        let set = build_coupling_set(
            &cloud_at(vec![[0.0, 0.0, 0.0], [0.31, 0.0, 0.0], [-0.1, 0.22, 0.15]]),
            &[
                tr_spec("a", 1.0, 1.0, [1.0, 0.0, 0.0]),
                tr_spec("b", 0.5, 0.4, [1.0, 0.0, 0.0]),
            ],
            CouplingMode::Full,
            None,
        )
        .unwrap();
        let solver = CorrelationSolver::new(&set).unwrap();
        let y0 = solver.initial_inverted();
        let mut dy = vec![C64::new(0.0, 0.0); y0.len()];
        let mut ws = solver.workspace();
        solver.rhs(&y0, &mut dy, &mut ws);
        let n = 3;
        for (ch, spec) in set.channels.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j {
                        C64::new(spec.gamma, 0.0)
                    } else {
                        C64::new(2.0 * spec.g[[i, j]].re, 0.0)
                    };
                    let got = dy[ch * n * n + i * n + j];
                    assert!(
                        (got - expect).norm() <= 1e-15 * expect.norm().max(1.0),
                        "channel {ch} entry ({i},{j}): {got} vs {expect}"
                    );
                }
            }
        }
        // Initial emission rates are the bare single-atom totals.
        let rates = solver.emission_rates(&y0);
        assert_relative_eq!(rates[0], 3.0, epsilon = 1e-14);
        assert_relative_eq!(rates[1], 1.5, epsilon = 1e-14);
    }

    #[test]
    fn uncoupled_channels_relax_analytically() {
        // Two zero-wavelength channels: every atom decays independently and
        // the level populations follow the branching-ratio exponential.
        let ga = 1.0;
        let gb = 0.4;
        let gt = ga + gb;
        let set = build_coupling_set(
            &cloud_at(vec![[0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [0.0, 0.2, 0.0]]),
            &[
                tr_spec("a", ga, 0.0, [1.0, 0.0, 0.0]),
                tr_spec("b", gb, 0.0, [1.0, 0.0, 0.0]),
            ],
            CouplingMode::Full,
            None,
        )
        .unwrap();
        let solver = CorrelationSolver::new(&set).unwrap();
        let times: Vec<f64> = (0..=25).map(|i| 3.0 * i as f64 / 25.0).collect();
        let (tr, _) = solver
            .evolve(
                &times,
                &OdeOptions::with_tols(1e-11, 1e-13),
                &CorrelationMonitor::default(),
            )
            .unwrap();
        for (s, &t) in times.iter().enumerate() {
            let decay = (-gt * t).exp();
            assert_relative_eq!(tr.excited[s], 3.0 * decay, epsilon = 1e-9);
            assert_relative_eq!(
                tr.populations[0][s],
                3.0 * ga / gt * (1.0 - decay),
                epsilon = 1e-9
            );
            assert_relative_eq!(
                tr.populations[1][s],
                3.0 * gb / gt * (1.0 - decay),
                epsilon = 1e-9
            );
            assert_relative_eq!(tr.rates[0][s], ga * 3.0 * decay, epsilon = 1e-9);
            assert_relative_eq!(tr.rates[1][s], gb * 3.0 * decay, epsilon = 1e-9);
        }
    }

    #[test]
    fn early_decay_matches_exact_solver() {
        // The factorized terms carry two powers of decayed population, so
        // the accumulated error after a short time t is O((Γt)³).
        let set = build_coupling_set(
            &cloud_at(vec![[0.0, 0.0, 0.0], [0.2, 0.1, 0.0], [0.0, 0.15, 0.25], [0.3, 0.0, 0.2]]),
            &[tr_spec("g", 1.0, 1.0, [1.0, 0.0, 0.0])],
            CouplingMode::Full,
            None,
        )
        .unwrap();
        let times: Vec<f64> = (0..=10).map(|i| 0.01 * i as f64 / 10.0).collect();
        let exact = ExactSolver::new(&set).unwrap();
        let (tr_exact, _) = exact
            .evolve(&times, &OdeOptions::with_tols(1e-11, 1e-14), &MonitorOptions::default())
            .unwrap();
        let approx = CorrelationSolver::new(&set).unwrap();
        let (tr_corr, _) = approx
            .evolve(
                &times,
                &OdeOptions::with_tols(1e-11, 1e-14),
                &CorrelationMonitor::default(),
            )
            .unwrap();
        for s in 0..times.len() {
            assert!(
                (tr_exact.excited[s] - tr_corr.excited[s]).abs() < 2e-6,
                "t = {}: exact {} vs closure {}",
                times[s],
                tr_exact.excited[s],
                tr_corr.excited[s]
            );
            assert!((tr_exact.total_rate[s] - tr_corr.total_rate[s]).abs() < 2e-4);
        }
    }

    #[test]
    fn dicke_coupling_keeps_atoms_interchangeable() {
        let set = build_coupling_set(
            &cloud_at(vec![
                [0.0, 0.0, 0.0],
                [0.3, 0.0, 0.0],
                [0.0, 0.4, 0.0],
                [0.1, 0.1, 0.5],
            ]),
            &[tr_spec("g", 1.0, 1.0, [1.0, 0.0, 0.0])],
            CouplingMode::Dicke,
            None,
        )
        .unwrap();
        let solver = CorrelationSolver::new(&set).unwrap();
        let y0 = solver.initial_inverted();
        let mut ws = solver.workspace();
        let times = [0.0, 0.5, 1.2];
        let mut checked = 0;
        let (_, _) = integrate(
            |_t, y: &[C64], dy: &mut [C64]| solver.rhs(y, dy, &mut ws),
            0.0,
            &y0,
            1.2,
            &times,
            &OdeOptions::with_tols(1e-10, 1e-12),
            |_s, _t, ys| {
                let c = solver.correlation_matrix(ys, 0);
                let diag0 = c[[0, 0]];
                let off0 = c[[0, 1]];
                for i in 0..4 {
                    for j in 0..4 {
                        let v = c[[i, j]];
                        assert!(v.im.abs() < 1e-12, "imaginary part {v}");
                        if i == j {
                            assert_relative_eq!(v.re, diag0.re, epsilon = 1e-10);
                        } else {
                            assert_relative_eq!(v.re, off0.re, epsilon = 1e-10);
                        }
                    }
                }
                checked += 1;
                Ok(())
            },
            |_, _| Ok(()),
        )
        .unwrap();
        assert_eq!(checked, times.len());
    }

    #[test]
    fn rate_accounting_is_consistent() {
        // The emission rates computed from the state equal the diagonal
        // derivative sums from the kernel, and excited loss balances lower
        // level gain.
        let set = build_coupling_set(
            &cloud_at(vec![
                [0.0, 0.0, 0.0],
                [0.3, 0.1, -0.2],
                [-0.25, 0.3, 0.15],
                [0.1, -0.4, 0.3],
            ]),
            &[
                tr_spec("a", 1.0, 1.0, [1.0, 0.0, 0.0]),
                tr_spec("b", 0.6, 0.37, [0.0, 1.0, 0.5]),
            ],
            CouplingMode::Full,
            None,
        )
        .unwrap();
        let solver = CorrelationSolver::new(&set).unwrap();
        let y = random_hermitian_state(&solver, 11);
        let mut dy = vec![C64::new(0.0, 0.0); y.len()];
        let mut ws = solver.workspace();
        solver.rhs(&y, &mut dy, &mut ws);
        let rates = solver.emission_rates(&y);
        let n = solver.n_atoms();
        for ch in 0..solver.n_channels() {
            let diag_sum: f64 = (0..n).map(|i| dy[ch * n * n + i * n + i].re).sum();
            assert_relative_eq!(rates[ch], diag_sum, epsilon = 1e-12);
        }
        assert!(solver.hermiticity_defect(&dy) == 0.0);
    }

    #[test]
    fn evolution_preserves_hermiticity_exactly() {
        let set = build_coupling_set(
            &cloud_at(vec![[0.0, 0.0, 0.0], [0.25, 0.15, 0.1], [0.0, -0.3, 0.2]]),
            &[
                tr_spec("a", 1.0, 1.0, [1.0, 0.0, 0.0]),
                tr_spec("b", 0.5, 0.3, [0.0, 0.0, 1.0]),
            ],
            CouplingMode::Full,
            None,
        )
        .unwrap();
        let solver = CorrelationSolver::new(&set).unwrap();
        let times = [0.0, 0.7, 1.8];
        let (tr, _) = solver
            .evolve(&times, &OdeOptions::default(), &CorrelationMonitor::default())
            .unwrap();
        assert!(tr.excited[2] < tr.excited[0]);
    }
}
