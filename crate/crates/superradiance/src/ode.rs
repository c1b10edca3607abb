//! Adaptive Dormand-Prince 5(4) integration over complex state vectors.
//!
//! One integrator serves every solver in the crate, so it works directly on
//! `&[C64]` flat states instead of a generic state trait. Interpolated
//! samples come from the classic quartic dense-output polynomial, which keeps
//! observable grids decoupled from step selection.

use crate::{C64, Error, Result};

#[derive(Clone, Debug)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Budget of attempted steps (accepted + rejected).
    pub max_steps: usize,
    /// Initial step size; estimated from the RHS when absent.
    pub h_init: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rel_tol: 1e-6, abs_tol: 1e-9, max_steps: 10_000_000, h_init: None }
    }
}

impl OdeOptions {
    pub fn with_tols(rel_tol: f64, abs_tol: f64) -> Self {
        OdeOptions { rel_tol, abs_tol, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol >= 1e-14) || !self.rel_tol.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "rel_tol {} out of range [1e-14, inf)",
                self.rel_tol
            )));
        }
        if !(self.abs_tol > 0.0) || !self.abs_tol.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "abs_tol {} must be positive",
                self.abs_tol
            )));
        }
        if let Some(h) = self.h_init {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::InvalidArgument(format!("h_init {h} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

// Butcher tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
// Fifth-order weights; the method is FSAL so these are also the last stage.
const A7: [f64; 6] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
// Difference between the 5th- and embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense-output weights.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

struct Work {
    k: [Vec<C64>; 7],
    ytmp: Vec<C64>,
    ynew: Vec<C64>,
    ysample: Vec<C64>,
    cont: [Vec<C64>; 5],
}

impl Work {
    fn new(dim: usize) -> Self {
        let z = || vec![C64::new(0.0, 0.0); dim];
        Work {
            k: [z(), z(), z(), z(), z(), z(), z()],
            ytmp: z(),
            ynew: z(),
            ysample: z(),
            cont: [z(), z(), z(), z(), z()],
        }
    }
}

fn stage(ytmp: &mut [C64], y: &[C64], h: f64, k: &[Vec<C64>], a: &[f64]) {
    for i in 0..y.len() {
        let mut acc = C64::new(0.0, 0.0);
        for (aj, kj) in a.iter().zip(k) {
            if *aj != 0.0 {
                acc += *aj * kj[i];
            }
        }
        ytmp[i] = y[i] + h * acc;
    }
}

/// Scaled RMS error norm; ≤ 1 means the step passes.
fn error_norm(y0: &[C64], y1: &[C64], k: &[Vec<C64>; 7], h: f64, rtol: f64, atol: f64) -> f64 {
    let n = y0.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut e = C64::new(0.0, 0.0);
        for (ej, kj) in E.iter().zip(k.iter()) {
            if *ej != 0.0 {
                e += *ej * kj[i];
            }
        }
        let e = (h * e).norm();
        let sc = atol + rtol * y0[i].norm().max(y1[i].norm());
        let q = e / sc;
        acc += q * q;
    }
    (acc / n.max(1) as f64).sqrt()
}

fn scaled_rms(v: &[C64], yref: &[C64], rtol: f64, atol: f64) -> f64 {
    let n = v.len();
    let mut acc = 0.0;
    for i in 0..n {
        let sc = atol + rtol * yref[i].norm();
        let q = v[i].norm() / sc;
        acc += q * q;
    }
    (acc / n.max(1) as f64).sqrt()
}

/// Standard starting-step heuristic (one extra RHS evaluation).
fn initial_step<R>(
    rhs: &mut R,
    t0: f64,
    y0: &[C64],
    f0: &[C64],
    t_end: f64,
    rtol: f64,
    atol: f64,
    scratch_y: &mut [C64],
    scratch_f: &mut [C64],
) -> f64
where
    R: FnMut(f64, &[C64], &mut [C64]),
{
    let span = t_end - t0;
    let d0 = scaled_rms(y0, y0, rtol, atol);
    let d1 = scaled_rms(f0, y0, rtol, atol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span.max(1e-6) } else { 0.01 * (d0 / d1) };
    let h0 = h0.min(span);
    for i in 0..y0.len() {
        scratch_y[i] = y0[i] + h0 * f0[i];
    }
    rhs(t0 + h0, scratch_y, scratch_f);
    for i in 0..y0.len() {
        scratch_f[i] -= f0[i];
    }
    let d2 = scaled_rms(scratch_f, y0, rtol, atol) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dm).powf(0.2) };
    (100.0 * h0).min(h1).min(span)
}

/// Integrate `dy/dt = rhs(t, y)` from `t0` to `t_end`.
///
/// `samples` must be ascending and lie within [t0, t_end]; `on_sample(i, t,
/// y)` receives the dense-output state at each. `on_accept(t, y)` runs after
/// every accepted step and may abort the integration by returning an error
/// (used for invariant monitors). Returns the final state and step counts.
pub fn integrate<R>(
    mut rhs: R,
    t0: f64,
    y0: &[C64],
    t_end: f64,
    samples: &[f64],
    opts: &OdeOptions,
    mut on_sample: impl FnMut(usize, f64, &[C64]) -> Result<()>,
    mut on_accept: impl FnMut(f64, &[C64]) -> Result<()>,
) -> Result<(Vec<C64>, StepStats)>
where
    R: FnMut(f64, &[C64], &mut [C64]),
{
    opts.validate()?;
    if !t0.is_finite() || !t_end.is_finite() || t_end < t0 {
        return Err(Error::InvalidArgument(format!(
            "integration span [{t0}, {t_end}] must be finite and forward"
        )));
    }
    let span = t_end - t0;
    let slack = 1e-12 * span.max(t_end.abs()).max(1.0);
    for w in samples.windows(2) {
        if w[1] < w[0] {
            return Err(Error::InvalidArgument("sample times must be ascending".into()));
        }
    }
    if let (Some(&first), Some(&last)) = (samples.first(), samples.last()) {
        if first < t0 - slack || last > t_end + slack {
            return Err(Error::InvalidArgument(format!(
                "sample times [{first}, {last}] outside integration span [{t0}, {t_end}]"
            )));
        }
    }

    let dim = y0.len();
    let mut w = Work::new(dim);
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut stats = StepStats::default();
    let mut sample_ptr = 0;

    // Samples at the start use the initial state directly.
    while sample_ptr < samples.len() && samples[sample_ptr] <= t0 + slack {
        on_sample(sample_ptr, samples[sample_ptr], &y)?;
        sample_ptr += 1;
    }

    rhs(t, &y, &mut w.k[0]);
    stats.rhs_evals += 1;

    if span == 0.0 {
        return Ok((y, stats));
    }

    let mut h = match opts.h_init {
        Some(h) => h.min(span),
        None => {
            let h = initial_step(
                &mut rhs,
                t,
                &y,
                &w.k[0],
                t_end,
                opts.rel_tol,
                opts.abs_tol,
                &mut w.ytmp,
                &mut w.ynew,
            );
            stats.rhs_evals += 1;
            h
        }
    };

    while t_end - t > slack {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::StepLimit(opts.max_steps));
        }
        let h_min = 1e-14 * t.abs().max(1.0);
        if h < h_min {
            return Err(Error::Stiffness { t, h });
        }
        h = h.min(t_end - t);

        stage(&mut w.ytmp, &y, h, &w.k[..1], &A2);
        rhs(t + C[1] * h, &w.ytmp, &mut w.k[1]);
        stage(&mut w.ytmp, &y, h, &w.k[..2], &A3);
        rhs(t + C[2] * h, &w.ytmp, &mut w.k[2]);
        stage(&mut w.ytmp, &y, h, &w.k[..3], &A4);
        rhs(t + C[3] * h, &w.ytmp, &mut w.k[3]);
        stage(&mut w.ytmp, &y, h, &w.k[..4], &A5);
        rhs(t + C[4] * h, &w.ytmp, &mut w.k[4]);
        stage(&mut w.ytmp, &y, h, &w.k[..5], &A6);
        rhs(t + C[5] * h, &w.ytmp, &mut w.k[5]);
        stage(&mut w.ynew, &y, h, &w.k[..6], &A7);
        rhs(t + C[6] * h, &w.ynew, &mut w.k[6]);
        stats.rhs_evals += 6;

        let err = error_norm(&y, &w.ynew, &w.k, h, opts.rel_tol, opts.abs_tol);
        // NaN fails the acceptance test and the clamp turns the NaN factor
        // into the maximum shrink, so a poisoned step just backs off.
        let fac = (0.9 * err.powf(-0.2)).max(0.2).min(5.0);
        if err <= 1.0 {
            let t_new = t + h;
            if sample_ptr < samples.len() && samples[sample_ptr] <= t_new + slack {
                build_dense(&mut w, &y, h);
                while sample_ptr < samples.len() && samples[sample_ptr] <= t_new + slack {
                    let ts = samples[sample_ptr];
                    let theta = ((ts - t) / h).clamp(0.0, 1.0);
                    eval_dense(&w.cont, theta, &mut w.ysample);
                    on_sample(sample_ptr, ts, &w.ysample)?;
                    sample_ptr += 1;
                }
            }
            std::mem::swap(&mut y, &mut w.ynew);
            w.k.swap(0, 6); // first-same-as-last
            t = t_new;
            stats.accepted += 1;
            on_accept(t, &y)?;
            h *= fac;
        } else {
            stats.rejected += 1;
            h *= fac.min(1.0);
        }
    }

    // Flush any samples sitting at the horizon within rounding slack.
    while sample_ptr < samples.len() {
        on_sample(sample_ptr, samples[sample_ptr], &y)?;
        sample_ptr += 1;
    }
    Ok((y, stats))
}

fn build_dense(w: &mut Work, y0: &[C64], h: f64) {
    for i in 0..y0.len() {
        let ydiff = w.ynew[i] - y0[i];
        let bspl = h * w.k[0][i] - ydiff;
        let mut d = C64::new(0.0, 0.0);
        for (dj, kj) in D.iter().zip(w.k.iter()) {
            if *dj != 0.0 {
                d += *dj * kj[i];
            }
        }
        w.cont[0][i] = y0[i];
        w.cont[1][i] = ydiff;
        w.cont[2][i] = bspl;
        w.cont[3][i] = ydiff - h * w.k[6][i] - bspl;
        w.cont[4][i] = h * d;
    }
}

fn eval_dense(cont: &[Vec<C64>; 5], theta: f64, out: &mut [C64]) {
    let theta1 = 1.0 - theta;
    for i in 0..out.len() {
        out[i] = cont[0][i]
            + theta
                * (cont[1][i]
                    + theta1 * (cont[2][i] + theta * (cont[3][i] + theta1 * cont[4][i])));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    // dy/dt = λy with complex λ exercises both components at once.
    const LAM: C64 = C64::new(-1.0, 0.5);

    fn exp_rhs(_t: f64, y: &[C64], dy: &mut [C64]) {
        dy[0] = LAM * y[0];
    }

    #[test]
    fn reproduces_complex_exponential() {
        let opts = OdeOptions::with_tols(1e-8, 1e-12);
        let (y, stats) =
            integrate(exp_rhs, 0.0, &[c(1.0, 0.0)], 5.0, &[], &opts, |_, _, _| Ok(()), |_, _| Ok(()))
                .unwrap();
        let exact = (LAM * 5.0).exp();
        assert!((y[0] - exact).norm() < 1e-7, "err {}", (y[0] - exact).norm());
        assert!(stats.accepted > 10);
    }

    #[test]
    fn dense_output_tracks_solution_between_steps() {
        let samples: Vec<f64> = (0..=200).map(|i| 5.0 * i as f64 / 200.0).collect();
        let opts = OdeOptions::with_tols(1e-8, 1e-12);
        let mut worst: f64 = 0.0;
        integrate(
            exp_rhs,
            0.0,
            &[c(1.0, 0.0)],
            5.0,
            &samples,
            &opts,
            |_, t, y| {
                let exact = (LAM * t).exp();
                worst = worst.max((y[0] - exact).norm());
                Ok(())
            },
            |_, _| Ok(()),
        )
        .unwrap();
        assert!(worst < 1e-6, "worst dense error {worst}");
    }

    #[test]
    fn dense_output_degrades_gracefully_at_loose_tolerance() {
        let samples: Vec<f64> = (0..=100).map(|i| 10.0 * i as f64 / 100.0).collect();
        let opts = OdeOptions::with_tols(1e-3, 1e-6);
        let mut worst: f64 = 0.0;
        integrate(
            |_t, y: &[C64], dy: &mut [C64]| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[c(1.0, 0.0), c(0.0, 0.0)],
            10.0,
            &samples,
            &opts,
            |_, t, y| {
                worst = worst.max((y[0] - c(t.cos(), 0.0)).norm());
                Ok(())
            },
            |_, _| Ok(()),
        )
        .unwrap();
        assert!(worst < 3e-2, "worst dense error {worst}");
    }

    #[test]
    fn step_count_scales_like_fifth_order() {
        let run = |rtol: f64| {
            let opts = OdeOptions::with_tols(rtol, 1e-14);
            let (_, stats) = integrate(
                |_t, y: &[C64], dy: &mut [C64]| {
                    dy[0] = y[1];
                    dy[1] = -y[0];
                },
                0.0,
                &[c(1.0, 0.0), c(0.0, 0.0)],
                20.0,
                &[],
                &opts,
                |_, _, _| Ok(()),
                |_, _| Ok(()),
            )
            .unwrap();
            stats.accepted as f64
        };
        // A fifth-order method needs ~10^(3/5) ≈ 4 times the steps for three
        // more digits.
        let ratio = run(1e-8) / run(1e-5);
        assert!((3.0..5.5).contains(&ratio), "step ratio {ratio}");
    }

    #[test]
    fn reuses_last_stage_as_first() {
        let opts = OdeOptions { h_init: Some(0.05), ..OdeOptions::with_tols(1e-6, 1e-9) };
        let (_, stats) =
            integrate(exp_rhs, 0.0, &[c(1.0, 0.0)], 3.0, &[], &opts, |_, _, _| Ok(()), |_, _| Ok(()))
                .unwrap();
        // One initial evaluation, then exactly six per attempted step.
        assert_eq!(stats.rhs_evals, 1 + 6 * (stats.accepted + stats.rejected));
    }

    #[test]
    fn preserves_unit_modulus_on_rotation() {
        let opts = OdeOptions::with_tols(1e-9, 1e-12);
        let (y, _) = integrate(
            |_t, y: &[C64], dy: &mut [C64]| dy[0] = C64::new(0.0, 1.0) * y[0],
            0.0,
            &[c(1.0, 0.0)],
            100.0,
            &[],
            &opts,
            |_, _, _| Ok(()),
            |_, _| Ok(()),
        )
        .unwrap();
        assert!((y[0].norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn poisoned_rhs_reports_stiffness() {
        let err = integrate(
            |t, y: &[C64], dy: &mut [C64]| {
                dy[0] = if t < 0.3 { -y[0] } else { c(f64::NAN, 0.0) };
            },
            0.0,
            &[c(1.0, 0.0)],
            1.0,
            &[],
            &OdeOptions::default(),
            |_, _, _| Ok(()),
            |_, _| Ok(()),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Stiffness { .. }), "{err}");
    }

    #[test]
    fn exhausted_step_budget_reports_limit() {
        let opts = OdeOptions { max_steps: 10, ..OdeOptions::with_tols(1e-10, 1e-14) };
        let err = integrate(
            |_t, y: &[C64], dy: &mut [C64]| dy[0] = C64::new(0.0, 10.0) * y[0],
            0.0,
            &[c(1.0, 0.0)],
            1000.0,
            &[],
            &opts,
            |_, _, _| Ok(()),
            |_, _| Ok(()),
        )
        .unwrap_err();
        assert!(matches!(err, Error::StepLimit(10)), "{err}");
    }

    #[test]
    fn zero_span_returns_initial_state() {
        let (y, stats) = integrate(
            exp_rhs,
            1.0,
            &[c(0.3, 0.4)],
            1.0,
            &[1.0],
            &OdeOptions::default(),
            |i, t, y| {
                assert_eq!((i, t), (0, 1.0));
                assert_eq!(y[0], c(0.3, 0.4));
                Ok(())
            },
            |_, _| Ok(()),
        )
        .unwrap();
        assert_eq!(y[0], c(0.3, 0.4));
        assert_eq!(stats.accepted, 0);
    }

    #[test]
    fn rejects_bad_spans_samples_and_options() {
        let y0 = [c(1.0, 0.0)];
        let ok = |_: usize, _: f64, _: &[C64]| Ok(());
        let acc = |_: f64, _: &[C64]| Ok(());
        assert!(integrate(exp_rhs, 1.0, &y0, 0.0, &[], &OdeOptions::default(), ok, acc).is_err());
        assert!(
            integrate(exp_rhs, 0.0, &y0, 1.0, &[0.5, 0.2], &OdeOptions::default(), ok, acc).is_err()
        );
        assert!(
            integrate(exp_rhs, 0.0, &y0, 1.0, &[1.5], &OdeOptions::default(), ok, acc).is_err()
        );
        let bad = OdeOptions { rel_tol: 0.0, ..Default::default() };
        assert!(integrate(exp_rhs, 0.0, &y0, 1.0, &[], &bad, ok, acc).is_err());
        let bad = OdeOptions { abs_tol: -1.0, ..Default::default() };
        assert!(integrate(exp_rhs, 0.0, &y0, 1.0, &[], &bad, ok, acc).is_err());
    }

    #[test]
    fn on_accept_can_abort() {
        let err = integrate(
            exp_rhs,
            0.0,
            &[c(1.0, 0.0)],
            10.0,
            &[],
            &OdeOptions::default(),
            |_, _, _| Ok(()),
            |t, _| {
                if t > 1.0 {
                    Err(Error::Accuracy("monitor tripped".into()))
                } else {
                    Ok(())
                }
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Accuracy(_)));
    }
}
