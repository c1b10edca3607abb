//! Pairwise dipole-dipole kernels and per-channel coupling matrices.
//!
//! For two atoms a scaled distance ξ = k·r apart, with φ the angle between
//! the separation axis and the transition dipole, spontaneous emission into
//! shared modes produces a dissipative coupling `decay_kernel` (real, bounded
//! by the single-atom rate) and a coherent frequency-shift coupling
//! `shift_kernel` (real, diverging like ξ⁻³ at contact). The solvers consume
//! them through the complex combination g = i·f + Γ_pair/2.

use crate::cloud::{pair_geometry, Cloud, DEFAULT_MIN_SEPARATION_FACTOR};
use crate::{C64, Error, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Which parts of the pair coupling a solver sees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMode {
    /// Dissipative and coherent parts, as the geometry dictates.
    Full,
    /// Dissipative part only; coherent shifts switched off.
    InelasticOnly,
    /// All-to-all coupling at the single-atom rate, distance ignored. This is
    /// the small-sample limit in which every pair coupling saturates.
    Dicke,
}

/// One decay channel from the shared excited state.
///
/// `lambda == 0` marks a transition so short-waved that its couplings average
/// away; such a channel decays independently per atom and gets a zero
/// coupling matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransitionSpec {
    pub label: String,
    /// Single-atom decay rate.
    pub gamma: f64,
    /// Transition wavelength in the same length unit as atom positions.
    pub lambda: f64,
    /// Dipole orientation; need not be normalized.
    #[serde(default = "default_dipole")]
    pub dipole: [f64; 3],
}

fn default_dipole() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

/// Coupling matrix for one channel over a fixed cloud.
#[derive(Clone, Debug)]
pub struct ChannelCouplings {
    pub label: String,
    pub gamma: f64,
    pub lambda: f64,
    /// g[i][j] = i·f_ij + Γ_ij/2 for i ≠ j, γ/2 on the diagonal. Symmetric
    /// (not Hermitian). All zero when `lambda == 0`.
    pub g: Array2<C64>,
}

/// All channel coupling matrices for one cloud realization.
#[derive(Clone, Debug)]
pub struct CouplingSet {
    pub n_atoms: usize,
    pub mode: CouplingMode,
    pub channels: Vec<ChannelCouplings>,
}

// Below this ξ the naive dissipative expression cancels catastrophically
// (the two 1/ξ³-sized pieces differ by O(1)), so a series takes over. At the
// switch point both forms agree to ~1e-13 absolute.
const SERIES_SWITCH: f64 = 0.5;

/// Dissipative pair coupling Γ_pair(ξ, φ) for single-atom rate `gamma`.
///
/// Tends to `gamma` as ξ → 0 regardless of φ and decays like 1/ξ in the far
/// field. ξ must be positive.
pub fn decay_kernel(xi: f64, phi: f64, gamma: f64) -> f64 {
    let cos_phi = phi.cos();
    let a = 1.0 - 3.0 * cos_phi * cos_phi;
    let b = 1.0 - cos_phi * cos_phi;
    let (c2, sinc) = if xi < SERIES_SWITCH {
        let x2 = xi * xi;
        // (ξ cos ξ − sin ξ)/ξ³ and sin ξ / ξ, both to O(ξ¹⁰).
        let c2 = -1.0 / 3.0
            + x2 * (1.0 / 30.0 + x2 * (-1.0 / 840.0 + x2 * (1.0 / 45_360.0 - x2 / 3_991_680.0)));
        let sinc = 1.0
            + x2 * (-1.0 / 6.0 + x2 * (1.0 / 120.0 + x2 * (-1.0 / 5040.0 + x2 / 362_880.0)));
        (c2, sinc)
    } else {
        let (s, c) = xi.sin_cos();
        ((c * xi - s) / (xi * xi * xi), s / xi)
    };
    1.5 * gamma * (a * c2 + b * sinc)
}

/// Coherent frequency-shift pair coupling f(ξ, φ) for single-atom rate
/// `gamma`. Diverges like (3γ/4)(1−3cos²φ)/ξ³ at contact; ξ must be
/// positive.
pub fn shift_kernel(xi: f64, phi: f64, gamma: f64) -> f64 {
    let cos_phi = phi.cos();
    let a = 1.0 - 3.0 * cos_phi * cos_phi;
    let b = 1.0 - cos_phi * cos_phi;
    let (s, c) = xi.sin_cos();
    let xi2 = xi * xi;
    0.75 * gamma * (a * (s / xi2 + c / (xi2 * xi)) - b * c / xi)
}

/// Complex pair coupling g = i·f + Γ_pair/2 used by the equations of motion.
pub fn pair_coupling(xi: f64, phi: f64, gamma: f64) -> C64 {
    C64::new(0.5 * decay_kernel(xi, phi, gamma), shift_kernel(xi, phi, gamma))
}

fn validate_transitions(transitions: &[TransitionSpec]) -> Result<()> {
    if transitions.is_empty() {
        return Err(Error::InvalidArgument("at least one transition required".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for tr in transitions {
        if tr.label.is_empty() {
            return Err(Error::InvalidArgument("transition label must be non-empty".into()));
        }
        if !seen.insert(tr.label.as_str()) {
            return Err(Error::InvalidArgument(format!(
                "duplicate transition label '{}'",
                tr.label
            )));
        }
        if !(tr.gamma > 0.0) || !tr.gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "transition '{}': decay rate must be positive and finite",
                tr.label
            )));
        }
        if !(tr.lambda >= 0.0) || !tr.lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "transition '{}': wavelength must be non-negative and finite",
                tr.label
            )));
        }
        let nd = tr.dipole.iter().map(|d| d * d).sum::<f64>().sqrt();
        if tr.lambda > 0.0 && !(nd > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "transition '{}': dipole orientation must be non-zero",
                tr.label
            )));
        }
    }
    Ok(())
}

/// Build per-channel coupling matrices for one cloud.
///
/// `min_separation` defaults to 10⁻³·σ; any pair closer than that makes the
/// near-field couplings overflow the tolerance of every solver here, so it is
/// reported as an accuracy error rather than silently producing huge matrix
/// entries. Matrices are filled once per unordered pair and mirrored, so
/// g[i][j] == g[j][i] holds bit-for-bit.
pub fn build_coupling_set(
    cloud: &Cloud,
    transitions: &[TransitionSpec],
    mode: CouplingMode,
    min_separation: Option<f64>,
) -> Result<CouplingSet> {
    validate_transitions(transitions)?;
    let n = cloud.positions.len();
    if n == 0 {
        return Err(Error::InvalidArgument("cloud has no atoms".into()));
    }
    let needs_geometry =
        mode != CouplingMode::Dicke && transitions.iter().any(|t| t.lambda > 0.0);
    if needs_geometry {
        let min_sep = min_separation.unwrap_or(DEFAULT_MIN_SEPARATION_FACTOR * cloud.sigma);
        for i in 0..n {
            for j in 0..i {
                let d = &cloud.positions;
                let dx = d[i][0] - d[j][0];
                let dy = d[i][1] - d[j][1];
                let dz = d[i][2] - d[j][2];
                let r = (dx * dx + dy * dy + dz * dz).sqrt();
                if r < min_sep {
                    return Err(Error::Accuracy(format!(
                        "atoms {j} and {i} are {r:.3e} apart, below the minimum separation \
                         {min_sep:.3e}; near-field couplings overflow"
                    )));
                }
            }
        }
    }
    let channels = transitions
        .iter()
        .map(|tr| {
            let mut g = Array2::<C64>::zeros((n, n));
            match mode {
                CouplingMode::Dicke => {
                    g.fill(C64::new(0.5 * tr.gamma, 0.0));
                }
                _ if tr.lambda == 0.0 => {}
                _ => {
                    let k = 2.0 * std::f64::consts::PI / tr.lambda;
                    for i in 0..n {
                        g[[i, i]] = C64::new(0.5 * tr.gamma, 0.0);
                        for j in 0..i {
                            let geo =
                                pair_geometry(cloud.positions[i], cloud.positions[j], k, tr.dipole);
                            let mut gij = pair_coupling(geo.xi, geo.phi, tr.gamma);
                            if mode == CouplingMode::InelasticOnly {
                                gij.im = 0.0;
                            }
                            g[[i, j]] = gij;
                            g[[j, i]] = gij;
                        }
                    }
                }
            }
            ChannelCouplings { label: tr.label.clone(), gamma: tr.gamma, lambda: tr.lambda, g }
        })
        .collect();
    Ok(CouplingSet { n_atoms: n, mode, channels })
}

impl CouplingSet {
    /// Sum of single-atom decay rates over all channels.
    pub fn total_gamma(&self) -> f64 {
        self.channels.iter().map(|c| c.gamma).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::sample_cloud;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn spec(label: &str, gamma: f64, lambda: f64) -> TransitionSpec {
        TransitionSpec { label: label.into(), gamma, lambda, dipole: [1.0, 0.0, 0.0] }
    }

    #[test]
    fn shift_kernel_reference_values() {
        // Half-wavelength along the dipole axis: 3/(2π³).
        assert_relative_eq!(
            shift_kernel(PI, 0.0, 1.0),
            3.0 / (2.0 * PI.powi(3)),
            max_relative = 1e-12
        );
        assert_relative_eq!(shift_kernel(PI, 0.0, 1.0), 0.0483773, max_relative = 1e-5);
        // Full wavelength perpendicular to the dipole.
        assert_relative_eq!(
            shift_kernel(2.0 * PI, PI / 2.0, 1.0),
            0.75 * (1.0 / (8.0 * PI.powi(3)) - 1.0 / (2.0 * PI)),
            max_relative = 1e-12
        );
        assert_relative_eq!(shift_kernel(2.0 * PI, PI / 2.0, 1.0), -0.1163430, max_relative = 1e-5);
    }

    #[test]
    fn decay_kernel_reference_values() {
        // Full wavelength perpendicular to the dipole: 3/(8π²).
        assert_relative_eq!(
            decay_kernel(2.0 * PI, PI / 2.0, 1.0),
            3.0 / (8.0 * PI * PI),
            max_relative = 1e-12
        );
        assert_relative_eq!(decay_kernel(2.0 * PI, PI / 2.0, 1.0), 0.0379954, max_relative = 1e-5);
    }

    #[test]
    fn pair_coupling_composes_both_kernels() {
        let g = pair_coupling(2.0 * PI, PI / 2.0, 1.0);
        assert_relative_eq!(g.re, 0.5 * decay_kernel(2.0 * PI, PI / 2.0, 1.0), max_relative = 1e-15);
        assert_relative_eq!(g.im, shift_kernel(2.0 * PI, PI / 2.0, 1.0), max_relative = 1e-15);
        assert_relative_eq!(g.re, 0.0189977, max_relative = 1e-4);
        assert_relative_eq!(g.im, -0.1163430, max_relative = 1e-4);
    }

    #[test]
    fn shift_kernel_contact_divergence() {
        // f·ξ³ approaches (3γ/4)(1−3cos²φ) at contact.
        let xi = 1e-4;
        assert_relative_eq!(
            shift_kernel(xi, 0.0, 1.0) * xi.powi(3),
            0.75 * (1.0 - 3.0),
            max_relative = 1e-6
        );
        // Moving one decade closer scales the kernel by 10³ up to O(ξ²).
        let ratio = shift_kernel(1e-2, 0.0, 1.0) / shift_kernel(1e-1, 0.0, 1.0);
        assert!((ratio - 1000.0).abs() / 1000.0 < 0.01, "ratio {ratio}");
    }

    #[test]
    fn decay_kernel_contact_limit_is_single_atom_rate() {
        for &phi in &[0.0, 0.3, 1.2, PI / 2.0, 2.8] {
            assert_relative_eq!(decay_kernel(1e-4, phi, 1.0), 1.0, max_relative = 1e-8);
            assert_relative_eq!(decay_kernel(1e-2, phi, 2.5), 2.5, max_relative = 1e-4);
        }
    }

    #[test]
    fn decay_kernel_series_matches_direct_form() {
        // At moderate ξ the naive expression still has most of its digits;
        // compare it against the series branch.
        for &xi in &[0.2f64, 0.3, 0.45, 0.49999] {
            for &phi in &[0.0f64, 0.7, PI / 2.0] {
                let cos_phi: f64 = phi.cos();
                let a = 1.0 - 3.0 * cos_phi * cos_phi;
                let b = 1.0 - cos_phi * cos_phi;
                let direct =
                    1.5 * (a * (xi.cos() / (xi * xi) - xi.sin() / (xi * xi * xi)) + b * xi.sin() / xi);
                assert_relative_eq!(decay_kernel(xi, phi, 1.0), direct, max_relative = 1e-10);
            }
        }
        // Continuity across the branch switch.
        let below = decay_kernel(0.5 - 1e-9, 0.8, 1.0);
        let above = decay_kernel(0.5 + 1e-9, 0.8, 1.0);
        assert!((below - above).abs() < 1e-9);
    }

    #[test]
    fn decay_kernel_is_bounded_by_single_atom_rate() {
        let mut xi = 1e-3;
        while xi < 50.0 {
            for k in 0..16 {
                let phi = PI * k as f64 / 15.0;
                let v = decay_kernel(xi, phi, 1.0);
                assert!(v.abs() <= 1.0 + 1e-12, "Γ({xi}, {phi}) = {v}");
            }
            xi *= 1.07;
        }
    }

    #[test]
    fn kernels_decay_in_far_field() {
        let mut xi: f64 = 10.0;
        while xi < 3000.0 {
            for &phi in &[0.0, 0.5, 1.0, PI / 2.0] {
                assert!(decay_kernel(xi, phi, 1.0).abs() <= 4.6 / xi);
                assert!(shift_kernel(xi, phi, 1.0).abs() <= 4.6 / xi);
            }
            xi *= 1.7;
        }
    }

    #[test]
    fn build_produces_symmetric_matrices_with_half_rate_diagonal() {
        let cloud = sample_cloud(12, 0.4, 1e-4, 17).unwrap();
        let set = build_coupling_set(
            &cloud,
            &[spec("g", 1.0, 1.0), spec("b", 0.3, 0.35)],
            CouplingMode::Full,
            None,
        )
        .unwrap();
        assert_eq!(set.channels.len(), 2);
        assert_relative_eq!(set.total_gamma(), 1.3, max_relative = 1e-15);
        for ch in &set.channels {
            for i in 0..12 {
                assert_eq!(ch.g[[i, i]], C64::new(0.5 * ch.gamma, 0.0));
                for j in 0..i {
                    assert_eq!(ch.g[[i, j]], ch.g[[j, i]]);
                }
            }
        }
    }

    #[test]
    fn build_matches_kernels_per_pair_and_channel() {
        let cloud = sample_cloud(6, 0.4, 1e-4, 23).unwrap();
        let tr = [spec("g", 1.0, 1.0), spec("b", 0.5, 2.0)];
        let set = build_coupling_set(&cloud, &tr, CouplingMode::Full, None).unwrap();
        for (ch, t) in set.channels.iter().zip(&tr) {
            let k = 2.0 * PI / t.lambda;
            for i in 0..6 {
                for j in 0..6 {
                    if i == j {
                        continue;
                    }
                    let geo = pair_geometry(cloud.positions[i], cloud.positions[j], k, t.dipole);
                    assert_eq!(ch.g[[i, j]], pair_coupling(geo.xi, geo.phi, t.gamma));
                }
            }
        }
    }

    #[test]
    fn inelastic_only_zeroes_the_coherent_part() {
        let cloud = sample_cloud(8, 0.4, 1e-4, 29).unwrap();
        let set =
            build_coupling_set(&cloud, &[spec("g", 1.0, 1.0)], CouplingMode::InelasticOnly, None)
                .unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(set.channels[0].g[[i, j]].im, 0.0);
                if i != j {
                    let k = 2.0 * PI;
                    let geo = pair_geometry(cloud.positions[i], cloud.positions[j], k, [1.0, 0.0, 0.0]);
                    assert_relative_eq!(
                        set.channels[0].g[[i, j]].re,
                        0.5 * decay_kernel(geo.xi, geo.phi, 1.0),
                        max_relative = 1e-15
                    );
                }
            }
        }
    }

    #[test]
    fn dicke_mode_saturates_all_pairs() {
        let cloud = sample_cloud(5, 0.4, 1e-4, 31).unwrap();
        let set = build_coupling_set(&cloud, &[spec("g", 1.0, 1.0)], CouplingMode::Dicke, None)
            .unwrap();
        for v in set.channels[0].g.iter() {
            assert_eq!(*v, C64::new(0.5, 0.0));
        }
    }

    #[test]
    fn zero_wavelength_channel_has_zero_matrix() {
        let cloud = sample_cloud(5, 0.4, 1e-4, 37).unwrap();
        let set = build_coupling_set(
            &cloud,
            &[spec("a", 1.0, 1.0), spec("g", 21.0, 0.0)],
            CouplingMode::Full,
            None,
        )
        .unwrap();
        for v in set.channels[1].g.iter() {
            assert_eq!(*v, C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn close_pair_reports_coupling_overflow() {
        let cloud = Cloud {
            positions: vec![[0.0, 0.0, 0.0], [0.0, 0.0, 1e-9]],
            sigma: 1.0,
            seed: 0,
        };
        let err =
            build_coupling_set(&cloud, &[spec("g", 1.0, 1.0)], CouplingMode::Full, None).unwrap_err();
        assert!(matches!(err, Error::Accuracy(_)), "{err}");
        // Dicke mode needs no geometry, so the same cloud is fine there.
        build_coupling_set(&cloud, &[spec("g", 1.0, 1.0)], CouplingMode::Dicke, None).unwrap();
    }

    #[test]
    fn invalid_transitions_are_rejected() {
        let cloud = sample_cloud(3, 0.4, 1e-4, 41).unwrap();
        assert!(build_coupling_set(&cloud, &[], CouplingMode::Full, None).is_err());
        assert!(build_coupling_set(
            &cloud,
            &[spec("g", 1.0, 1.0), spec("g", 2.0, 1.0)],
            CouplingMode::Full,
            None
        )
        .is_err());
        assert!(build_coupling_set(&cloud, &[spec("g", -1.0, 1.0)], CouplingMode::Full, None)
            .is_err());
        let mut bad = spec("g", 1.0, 1.0);
        bad.dipole = [0.0, 0.0, 0.0];
        assert!(build_coupling_set(&cloud, &[bad], CouplingMode::Full, None).is_err());
    }
}
