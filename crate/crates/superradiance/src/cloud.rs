//! Gaussian atom clouds and pairwise geometry.
//!
//! Positions are stored in whatever length unit the caller works in; the rest
//! of the crate uses the reference transition wavelength. Density here always
//! means the Gaussian-weighted density N / (4πσ²)^(3/2), i.e. the density a
//! second atom sees averaged over the distribution, not the peak density.

use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

/// Default minimum pair separation, as a fraction of σ.
pub const DEFAULT_MIN_SEPARATION_FACTOR: f64 = 1e-3;

/// A single random realization of atom positions.
#[derive(Clone, Debug, PartialEq)]
pub struct Cloud {
    pub positions: Vec<[f64; 3]>,
    pub sigma: f64,
    pub seed: u64,
}

/// Relative orientation of one atom pair: scaled separation ξ = k·r and the
/// angle φ between the separation axis and the transition dipole, folded to
/// [0, π/2] so that the result is symmetric under swapping the atoms. The
/// coupling kernels only ever use cos²φ and sin²φ, which the fold preserves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairGeometry {
    pub xi: f64,
    pub phi: f64,
}

/// RMS width σ of a Gaussian cloud with the given atom count and
/// Gaussian-weighted density.
pub fn sigma_from_density(n_atoms: usize, density: f64) -> Result<f64> {
    if n_atoms == 0 {
        return Err(Error::InvalidArgument("atom count must be positive".into()));
    }
    if !(density > 0.0) || !density.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "density must be positive and finite, got {density}"
        )));
    }
    Ok((n_atoms as f64 / density).cbrt() / (2.0 * std::f64::consts::PI.sqrt()))
}

/// Gaussian-weighted density of a cloud with the given atom count and width.
pub fn density_from_sigma(n_atoms: usize, sigma: f64) -> f64 {
    let four_pi = 4.0 * std::f64::consts::PI;
    n_atoms as f64 / (four_pi * sigma * sigma).powf(1.5)
}

/// Draw an isotropic Gaussian cloud of `n_atoms` positions with RMS width
/// `sigma` per coordinate.
///
/// Atoms closer than `min_separation` to an already placed atom are redrawn,
/// which keeps near-field couplings finite without visibly distorting the
/// distribution (the excluded volume is ~(min_sep/σ)³ per pair). The stream
/// is ChaCha12 keyed by `seed` alone, so a (seed, n, σ) triple reproduces the
/// identical cloud on any platform.
pub fn sample_cloud(
    n_atoms: usize,
    sigma: f64,
    min_separation: f64,
    seed: u64,
) -> Result<Cloud> {
    if n_atoms == 0 {
        return Err(Error::InvalidArgument("atom count must be positive".into()));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "cloud width must be positive and finite, got {sigma}"
        )));
    }
    if min_separation < 0.0 || min_separation >= sigma {
        return Err(Error::InvalidArgument(format!(
            "min_separation {min_separation} must lie in [0, sigma)"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut positions: Vec<[f64; 3]> = Vec::with_capacity(n_atoms);
    // Collisions are rare at sane densities; the budget only trips when the
    // caller asks for an essentially close-packed configuration.
    let max_attempts = 1000usize.saturating_mul(n_atoms).max(10_000);
    let mut attempts = 0usize;
    while positions.len() < n_atoms {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::Generation(format!(
                "could not place {n_atoms} atoms with min separation {min_separation:.3e} \
                 at sigma {sigma:.3e} within {max_attempts} draws"
            )));
        }
        let p = [
            sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng),
            sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng),
            sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng),
        ];
        let ok = positions.iter().all(|q| distance(*q, p) >= min_separation);
        if ok {
            positions.push(p);
        }
    }
    Ok(Cloud { positions, sigma, seed })
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Scaled separation and dipole angle for one atom pair at wavenumber `k`,
/// with dipole orientation `dipole` (need not be normalized).
pub fn pair_geometry(ri: [f64; 3], rj: [f64; 3], k: f64, dipole: [f64; 3]) -> PairGeometry {
    let d = [ri[0] - rj[0], ri[1] - rj[1], ri[2] - rj[2]];
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let nd = (dipole[0] * dipole[0] + dipole[1] * dipole[1] + dipole[2] * dipole[2]).sqrt();
    if r == 0.0 {
        // Degenerate pair; callers guard against this via min_separation.
        return PairGeometry { xi: 0.0, phi: 0.0 };
    }
    let cos_phi = ((d[0] * dipole[0] + d[1] * dipole[1] + d[2] * dipole[2]) / (r * nd))
        .abs()
        .clamp(0.0, 1.0);
    PairGeometry { xi: k * r, phi: cos_phi.acos() }
}

impl Cloud {
    /// Serialize to a plain whitespace table: a comment header with the
    /// metadata, then one `x y z` row per atom. Floats are written in
    /// shortest round-trip form, so load(save(c)) == c exactly.
    pub fn to_table_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# cloud n={} sigma={} seed={}\n",
            self.positions.len(),
            self.sigma,
            self.seed
        ));
        for p in &self.positions {
            out.push_str(&format!("{} {} {}\n", p[0], p[1], p[2]));
        }
        out
    }

    /// Parse the format written by [`Cloud::to_table_string`].
    pub fn from_table_str(text: &str) -> Result<Cloud> {
        let mut sigma = None;
        let mut seed = None;
        let mut n_declared = None;
        let mut positions = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                for tok in rest.split_whitespace() {
                    if let Some(v) = tok.strip_prefix("sigma=") {
                        sigma = Some(v.parse::<f64>().map_err(|e| {
                            Error::InvalidArgument(format!("bad sigma in cloud table: {e}"))
                        })?);
                    } else if let Some(v) = tok.strip_prefix("seed=") {
                        seed = Some(v.parse::<u64>().map_err(|e| {
                            Error::InvalidArgument(format!("bad seed in cloud table: {e}"))
                        })?);
                    } else if let Some(v) = tok.strip_prefix("n=") {
                        n_declared = Some(v.parse::<usize>().map_err(|e| {
                            Error::InvalidArgument(format!("bad atom count in cloud table: {e}"))
                        })?);
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::InvalidArgument(format!(
                    "cloud table line {}: expected 3 coordinates, got {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let mut p = [0.0; 3];
            for (slot, f) in p.iter_mut().zip(&fields) {
                *slot = f.parse::<f64>().map_err(|e| {
                    Error::InvalidArgument(format!("cloud table line {}: {e}", lineno + 1))
                })?;
            }
            positions.push(p);
        }
        if let Some(n) = n_declared {
            if n != positions.len() {
                return Err(Error::InvalidArgument(format!(
                    "cloud table declares {n} atoms but contains {}",
                    positions.len()
                )));
            }
        }
        Ok(Cloud {
            positions,
            sigma: sigma
                .ok_or_else(|| Error::InvalidArgument("cloud table missing sigma".into()))?,
            seed: seed.unwrap_or(0),
        })
    }
}
