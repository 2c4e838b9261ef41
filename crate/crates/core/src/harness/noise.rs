use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::certify::SourceConfig;
use crate::error::{Error, Result};
use crate::solvers::mat_vec;

/// Bookkeeping of one synthetic observation `b = b_dagger + tau rho`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoisySpec {
    pub noise_level: f64,
    pub tau: f64,
    pub seed: u64,
    /// Realized `||tau rho||_2`.
    pub delta: f64,
}

impl NoisySpec {
    /// `tau / (max b - min b)` recomputed from the clean data.
    pub fn recomputed_level(&self, b_clean: &[f64]) -> f64 {
        let spread = data_spread(b_clean);
        if spread == 0.0 {
            0.0
        } else {
            self.tau / spread
        }
    }
}

/// `max b - min b`.
pub fn data_spread(b: &[f64]) -> f64 {
    let (lo, hi) = b.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if b.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// iid standard normal vector from a ChaCha20 stream.
pub fn standard_normal(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Adds `tau rho` with `tau = noise_level (max b - min b)` to clean data.
pub fn add_noise(b_clean: &[f64], noise_level: f64, seed: u64) -> Result<(Vec<f64>, NoisySpec)> {
    if !(noise_level >= 0.0) || !noise_level.is_finite() {
        return Err(Error::Argument(format!("noise level {noise_level} must be >= 0")));
    }
    if b_clean.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let spread = data_spread(b_clean);
    if noise_level > 0.0 && spread == 0.0 {
        return Err(Error::ConstantData);
    }
    let tau = noise_level * spread;
    if tau == 0.0 {
        let spec = NoisySpec {
            noise_level,
            tau,
            seed,
            delta: 0.0,
        };
        return Ok((b_clean.to_vec(), spec));
    }
    let rho = standard_normal(b_clean.len(), seed);
    let b: Vec<f64> = b_clean.iter().zip(&rho).map(|(b, r)| b + tau * r).collect();
    let delta = tau * rho.iter().map(|r| r * r).sum::<f64>().sqrt();
    Ok((
        b,
        NoisySpec {
            noise_level,
            tau,
            seed,
            delta,
        },
    ))
}

/// `b = A x* + tau rho`.
pub fn make_noisy_observation(
    a: &DMatrix<f64>,
    source: &SourceConfig,
    noise_level: f64,
    seed: u64,
) -> Result<(Vec<f64>, NoisySpec)> {
    if a.ncols() != source.n() {
        return Err(Error::Dimension(format!(
            "matrix has {} columns, source has length {}",
            a.ncols(),
            source.n()
        )));
    }
    add_noise(&mat_vec(a, &source.to_dense()), noise_level, seed)
}

/// Perturbation of Euclidean norm exactly `delta` along a seeded Gaussian
/// direction.
pub fn scaled_perturbation(len: usize, delta: f64, seed: u64) -> Vec<f64> {
    let rho = standard_normal(len, seed);
    let norm = rho.iter().map(|r| r * r).sum::<f64>().sqrt();
    if norm == 0.0 {
        return vec![0.0; len];
    }
    rho.iter().map(|r| delta * r / norm).collect()
}
