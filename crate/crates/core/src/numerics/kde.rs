use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_dim, common_dim};
use crate::error::{FlameError, Result};

/// Isotropic Gaussian kernel density estimate over points in `R^ℓ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeModel {
    samples: Vec<Vec<f64>>,
    bandwidth: f64,
    dim: usize,
    /// `1 / (n (2π)^{ℓ/2} h^ℓ)`
    normalizer: f64,
}

impl KdeModel {
    pub fn fit(samples: Vec<Vec<f64>>, bandwidth: f64) -> Result<Self> {
        let dim = common_dim(&samples)?;
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(FlameError::config(
                "bandwidth",
                "must be a positive finite number",
            ));
        }
        if samples.iter().flatten().any(|v| !v.is_finite()) {
            return Err(FlameError::DegenerateVector(
                "KDE sample contains NaN or Inf".into(),
            ));
        }
        let n = samples.len() as f64;
        let normalizer = 1.0
            / (n * (2.0 * std::f64::consts::PI).powf(dim as f64 / 2.0)
                * bandwidth.powi(dim as i32));
        Ok(KdeModel {
            samples,
            bandwidth,
            dim,
            normalizer,
        })
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `f̂(s) = 1/(n (2π)^{ℓ/2} h^ℓ) Σ_i exp(−‖s − s_i‖² / 2h²)`.
    pub fn density(&self, s: &[f64]) -> Result<f64> {
        check_dim(self.dim, s.len())?;
        Ok(self.density_unchecked(s))
    }

    fn density_unchecked(&self, s: &[f64]) -> f64 {
        let inv_two_h2 = 1.0 / (2.0 * self.bandwidth * self.bandwidth);
        let mut sum = 0.0;
        for sample in &self.samples {
            let d2: f64 = sample.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum();
            sum += (-d2 * inv_two_h2).exp();
        }
        self.normalizer * sum
    }

    /// Densities at many query points. Each value is computed exactly as
    /// [`KdeModel::density`] would, so parallel evaluation is bit-identical.
    pub fn density_batch<P: AsRef<[f64]> + Sync>(&self, queries: &[P]) -> Result<Vec<f64>> {
        for q in queries {
            check_dim(self.dim, q.as_ref().len())?;
        }
        Ok(queries
            .par_iter()
            .map(|q| self.density_unchecked(q.as_ref()))
            .collect())
    }

    /// Density at every fitted sample.
    pub fn sample_densities(&self) -> Vec<f64> {
        self.samples
            .par_iter()
            .map(|s| self.density_unchecked(s))
            .collect()
    }

    /// Sample point of highest density, lowest index on ties.
    pub fn mode(&self) -> Result<(Vec<f64>, f64)> {
        let densities = self.sample_densities();
        let (idx, f_star) = argmax(&densities).ok_or(FlameError::EmptyPool)?;
        Ok((self.samples[idx].clone(), f_star))
    }
}

pub(crate) fn argmax(values: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best
}

/// Scott's rule: `n^{−1/(ℓ+4)} · σ`, where `σ` is the root mean per-axis sample
/// variance. Falls back to 1.0 for degenerate (zero-spread) data.
pub fn scott_bandwidth<P: AsRef<[f64]>>(points: &[P]) -> Result<f64> {
    let dim = common_dim(points)?;
    let n = points.len();
    if n < 2 {
        return Ok(1.0);
    }
    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p.as_ref()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = 0.0;
    for p in points {
        for (v, m) in p.as_ref().iter().zip(&mean) {
            var += (v - m) * (v - m);
        }
    }
    let sigma = (var / ((n - 1) as f64 * dim as f64)).sqrt();
    if sigma <= 0.0 || !sigma.is_finite() {
        return Ok(1.0);
    }
    Ok((n as f64).powf(-1.0 / (dim as f64 + 4.0)) * sigma)
}
