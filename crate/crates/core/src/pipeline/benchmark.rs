use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::embedding_io::EmbeddingRecord;
use crate::error::{FlameError, Result};

/// Confuser similarities are uniform on `[SIM_LOW, SIM_LOW + SIM_WIDTH]`;
/// target similarities on the same interval shifted up by
/// `(1 − overlap) · SIM_WIDTH`.
const SIM_LOW: f64 = 0.15;
const SIM_WIDTH: f64 = 0.2;

/// Two Gaussian clusters (target and confuser) whose cosine similarities to a
/// query overlap by a tunable amount.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticBenchmarkSpec {
    pub dim: usize,
    pub pool_size: usize,
    pub positive_fraction: f64,
    /// Distance between the class centres in units of the cluster std.
    pub separation: f64,
    /// 0 = similarity ranges disjoint, 1 = identical similarity distributions.
    pub overlap: f64,
    pub seed: u64,
}

impl Default for SyntheticBenchmarkSpec {
    fn default() -> Self {
        SyntheticBenchmarkSpec {
            dim: 64,
            pool_size: 5000,
            positive_fraction: 0.3,
            separation: 4.0,
            overlap: 0.75,
            seed: 0,
        }
    }
}

impl SyntheticBenchmarkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 3 {
            return Err(FlameError::config("dim", "must be at least 3"));
        }
        if self.pool_size < 2 {
            return Err(FlameError::config("pool_size", "must be at least 2"));
        }
        if !(self.positive_fraction > 0.0 && self.positive_fraction < 1.0) {
            return Err(FlameError::config(
                "positive_fraction",
                "must lie in (0, 1)",
            ));
        }
        if !(self.separation >= 0.0 && self.separation.is_finite()) {
            return Err(FlameError::config(
                "separation",
                "must be a finite number >= 0",
            ));
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(FlameError::config("overlap", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBenchmark {
    /// Unit-norm records with ground truth; `true` marks the target class.
    pub pool: Vec<EmbeddingRecord>,
    /// Unit-norm query embedding.
    pub query: Vec<f64>,
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

fn remove_component(v: &mut [f64], unit: &[f64]) {
    let d: f64 = v.iter().zip(unit).map(|(a, b)| a * b).sum();
    for (a, b) in v.iter_mut().zip(unit) {
        *a -= d * b;
    }
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    for a in v.iter_mut() {
        *a /= n;
    }
}

/// Each record is `c·t + sqrt(1 − c²)·u` where `t` is the query, `c` the
/// drawn cosine similarity and `u` a unit direction orthogonal to `t` taken
/// from the record's class cluster.
pub fn generate_synthetic_benchmark(spec: &SyntheticBenchmarkSpec) -> Result<SyntheticBenchmark> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.dim;

    let mut query = gaussian(&mut rng, d);
    normalize(&mut query);
    let mut axis = gaussian(&mut rng, d);
    remove_component(&mut axis, &query);
    normalize(&mut axis);

    let positives = ((spec.pool_size as f64 * spec.positive_fraction).round() as usize)
        .clamp(1, spec.pool_size - 1);
    let mut labels: Vec<bool> = (0..spec.pool_size).map(|i| i < positives).collect();
    labels.shuffle(&mut rng);

    let shift = (1.0 - spec.overlap) * SIM_WIDTH;
    let half = 0.5 * spec.separation;
    let pool = labels
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            let sign = if label { 1.0 } else { -1.0 };
            let mut u = gaussian(&mut rng, d);
            for (a, b) in u.iter_mut().zip(&axis) {
                *a += sign * half * b;
            }
            remove_component(&mut u, &query);
            normalize(&mut u);
            let low = SIM_LOW + if label { shift } else { 0.0 };
            let c = rng.random_range(low..=low + SIM_WIDTH);
            let s = (1.0 - c * c).sqrt();
            let vector = query
                .iter()
                .zip(&u)
                .map(|(t, v)| (c * t + s * v) as f32)
                .collect();
            EmbeddingRecord::new(format!("p{i:05}"), vector).with_ground_truth(Some(label))
        })
        .collect();
    Ok(SyntheticBenchmark { pool, query })
}
