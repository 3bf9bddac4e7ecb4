use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Side of the probe grid used for two-dimensional data.
pub const GRID_SIDE: usize = 50;
/// Probe count for data of any other dimension.
pub const RANDOM_PROBES: usize = 2500;
/// Total inflation of the data bounding box (10% on each side).
pub const BOX_INFLATION: f64 = 0.2;

/// Probe points covering the data bounding box inflated by 20%: a 50×50 grid
/// for 2-D data, otherwise 2500 seeded uniform points.
pub fn probe_set(inputs: &[Vec<f64>], seed: u64) -> Vec<Vec<f64>> {
    let dim = inputs.first().map_or(0, |x| x.len());
    if dim == 0 {
        return Vec::new();
    }
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for x in inputs {
        for k in 0..dim {
            lo[k] = lo[k].min(x[k]);
            hi[k] = hi[k].max(x[k]);
        }
    }
    for k in 0..dim {
        let pad = 0.5 * BOX_INFLATION * (hi[k] - lo[k]).max(1e-12);
        lo[k] -= pad;
        hi[k] += pad;
    }

    if dim == 2 {
        let step = |k: usize, i: usize| lo[k] + (hi[k] - lo[k]) * i as f64 / (GRID_SIDE - 1) as f64;
        let mut grid = Vec::with_capacity(GRID_SIDE * GRID_SIDE);
        for i in 0..GRID_SIDE {
            for j in 0..GRID_SIDE {
                grid.push(vec![step(0, i), step(1, j)]);
            }
        }
        return grid;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..RANDOM_PROBES)
        .map(|_| {
            (0..dim)
                .map(|k| lo[k] + (hi[k] - lo[k]) * rng.random::<f64>())
                .collect()
        })
        .collect()
}

/// Fraction of paired scores with the same predicted label (`score > 0`).
pub fn sign_agreement(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 1.0;
    }
    let same = a
        .iter()
        .zip(b)
        .filter(|(x, y)| (**x > 0.0) == (**y > 0.0))
        .count();
    same as f64 / a.len() as f64
}
