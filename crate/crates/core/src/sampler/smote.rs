use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::LabeledShot;
use crate::error::{FlameError, Result};
use crate::numerics::squared_distance;

/// Indices of the `k` nearest other members for every member (lowest index on ties).
fn neighbor_table(points: &[&[f64]], k: usize) -> Vec<Vec<usize>> {
    (0..points.len())
        .map(|a| {
            let mut others: Vec<(f64, usize)> = (0..points.len())
                .filter(|&b| b != a)
                .map(|b| (squared_distance(points[a], points[b]), b))
                .collect();
            others.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            others.into_iter().take(k).map(|(_, b)| b).collect()
        })
        .collect()
}

/// Label of the smaller class; positive wins a tie.
pub(crate) fn minority_label(labeled: &[LabeledShot]) -> Result<bool> {
    let positives = labeled.iter().filter(|s| s.label).count();
    let negatives = labeled.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(FlameError::SingleClass {
            present: if positives == 0 {
                "negative".into()
            } else {
                "positive".into()
            },
        });
    }
    Ok(positives <= negatives)
}

/// Synthesizes `target_count` minority-class samples.
///
/// Each sample is `x_a + u (x_b − x_a)` with `x_a` a uniformly drawn minority
/// member, `x_b` one of its `min(k_neighbors, m − 1)` nearest minority
/// neighbors and `u ~ U[0, 1)`. A lone minority sample is jittered with
/// isotropic Gaussian noise of standard deviation `jitter_sigma` instead.
pub fn smote(
    labeled: &[LabeledShot],
    k_neighbors: usize,
    target_count: usize,
    jitter_sigma: f64,
    seed: u64,
) -> Result<Vec<LabeledShot>> {
    if k_neighbors == 0 {
        return Err(FlameError::config("smote_neighbors", "must be positive"));
    }
    let minority = minority_label(labeled)?;
    let members: Vec<&[f64]> = labeled
        .iter()
        .filter(|s| s.label == minority)
        .map(|s| s.augmented.as_slice())
        .collect();
    let k_eff = k_neighbors.min(members.len() - 1);
    let neighbors = neighbor_table(&members, k_eff);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut out = Vec::with_capacity(target_count);
    for _ in 0..target_count {
        let a = rng.random_range(0..members.len());
        let xa = members[a];
        let x: Vec<f64> = if k_eff == 0 {
            xa.iter()
                .map(|v| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    v + jitter_sigma * z
                })
                .collect()
        } else {
            let xb = members[neighbors[a][rng.random_range(0..k_eff)]];
            let u: f64 = rng.random();
            xa.iter().zip(xb).map(|(p, q)| p + u * (q - p)).collect()
        };
        out.push(LabeledShot::synthetic(x, minority));
    }
    Ok(out)
}
