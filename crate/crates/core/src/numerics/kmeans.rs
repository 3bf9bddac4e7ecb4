use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{common_dim, squared_distance};
use crate::error::{FlameError, Result};

pub const KMEANS_MAX_ITERATIONS: usize = 300;
pub const KMEANS_SHIFT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub centers: Vec<Vec<f64>>,
    /// Cluster id of each input point.
    pub assignment: Vec<usize>,
    /// Sum of squared distances to the assigned centers.
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after every assignment step, ending with the final value.
    pub inertia_trace: Vec<f64>,
}

impl Clustering {
    pub fn k(&self) -> usize {
        self.centers.len()
    }
}

fn nearest_center(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centers.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

fn plus_plus_init<P: AsRef<[f64]>>(points: &[P], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..n)].as_ref().to_vec());
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p.as_ref(), &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            // Guard against round-off landing on a zero-weight tail.
            if d2[chosen] == 0.0 {
                chosen = d2.iter().rposition(|&w| w > 0.0).unwrap_or(chosen);
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = points[pick].as_ref().to_vec();
        for (w, p) in d2.iter_mut().zip(points) {
            *w = w.min(squared_distance(p.as_ref(), &c));
        }
        centers.push(c);
    }
    centers
}

/// Assigns every point to its nearest center and repairs empty clusters.
/// Returns the inertia of the resulting assignment.
fn assign<P: AsRef<[f64]>>(
    points: &[P],
    centers: &mut [Vec<f64>],
    assignment: &mut [usize],
) -> f64 {
    let k = centers.len();
    let mut dist = vec![0.0; points.len()];
    for (i, p) in points.iter().enumerate() {
        let (c, d) = nearest_center(p.as_ref(), centers);
        assignment[i] = c;
        dist[i] = d;
    }

    let mut counts = vec![0usize; k];
    for &a in assignment.iter() {
        counts[a] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        // Re-seed with the point farthest from its center among clusters that
        // can spare a member. Moving it onto a new center never raises inertia.
        let donor = (0..points.len())
            .filter(|&i| counts[assignment[i]] > 1)
            .fold(None::<usize>, |best, i| match best {
                Some(b) if dist[i] <= dist[b] => Some(b),
                _ => Some(i),
            })
            .expect("|X| >= K guarantees a cluster with at least two members");
        counts[assignment[donor]] -= 1;
        counts[empty] = 1;
        assignment[donor] = empty;
        dist[donor] = 0.0;
        centers[empty] = points[donor].as_ref().to_vec();
    }
    dist.iter().sum()
}

fn update_centers<P: AsRef<[f64]>>(
    points: &[P],
    assignment: &[usize],
    k: usize,
    dim: usize,
) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assignment) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(p.as_ref()) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        s.iter_mut().for_each(|v| *v /= c as f64);
    }
    sums
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// Stops when no center moves by more than [`KMEANS_SHIFT_TOLERANCE`] or after
/// [`KMEANS_MAX_ITERATIONS`] iterations. Every returned cluster is non-empty.
pub fn kmeans<P: AsRef<[f64]>>(points: &[P], k: usize, seed: u64) -> Result<Clustering> {
    if k == 0 {
        return Err(FlameError::config("k", "must be at least 1"));
    }
    if points.len() < k {
        return Err(FlameError::InsufficientSamples {
            requested: k,
            available: points.len(),
        });
    }
    let dim = common_dim(points)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus_init(points, k, &mut rng);
    let mut assignment = vec![0usize; points.len()];
    let mut inertia_trace = Vec::new();
    let mut iterations = 0;

    loop {
        inertia_trace.push(assign(points, &mut centers, &mut assignment));
        let next = update_centers(points, &assignment, k, dim);
        let shift = centers
            .iter()
            .zip(&next)
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .fold(0.0, f64::max);
        centers = next;
        iterations += 1;
        if shift < KMEANS_SHIFT_TOLERANCE || iterations >= KMEANS_MAX_ITERATIONS {
            break;
        }
    }
    let inertia = assign(points, &mut centers, &mut assignment);
    inertia_trace.push(inertia);

    Ok(Clustering {
        centers,
        assignment,
        inertia,
        iterations,
        inertia_trace,
    })
}

/// For each cluster, the index of its member closest to the center
/// (lowest index on ties).
pub fn nearest_to_centers<P: AsRef<[f64]>>(clustering: &Clustering, points: &[P]) -> Vec<usize> {
    let mut best: Vec<Option<(usize, f64)>> = vec![None; clustering.k()];
    for (i, (p, &a)) in points.iter().zip(&clustering.assignment).enumerate() {
        let d = squared_distance(p.as_ref(), &clustering.centers[a]);
        match best[a] {
            Some((_, bd)) if d >= bd => {}
            _ => best[a] = Some((i, d)),
        }
    }
    best.into_iter()
        .map(|b| b.expect("clusters are non-empty").0)
        .collect()
}
