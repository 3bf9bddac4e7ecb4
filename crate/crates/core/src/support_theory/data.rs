//! Seeded two-dimensional datasets for the verification suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Inputs with boolean labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
}

/// Minimum distance of separable points from the generating hyperplane.
pub const SEPARABLE_GAP: f64 = 0.1;

/// Points uniform in `[-1, 1]²`, labeled by a random line and kept only when
/// at least `gap` away from it. Classes alternate, so both have `n / 2` points.
pub fn separable(seed: u64, n: usize, gap: f64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    let w = [angle.cos(), angle.sin()];
    let b = rng.random_range(-0.3..0.3);

    let mut inputs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    while inputs.len() < n {
        let want = inputs.len() % 2 == 0;
        let x = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let s = w[0] * x[0] + w[1] * x[1] + b;
        if s.abs() >= gap && (s > 0.0) == want {
            inputs.push(x);
            labels.push(want);
        }
    }
    Dataset { inputs, labels }
}

/// Two unit-variance Gaussians centred at `(±0.75, 0)`, alternating labels.
pub fn overlapping_gaussians(seed: u64, n: usize) -> Dataset {
    gaussian_pair(seed, n, [0.75, 0.0], 1.0)
}

/// Two tight blobs at `±(1.5, 1.5)`, symmetric about the origin so that a
/// bias-free classifier can separate them.
pub fn two_blobs(seed: u64, n: usize) -> Dataset {
    gaussian_pair(seed, n, [1.5, 1.5], 0.5)
}

fn gaussian_pair(seed: u64, n: usize, center: [f64; 2], std: f64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, std).expect("positive std");
    let mut inputs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2 == 0;
        let s = if label { 1.0 } else { -1.0 };
        inputs.push(vec![
            s * center[0] + noise.sample(&mut rng),
            s * center[1] + noise.sample(&mut rng),
        ]);
        labels.push(label);
    }
    Dataset { inputs, labels }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_respects_gap_and_balance() {
        let d = separable(7, 60, SEPARABLE_GAP);
        assert_eq!(d.inputs.len(), 60);
        assert_eq!(d.labels.iter().filter(|&&l| l).count(), 30);
        assert_eq!(d, separable(7, 60, SEPARABLE_GAP));
    }

    #[test]
    fn blobs_are_mirrored() {
        let d = two_blobs(1, 40);
        let pos: f64 = d
            .inputs
            .iter()
            .zip(&d.labels)
            .filter(|(_, &l)| l)
            .map(|(x, _)| x[0] + x[1])
            .sum();
        assert!(pos > 0.0);
    }
}
