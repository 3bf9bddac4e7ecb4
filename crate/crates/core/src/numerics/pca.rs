use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_dim, common_dim, dot};
use crate::error::{FlameError, Result};

/// Rows per partial covariance block. Fixed so the reduction order (and thus the
/// floating-point result) does not depend on the number of threads.
const COVARIANCE_BLOCK: usize = 512;

/// Eigenvalues below this fraction of the largest one count as padding axes.
const RANK_TOLERANCE: f64 = 1e-12;

/// Principal axes of a centered sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `ℓ` rows of length `dim`, orthonormal.
    pub components: Vec<Vec<f64>>,
    /// Sample variance along each component, non-increasing.
    pub explained_variance: Vec<f64>,
    /// Trace of the sample covariance.
    pub total_variance: f64,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// `components · (x − mean)`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        Ok(self.components.iter().map(|c| dot(c, &centered)).collect())
    }

    pub fn project_all<P: AsRef<[f64]> + Sync>(&self, points: &[P]) -> Result<Vec<Vec<f64>>> {
        points
            .par_iter()
            .map(|p| self.project(p.as_ref()))
            .collect()
    }

    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        if self.total_variance <= 0.0 {
            return vec![0.0; self.explained_variance.len()];
        }
        self.explained_variance
            .iter()
            .map(|v| v / self.total_variance)
            .collect()
    }
}

fn column_mean<P: AsRef<[f64]>>(points: &[P], dim: usize) -> Vec<f64> {
    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p.as_ref()) {
            *m += v;
        }
    }
    let n = points.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// Unbiased sample covariance (denominator `n − 1`), upper triangle mirrored.
fn sample_covariance<P: AsRef<[f64]> + Sync>(points: &[P], mean: &[f64]) -> DMatrix<f64> {
    let dim = mean.len();
    let partials: Vec<Vec<f64>> = points
        .par_chunks(COVARIANCE_BLOCK)
        .map(|block| {
            let mut acc = vec![0.0; dim * dim];
            let mut centered = vec![0.0; dim];
            for p in block {
                for ((c, v), m) in centered.iter_mut().zip(p.as_ref()).zip(mean) {
                    *c = v - m;
                }
                for i in 0..dim {
                    let ci = centered[i];
                    let row = &mut acc[i * dim..(i + 1) * dim];
                    for j in i..dim {
                        row[j] += ci * centered[j];
                    }
                }
            }
            acc
        })
        .collect();

    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for partial in &partials {
        for i in 0..dim {
            for j in i..dim {
                cov[(i, j)] += partial[i * dim + j];
            }
        }
    }
    let denom = (points.len() - 1) as f64;
    for i in 0..dim {
        for j in i..dim {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

/// Fits the top-`n_components` principal axes by eigendecomposition of the
/// sample covariance.
///
/// Each axis is sign-normalized so its largest-magnitude entry is positive.
/// Axes beyond the numerical rank of the data are an orthonormal completion
/// with zero explained variance.
pub fn fit_pca<P: AsRef<[f64]> + Sync>(points: &[P], n_components: usize) -> Result<PcaModel> {
    let dim = common_dim(points)?;
    if points.len() < 2 {
        return Err(FlameError::InsufficientSamples {
            requested: 2,
            available: points.len(),
        });
    }
    let max_components = (points.len() - 1).min(dim);
    if n_components == 0 || n_components > max_components {
        return Err(FlameError::config(
            "pca_dim",
            format!(
                "must be in [1, {max_components}] for {} points of dimension {dim}",
                points.len()
            ),
        ));
    }

    let mean = column_mean(points, dim);
    let cov = sample_covariance(points, &mean);
    let total_variance = cov.trace();
    let eigen = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..dim).collect();
    // Stable sort keeps the solver's order among equal eigenvalues.
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));

    let largest = eigen.eigenvalues[order[0]].max(0.0);
    let mut components = Vec::with_capacity(n_components);
    let mut explained_variance = Vec::with_capacity(n_components);
    for &k in order.iter().take(n_components) {
        let mut axis: Vec<f64> = eigen.eigenvectors.column(k).iter().copied().collect();
        let pivot = axis
            .iter()
            .enumerate()
            .fold((0, 0.0_f64), |best, (i, v)| {
                if v.abs() > best.1 {
                    (i, v.abs())
                } else {
                    best
                }
            })
            .0;
        if axis[pivot] < 0.0 {
            axis.iter_mut().for_each(|v| *v = -*v);
        }
        let lambda = eigen.eigenvalues[k];
        let variance = if lambda <= RANK_TOLERANCE * largest {
            0.0
        } else {
            lambda
        };
        components.push(axis);
        explained_variance.push(variance);
    }

    Ok(PcaModel {
        mean,
        components,
        explained_variance,
        total_variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_data_has_one_axis() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        let model = fit_pca(&x, 1).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((model.components[0][0] - s).abs() < 1e-12);
        assert!((model.components[0][1] - s).abs() < 1e-12);
        assert!((model.explained_variance_ratio()[0] - 1.0).abs() < 1e-12);

        // Signed distance along the line from the mean (1, 1).
        let p = model.project(&[3.0, 3.0]).unwrap();
        assert!((p[0] - (3.0 * 2f64.sqrt() - 2f64.sqrt())).abs() < 1e-12);
        assert!(model.project(&model.mean.clone()).unwrap()[0].abs() < 1e-12);
    }

    #[test]
    fn symmetric_cross_splits_variance_evenly() {
        let x = vec![
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ];
        let model = fit_pca(&x, 2).unwrap();
        let ratio = model.explained_variance_ratio();
        assert!((ratio[0] - 0.5).abs() < 1e-12 && (ratio[1] - 0.5).abs() < 1e-12);
        assert!((model.explained_variance[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn padded_axes_have_zero_variance() {
        // Rank one in three dimensions, ask for two axes.
        let x: Vec<Vec<f64>> = (0..5)
            .map(|i| vec![i as f64, 2.0 * i as f64, 0.0])
            .collect();
        let model = fit_pca(&x, 2).unwrap();
        assert!(model.explained_variance[0] > 0.0);
        assert_eq!(model.explained_variance[1], 0.0);
        let d = dot(&model.components[0], &model.components[1]);
        assert!(d.abs() < 1e-10);
        // Padded coordinate is the centered dot product with the completion axis.
        let q = [1.0, -3.0, 4.0];
        let centered: Vec<f64> = q.iter().zip(&model.mean).map(|(a, m)| a - m).collect();
        let p = model.project(&q).unwrap();
        assert!((p[1] - dot(&model.components[1], &centered)).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range_dimension() {
        let x = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!(matches!(fit_pca(&x, 2), Err(FlameError::Config { .. })));
        assert!(matches!(fit_pca(&x, 0), Err(FlameError::Config { .. })));
        assert!(matches!(
            fit_pca(&x[..1], 1),
            Err(FlameError::InsufficientSamples { .. })
        ));
        let model = fit_pca(&x, 1).unwrap();
        assert!(matches!(
            model.project(&[1.0]),
            Err(FlameError::Dimension { .. })
        ));
    }

    #[test]
    fn sign_convention_makes_largest_entry_positive() {
        let x = vec![
            vec![0.0, 0.0],
            vec![-1.0, -3.0],
            vec![-2.0, -6.1],
            vec![1.0, 2.9],
        ];
        let model = fit_pca(&x, 1).unwrap();
        let c = &model.components[0];
        let pivot = if c[0].abs() > c[1].abs() { c[0] } else { c[1] };
        assert!(pivot > 0.0);
    }
}
