//! Numeric kernels shared by the sampler and the classifiers.
//!
//! Everything here is a pure function of its inputs (plus an explicit seed
//! where randomness is involved), so results are reproducible bit-for-bit.

mod kde;
mod kmeans;
mod pca;

pub use kde::{scott_bandwidth, KdeModel};
pub use kmeans::{
    kmeans, nearest_to_centers, Clustering, KMEANS_MAX_ITERATIONS, KMEANS_SHIFT_TOLERANCE,
};
pub use pca::{fit_pca, PcaModel};

use serde::{Deserialize, Serialize};

use crate::error::{FlameError, Result};

/// A finite real vector of fixed dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(FlameError::DegenerateVector("vector has no entries".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FlameError::DegenerateVector(
                "vector contains NaN or Inf".into(),
            ));
        }
        Ok(Vector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = FlameError;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Vector::new(values)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Vec<f64> {
        v.0
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(FlameError::Dimension { expected, found });
    }
    Ok(())
}

/// Cosine of the angle between `x` and `t`, clamped to `[-1, 1]`.
pub fn cosine_similarity(x: &[f64], t: &[f64]) -> Result<f64> {
    check_dim(x.len(), t.len())?;
    let nx = norm(x);
    let nt = norm(t);
    if nx == 0.0 || nt == 0.0 {
        return Err(FlameError::DegenerateVector(
            "cosine similarity of a zero-norm vector".into(),
        ));
    }
    Ok((dot(x, t) / (nx * nt)).clamp(-1.0, 1.0))
}

/// Checks that a collection of points is non-empty and shares one dimension.
pub(crate) fn common_dim<P: AsRef<[f64]>>(points: &[P]) -> Result<usize> {
    let first = points.first().ok_or(FlameError::EmptyPool)?.as_ref().len();
    for p in points {
        check_dim(first, p.as_ref().len())?;
    }
    Ok(first)
}

#[cfg(test)]
mod tests {
    use super::*;
    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine_similarity(&[3.0, 4.0], &[4.0, 3.0]).unwrap() - 0.96).abs() < 1e-15);
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(
            cosine_similarity(&[1.0, 0.0], &[1.0, 0.0, 0.0]),
            Err(FlameError::Dimension {
                expected: 2,
                found: 3
            })
        ));
        assert!(matches!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(FlameError::DegenerateVector(_))
        ));
    }

    #[test]
    fn vector_rejects_non_finite() {
        assert!(Vector::new(vec![1.0, f64::NAN]).is_err());
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
        assert!(Vector::new(vec![]).is_err());
        let v = Vector::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(v.dim(), 2);
        assert!(serde_json::from_str::<Vector>("[]").is_err());
    }
}
