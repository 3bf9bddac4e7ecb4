use serde::{Deserialize, Serialize};

use crate::error::{FlameError, Result};
use crate::numerics::{check_dim, dot, squared_distance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { gamma } if gamma > 0.0 && gamma.is_finite() => Ok(()),
            KernelSpec::Rbf { .. } => Err(FlameError::config(
                "kernel.gamma",
                "must be a positive finite number",
            )),
        }
    }

    /// Kernel value without a dimension check.
    #[inline]
    pub(crate) fn apply(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(x, y),
            KernelSpec::Rbf { gamma } => (-gamma * squared_distance(x, y)).exp(),
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(x.len(), y.len())?;
        Ok(self.apply(x, y))
    }
}

/// `1 / (dim · median pairwise squared distance)`; `1 / dim` when all inputs coincide.
pub fn default_gamma(inputs: &[Vec<f64>]) -> f64 {
    let dim = inputs.first().map_or(1, |x| x.len().max(1)) as f64;
    let mut d2 = Vec::with_capacity(inputs.len() * inputs.len().saturating_sub(1) / 2);
    for i in 0..inputs.len() {
        for j in (i + 1)..inputs.len() {
            d2.push(squared_distance(&inputs[i], &inputs[j]));
        }
    }
    if d2.is_empty() {
        return 1.0 / dim;
    }
    d2.sort_by(f64::total_cmp);
    let m = d2.len();
    let median = if m % 2 == 1 {
        d2[m / 2]
    } else {
        0.5 * (d2[m / 2 - 1] + d2[m / 2])
    };
    if median > 0.0 {
        1.0 / (dim * median)
    } else {
        1.0 / dim
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_examples() {
        let rbf = KernelSpec::Rbf { gamma: 1.0 };
        assert_eq!(rbf.eval(&[0.3, -2.0], &[0.3, -2.0]).unwrap(), 1.0);
        let x = [2f64.ln().sqrt(), 0.0];
        assert!((rbf.eval(&x, &[0.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(
            KernelSpec::Linear.eval(&[1.0, 2.0], &[3.0, 4.0]).unwrap(),
            11.0
        );
        assert!(matches!(
            KernelSpec::Linear.eval(&[1.0], &[1.0, 2.0]),
            Err(FlameError::Dimension { .. })
        ));
    }

    #[test]
    fn gamma_rule() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 2.0]];
        // squared distances 1, 4, 5 -> median 4
        assert!((default_gamma(&x) - 1.0 / 8.0).abs() < 1e-15);
        assert_eq!(default_gamma(&[vec![1.0, 1.0], vec![1.0, 1.0]]), 0.5);
        assert!(KernelSpec::Rbf { gamma: 0.0 }.validate().is_err());
    }
}
