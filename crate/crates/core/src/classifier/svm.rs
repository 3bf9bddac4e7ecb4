use serde::{Deserialize, Serialize};

use super::{check_binary_labels, KernelSpec};
use crate::error::{FlameError, Result};
use crate::numerics::{check_dim, common_dim};

/// Stop when the maximal KKT violation drops below this.
pub const SMO_TOLERANCE: f64 = 1e-5;
pub const SMO_MAX_UPDATES: usize = 1_000_000;
/// Multipliers at or below this are treated as zero.
pub const SUPPORT_TOLERANCE: f64 = 1e-8;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub kernel: KernelSpec,
    pub tolerance: f64,
    pub max_updates: usize,
    /// Recorded for provenance; SMO with maximal-violating-pair selection is
    /// deterministic without it.
    pub seed: u64,
}

impl SvmParams {
    pub fn new(c: f64, kernel: KernelSpec) -> Self {
        SvmParams {
            c,
            kernel,
            tolerance: SMO_TOLERANCE,
            max_updates: SMO_MAX_UPDATES,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(FlameError::config("c", "must be a positive finite number"));
        }
        if !(self.tolerance > 0.0) {
            return Err(FlameError::config("tolerance", "must be positive"));
        }
        self.kernel.validate()
    }
}

/// Dual solution of the soft-margin SVM, restricted to its support vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// `±1` per support vector.
    pub support_labels: Vec<f64>,
    /// Multipliers in `(0, C]`.
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub kernel: KernelSpec,
    /// Training indices with `α > SUPPORT_TOLERANCE`, ascending.
    pub support_indices: Vec<usize>,
    pub training_dim: usize,
    pub training_size: usize,
    pub iterations: usize,
    pub final_violation: f64,
}

impl SvmModel {
    /// `Σ α_i y_i k(x_i, x) + b`.
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.training_dim, x.len())?;
        Ok(self.decision_unchecked(x))
    }

    pub(crate) fn decision_unchecked(&self, x: &[f64]) -> f64 {
        let mut sum = 0.0;
        for ((sv, y), a) in self
            .support_vectors
            .iter()
            .zip(&self.support_labels)
            .zip(&self.alphas)
        {
            sum += a * y * self.kernel.apply(sv, x);
        }
        sum + self.bias
    }

    pub fn decision_batch<P: AsRef<[f64]> + Sync>(&self, xs: &[P]) -> Result<Vec<f64>> {
        use rayon::prelude::*;
        for x in xs {
            check_dim(self.training_dim, x.as_ref().len())?;
        }
        Ok(xs
            .par_iter()
            .map(|x| self.decision_unchecked(x.as_ref()))
            .collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<bool> {
        Ok(self.decision(x)? > 0.0)
    }

    /// Multipliers over the whole training set (zero off the support).
    pub fn full_alphas(&self) -> Vec<f64> {
        let mut alphas = vec![0.0; self.training_size];
        for (&i, &a) in self.support_indices.iter().zip(&self.alphas) {
            alphas[i] = a;
        }
        alphas
    }

    /// `w = Σ α_i y_i x_i` for linear kernels.
    pub fn linear_weights(&self) -> Option<Vec<f64>> {
        if self.kernel != KernelSpec::Linear {
            return None;
        }
        let mut w = vec![0.0; self.training_dim];
        for ((sv, y), a) in self
            .support_vectors
            .iter()
            .zip(&self.support_labels)
            .zip(&self.alphas)
        {
            for (wk, xk) in w.iter_mut().zip(sv) {
                *wk += a * y * xk;
            }
        }
        Some(w)
    }

    /// `Σ α_i y_i` over stored support vectors.
    pub fn dual_equality_residual(&self) -> f64 {
        self.alphas
            .iter()
            .zip(&self.support_labels)
            .map(|(a, y)| a * y)
            .sum()
    }
}

/// SMO working state for `min ½ αᵀQα − eᵀα` s.t. `yᵀα = 0`, `0 ≤ α ≤ C`.
struct Smo<'a> {
    y: Vec<f64>,
    q: Vec<f64>,
    n: usize,
    c: f64,
    alpha: Vec<f64>,
    gradient: Vec<f64>,
    params: &'a SvmParams,
}

impl<'a> Smo<'a> {
    fn new(inputs: &[Vec<f64>], y: Vec<f64>, params: &'a SvmParams) -> Self {
        let n = inputs.len();
        let mut q = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = y[i] * y[j] * params.kernel.apply(&inputs[i], &inputs[j]);
                q[i * n + j] = v;
                q[j * n + i] = v;
            }
        }
        Smo {
            y,
            q,
            n,
            c: params.c,
            alpha: vec![0.0; n],
            gradient: vec![-1.0; n],
            params,
        }
    }

    fn in_up(&self, t: usize) -> bool {
        (self.y[t] > 0.0 && self.alpha[t] < self.c) || (self.y[t] < 0.0 && self.alpha[t] > 0.0)
    }

    fn in_low(&self, t: usize) -> bool {
        (self.y[t] > 0.0 && self.alpha[t] > 0.0) || (self.y[t] < 0.0 && self.alpha[t] < self.c)
    }

    /// Maximal violating pair and its violation `m(α) − M(α)`.
    fn select_pair(&self) -> (usize, usize, f64) {
        let (mut gmax, mut i) = (f64::NEG_INFINITY, usize::MAX);
        let (mut gmin, mut j) = (f64::INFINITY, usize::MAX);
        for t in 0..self.n {
            let v = -self.y[t] * self.gradient[t];
            if self.in_up(t) && v > gmax {
                gmax = v;
                i = t;
            }
            if self.in_low(t) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        (i, j, gmax - gmin)
    }

    fn dual_objective(&self) -> f64 {
        // f(α) = ½ αᵀQα − eᵀα = ½ αᵀ(G + e) − eᵀα
        let f: f64 = self
            .alpha
            .iter()
            .zip(&self.gradient)
            .map(|(a, g)| 0.5 * a * (g + 1.0) - a)
            .sum();
        -f
    }

    fn update_pair(&mut self, i: usize, j: usize) {
        let n = self.n;
        let (c_i, c_j) = (self.c, self.c);
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let (q_ii, q_jj, q_ij) = (self.q[i * n + i], self.q[j * n + j], self.q[i * n + j]);
        let (mut a_i, mut a_j) = (old_i, old_j);
        let (g_i, g_j) = (self.gradient[i], self.gradient[j]);

        if self.y[i] != self.y[j] {
            let quad = (q_ii + q_jj + 2.0 * q_ij).max(TAU);
            let delta = (-g_i - g_j) / quad;
            let diff = a_i - a_j;
            a_i += delta;
            a_j += delta;
            if diff > 0.0 {
                if a_j < 0.0 {
                    a_j = 0.0;
                    a_i = diff;
                }
            } else if a_i < 0.0 {
                a_i = 0.0;
                a_j = -diff;
            }
            if diff > c_i - c_j {
                if a_i > c_i {
                    a_i = c_i;
                    a_j = c_i - diff;
                }
            } else if a_j > c_j {
                a_j = c_j;
                a_i = c_j + diff;
            }
        } else {
            let quad = (q_ii + q_jj - 2.0 * q_ij).max(TAU);
            let delta = (g_i - g_j) / quad;
            let sum = a_i + a_j;
            a_i -= delta;
            a_j += delta;
            if sum > c_i {
                if a_i > c_i {
                    a_i = c_i;
                    a_j = sum - c_i;
                }
            } else if a_j < 0.0 {
                a_j = 0.0;
                a_i = sum;
            }
            if sum > c_j {
                if a_j > c_j {
                    a_j = c_j;
                    a_i = sum - c_j;
                }
            } else if a_i < 0.0 {
                a_i = 0.0;
                a_j = sum;
            }
        }

        self.alpha[i] = a_i;
        self.alpha[j] = a_j;
        let (d_i, d_j) = (a_i - old_i, a_j - old_j);
        for t in 0..n {
            self.gradient[t] += self.q[t * n + i] * d_i + self.q[t * n + j] * d_j;
        }
    }

    /// Bias from the free multipliers, or the midpoint of the feasible
    /// interval when every multiplier sits at a bound.
    fn bias(&self) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free, mut sum_free) = (0usize, 0.0);
        for t in 0..self.n {
            let yg = self.y[t] * self.gradient[t];
            if self.alpha[t] >= self.c {
                if self.y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if self.alpha[t] <= SUPPORT_TOLERANCE {
                if self.y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum_free += yg;
            }
        }
        let rho = if free > 0 {
            sum_free / free as f64
        } else {
            0.5 * (ub + lb)
        };
        -rho
    }

    fn solve(&mut self, mut trace: Option<&mut Vec<f64>>) -> Result<(usize, f64)> {
        let mut updates = 0;
        if let Some(t) = trace.as_deref_mut() {
            t.push(self.dual_objective());
        }
        loop {
            let (i, j, violation) = self.select_pair();
            if i == usize::MAX || j == usize::MAX || violation < self.params.tolerance {
                return Ok((updates, violation.max(0.0)));
            }
            if updates >= self.params.max_updates {
                return Err(FlameError::Convergence {
                    iterations: updates,
                    violation,
                });
            }
            self.update_pair(i, j);
            updates += 1;
            if let Some(t) = trace.as_deref_mut() {
                t.push(self.dual_objective());
            }
        }
    }
}

fn fit(
    inputs: &[Vec<f64>],
    labels: &[bool],
    params: &SvmParams,
    trace: Option<&mut Vec<f64>>,
) -> Result<SvmModel> {
    params.validate()?;
    if inputs.len() != labels.len() {
        return Err(FlameError::Dimension {
            expected: inputs.len(),
            found: labels.len(),
        });
    }
    let dim = common_dim(inputs)?;
    check_binary_labels(labels)?;
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();

    let mut smo = Smo::new(inputs, y, params);
    let (iterations, final_violation) = smo.solve(trace)?;
    let bias = smo.bias();

    let support_indices: Vec<usize> = (0..inputs.len())
        .filter(|&i| smo.alpha[i] > SUPPORT_TOLERANCE)
        .collect();
    Ok(SvmModel {
        support_vectors: support_indices.iter().map(|&i| inputs[i].clone()).collect(),
        support_labels: support_indices.iter().map(|&i| smo.y[i]).collect(),
        alphas: support_indices.iter().map(|&i| smo.alpha[i]).collect(),
        bias,
        c: params.c,
        kernel: params.kernel,
        support_indices,
        training_dim: dim,
        training_size: inputs.len(),
        iterations,
        final_violation,
    })
}

/// Trains a soft-margin SVM by SMO with maximal-violating-pair selection.
pub fn train_svm(inputs: &[Vec<f64>], labels: &[bool], params: &SvmParams) -> Result<SvmModel> {
    fit(inputs, labels, params, None)
}

/// As [`train_svm`], also returning the dual objective after every pair update.
pub fn train_svm_traced(
    inputs: &[Vec<f64>],
    labels: &[bool],
    params: &SvmParams,
) -> Result<(SvmModel, Vec<f64>)> {
    let mut trace = Vec::new();
    let model = fit(inputs, labels, params, Some(&mut trace))?;
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> SvmModel {
        let x = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        train_svm(
            &x,
            &[true, false],
            &SvmParams::new(10.0, KernelSpec::Linear),
        )
        .unwrap()
    }

    #[test]
    fn two_point_hard_margin() {
        let m = two_point();
        assert_eq!(m.alphas, vec![0.5, 0.5]);
        assert_eq!(m.linear_weights().unwrap(), vec![1.0, 0.0]);
        assert_eq!(m.bias, 0.0);
        assert_eq!(m.support_indices, vec![0, 1]);
        assert_eq!(m.decision(&[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(m.decision(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn xor_is_separated_by_rbf() {
        let x = vec![
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
        ];
        let y = [true, true, false, false];
        let m = train_svm(
            &x,
            &y,
            &SvmParams::new(10.0, KernelSpec::Rbf { gamma: 1.0 }),
        )
        .unwrap();
        for (xi, &yi) in x.iter().zip(&y) {
            assert_eq!(m.predict(xi).unwrap(), yi);
        }
    }

    #[test]
    fn rejects_single_class_and_bad_params() {
        let x = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            train_svm(&x, &[true, true], &SvmParams::new(1.0, KernelSpec::Linear)),
            Err(FlameError::SingleClass { .. })
        ));
        assert!(train_svm(&x, &[true, false], &SvmParams::new(0.0, KernelSpec::Linear)).is_err());
        assert!(train_svm(
            &x,
            &[true, false],
            &SvmParams::new(1.0, KernelSpec::Rbf { gamma: -1.0 })
        )
        .is_err());
    }

    #[test]
    fn update_budget_exhaustion_reports_violation() {
        let x: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i as f64).sin(), (i as f64 * 0.7).cos()])
            .collect();
        let y: Vec<bool> = (0..20).map(|i| i % 3 == 0).collect();
        let params = SvmParams {
            max_updates: 2,
            ..SvmParams::new(1.0, KernelSpec::Rbf { gamma: 1.0 })
        };
        match train_svm(&x, &y, &params) {
            Err(FlameError::Convergence {
                iterations,
                violation,
            }) => {
                assert_eq!(iterations, 2);
                assert!(violation > 0.0);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn dimension_checked_at_prediction() {
        assert!(matches!(
            two_point().decision(&[1.0]),
            Err(FlameError::Dimension { .. })
        ));
    }
}
