//! Reference computations for tests.
//!
//! Everything here is written directly from the textbook definition, with no
//! shared code and no numerical libraries, so that it can serve as an
//! independent check on the optimized implementations.

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian KDE at `s` as an explicit average of normal densities.
pub fn brute_density(samples: &[Vec<f64>], h: f64, s: &[f64]) -> f64 {
    let l = s.len() as f64;
    let norm = (2.0 * std::f64::consts::PI * h * h).powf(-l / 2.0);
    let mut total = 0.0;
    for x in samples {
        let d2: f64 = x.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum();
        total += norm * (-d2 / (2.0 * h * h)).exp();
    }
    total / samples.len() as f64
}

pub fn mean(x: &[Vec<f64>]) -> Vec<f64> {
    let d = x[0].len();
    (0..d)
        .map(|k| x.iter().map(|r| r[k]).sum::<f64>() / x.len() as f64)
        .collect()
}

/// Sample covariance with the `n − 1` denominator.
pub fn covariance(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, d) = (x.len(), x[0].len());
    let m = mean(x);
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    x.iter().map(|r| (r[i] - m[i]) * (r[j] - m[j])).sum::<f64>() / (n - 1) as f64
                })
                .collect()
        })
        .collect()
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns eigenvalues in descending order with their unit eigenvectors.
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect())
        .collect();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (row_p, row_q) = (a[p].clone(), a[q].clone());
                for k in 0..n {
                    a[p][k] = c * row_p[k] - s * row_q[k];
                    a[q][k] = s * row_p[k] + c * row_q[k];
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&j| (0..n).map(|i| v[i][j]).collect())
        .collect();
    (values, vectors)
}

/// Euclidean projection onto `{0 ≤ α ≤ C, yᵀα = 0}` by bisection on the
/// multiplier of the equality constraint.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let eval = |lambda: f64| -> (Vec<f64>, f64) {
        let a: Vec<f64> = v
            .iter()
            .zip(y)
            .map(|(vi, yi)| (vi - lambda * yi).clamp(0.0, c))
            .collect();
        let s = dot(&a, y);
        (a, s)
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    while eval(lo).1 < 0.0 {
        lo *= 2.0;
    }
    while eval(hi).1 > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if eval(mid).1 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    eval(0.5 * (lo + hi)).0
}

/// Multipliers of the linear-kernel SVM dual from accelerated projected
/// gradient on the dense problem, run until the iterates move less than 1e-9.
pub fn linear_svm_dual(x: &[Vec<f64>], y: &[f64], c: f64) -> Vec<f64> {
    let n = x.len();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * dot(&x[i], &x[j])).collect())
        .collect();
    let lipschitz: f64 = q.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    let step = 1.0 / lipschitz;
    let mut alpha = vec![0.0; n];
    let mut z = alpha.clone();
    let mut t = 1.0_f64;
    for _ in 0..2_000_000 {
        let grad: Vec<f64> = (0..n).map(|i| dot(&q[i], &z) - 1.0).collect();
        let v: Vec<f64> = z.iter().zip(&grad).map(|(zi, gi)| zi - step * gi).collect();
        let next = project(&v, y, c);
        let moved = next
            .iter()
            .zip(&alpha)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = next
            .iter()
            .zip(&alpha)
            .map(|(a, b)| a + (t - 1.0) / t_next * (a - b))
            .collect();
        alpha = next;
        t = t_next;
        if moved < 1e-9 {
            break;
        }
    }
    alpha
}

/// Hard-margin `(w, b)` on separable data: `w = Σ α_i y_i x_i` from
/// [`linear_svm_dual`], and `b` centring the two tight margins.
pub fn hard_margin_plane(x: &[Vec<f64>], y: &[f64], c: f64) -> (Vec<f64>, f64) {
    let alpha = linear_svm_dual(x, y, c);
    let mut w = vec![0.0; x[0].len()];
    for ((a, yi), xi) in alpha.iter().zip(y).zip(x) {
        for (wk, xk) in w.iter_mut().zip(xi) {
            *wk += a * yi * xk;
        }
    }
    let scores: Vec<f64> = x.iter().map(|xi| dot(&w, xi)).collect();
    let lowest_pos = scores
        .iter()
        .zip(y)
        .filter(|(_, &yi)| yi > 0.0)
        .map(|(s, _)| *s)
        .fold(f64::INFINITY, f64::min);
    let highest_neg = scores
        .iter()
        .zip(y)
        .filter(|(_, &yi)| yi < 0.0)
        .map(|(s, _)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    (w, -0.5 * (lowest_pos + highest_neg))
}

/// Average precision straight from its definition: rank by score (ties by
/// id), and average over positives the best precision at that rank or deeper.
pub fn definitional_ap(items: &[(String, f64, bool)]) -> f64 {
    let mut ranked = items.to_vec();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let positives = ranked.iter().filter(|i| i.2).count();
    let precision_at =
        |k: usize| ranked[..=k].iter().filter(|i| i.2).count() as f64 / (k + 1) as f64;
    let mut sum = 0.0;
    for k in 0..ranked.len() {
        if ranked[k].2 {
            sum += (k..ranked.len()).map(precision_at).fold(0.0, f64::max);
        }
    }
    sum / positives as f64
}

/// Central differences `(f(θ + h e_k) − f(θ − h e_k)) / 2h` for every `k`.
pub fn central_differences(f: impl Fn(&[f64]) -> f64, theta: &[f64], h: f64) -> Vec<f64> {
    (0..theta.len())
        .map(|k| {
            let mut plus = theta.to_vec();
            let mut minus = theta.to_vec();
            plus[k] += h;
            minus[k] -= h;
            (f(&plus) - f(&minus)) / (2.0 * h)
        })
        .collect()
}

/// Distance from `p` to the nearest segment joining two of `points`.
pub fn segment_residual(p: &[f64], points: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            let (xa, xb) = (&points[a], &points[b]);
            let ab: Vec<f64> = xb.iter().zip(xa).map(|(q, p)| q - p).collect();
            let ap: Vec<f64> = p.iter().zip(xa).map(|(q, p)| q - p).collect();
            let u = (dot(&ap, &ab) / dot(&ab, &ab)).clamp(0.0, 1.0);
            let r = ap
                .iter()
                .zip(&ab)
                .map(|(x, y)| (x - u * y).powi(2))
                .sum::<f64>()
                .sqrt();
            best = best.min(r);
        }
    }
    best
}
