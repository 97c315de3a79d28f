//! Small dense linear algebra: standardization and least squares.

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

/// Diagonal jitter added to singular normal equations (relative to a unit
/// diagonal).
pub const RIDGE_JITTER: f64 = 1e-8;

/// Column-wise z-scoring fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    /// Standard deviations; constant columns get 1.
    pub scales: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Self {
        let n = x.n_rows() as f64;
        let p = x.n_cols();
        let mut means = vec![0.0; p];
        for row in x.rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0.0; p];
        for row in x.rows() {
            for j in 0..p {
                let d = row[j] - means[j];
                vars[j] += d * d;
            }
        }
        let scales = vars
            .iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { means, scales }
    }

    pub fn transform_row(&self, row: &[f64], out: &mut [f64]) {
        for j in 0..row.len() {
            out[j] = (row[j] - self.means[j]) / self.scales[j];
        }
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.n_rows(), x.n_cols());
        let mut buf = vec![0.0; x.n_cols()];
        for i in 0..x.n_rows() {
            self.transform_row(x.row(i), &mut buf);
            for (j, v) in buf.iter().enumerate() {
                out.set(i, j, *v);
            }
        }
        out
    }
}

/// Solve `a x = b` for symmetric positive definite `a` (row-major n×n) by
/// Cholesky. Fails when a pivot is not clearly positive.
pub fn cholesky_solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                let scale = a[i * n + i].abs().max(1e-300);
                if !(s > 1e-12 * scale) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Cholesky solve that adds diagonal jitter (growing tenfold) until the
/// system becomes solvable.
pub fn solve_spd_jittered(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    if let Some(x) = cholesky_solve(a, b, n) {
        return x;
    }
    let diag_mean = (0..n).map(|i| a[i * n + i].abs()).sum::<f64>() / n.max(1) as f64;
    let mut jitter = RIDGE_JITTER * diag_mean.max(1e-12);
    let mut work = a.to_vec();
    for _ in 0..30 {
        for i in 0..n {
            work[i * n + i] = a[i * n + i] + jitter;
        }
        if let Some(x) = cholesky_solve(&work, b, n) {
            return x;
        }
        jitter *= 10.0;
    }
    vec![0.0; n]
}

/// Fitted linear predictor `intercept + coef · x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub coef: Vec<f64>,
}

impl LinearFit {
    #[inline]
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(row).map(|(c, v)| c * v).sum::<f64>()
    }
}

/// Ordinary least squares with intercept. Columns are standardized
/// internally; singular systems fall back to ridge jitter.
pub fn ols(x: &Matrix, y: &[f64]) -> LinearFit {
    let n = x.n_rows();
    let p = x.n_cols();
    let st = Standardizer::fit(x);
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let mut a = vec![0.0; p * p];
    let mut b = vec![0.0; p];
    let mut z = vec![0.0; p];
    for i in 0..n {
        st.transform_row(x.row(i), &mut z);
        let yc = y[i] - y_mean;
        for j in 0..p {
            b[j] += z[j] * yc;
            for k in 0..=j {
                a[j * p + k] += z[j] * z[k];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            a[k * p + j] = a[j * p + k];
        }
    }
    let inv_n = 1.0 / n as f64;
    a.iter_mut().for_each(|v| *v *= inv_n);
    b.iter_mut().for_each(|v| *v *= inv_n);
    let beta = solve_spd_jittered(&a, &b, p);
    let coef: Vec<f64> = beta.iter().zip(&st.scales).map(|(b, s)| b / s).collect();
    let intercept = y_mean - coef.iter().zip(&st.means).map(|(c, m)| c * m).sum::<f64>();
    LinearFit { intercept, coef }
}

/// In-sample coefficient of determination of an OLS fit of `y` on `x`.
pub fn ols_r_squared(x: &Matrix, y: &[f64]) -> f64 {
    let fit = ols(x, y);
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let e = yi - fit.predict_row(x.row(i));
        ss_res += e * e;
        ss_tot += (yi - mean) * (yi - mean);
    }
    if ss_tot == 0.0 {
        return 0.0;
    }
    (1.0 - ss_res / ss_tot).clamp(f64::NEG_INFINITY, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_recovers_exact_linear_relation() {
        let x = Matrix::from_rows(&(0..20).map(|i| vec![i as f64, (i * i % 7) as f64]).collect::<Vec<_>>()).unwrap();
        let y: Vec<f64> = (0..20).map(|i| 3.0 + 2.0 * i as f64 - 0.5 * (i * i % 7) as f64).collect();
        let fit = ols(&x, &y);
        assert!((fit.intercept - 3.0).abs() < 1e-9);
        assert!((fit.coef[0] - 2.0).abs() < 1e-9);
        assert!((fit.coef[1] + 0.5).abs() < 1e-9);
        assert!((ols_r_squared(&x, &y) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_design_is_not_fatal() {
        // third column duplicates the first
        let x = Matrix::from_rows(&(0..10).map(|i| vec![i as f64, (i % 3) as f64, i as f64]).collect::<Vec<_>>()).unwrap();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let fit = ols(&x, &y);
        assert!(fit.coef.iter().all(|c| c.is_finite()));
        for i in 0..10 {
            assert!((fit.predict_row(x.row(i)) - y[i]).abs() < 1e-5);
        }
    }

    #[test]
    fn standardizer_uses_unit_scale_for_constants() {
        let x = Matrix::from_rows(&[vec![1.0, 5.0], vec![3.0, 5.0]]).unwrap();
        let s = Standardizer::fit(&x);
        assert_eq!(s.means, vec![2.0, 5.0]);
        assert_eq!(s.scales, vec![1.0, 1.0]);
        assert_eq!(s.transform(&x).row(0), &[-1.0, 0.0]);
    }
}
