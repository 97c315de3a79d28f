//! Linear support vector machines fit by full-batch subgradient descent.

use serde::{Deserialize, Serialize};

use super::linear::sigmoid;
use super::Mode;
use crate::linalg::Standardizer;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub cost: f64,
    /// Insensitivity width for regression, in units of the target's SD.
    pub epsilon: f64,
    pub iterations: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { cost: 1.0, epsilon: 0.1, iterations: 300 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub standardizer: Standardizer,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub mode: Mode,
    pub y_center: f64,
    pub y_scale: f64,
}

impl LinearSvm {
    /// Minimizes `λ/2 ‖w‖² + mean(loss)` with `λ = 1 / (n C)`, keeping the
    /// best iterate seen.
    pub fn fit(x: &Matrix, y: &[f64], mode: Mode, params: &SvmParams) -> Self {
        let n = x.n_rows();
        let p = x.n_cols();
        let standardizer = Standardizer::fit(x);
        let z = standardizer.transform(x);
        let (y_center, y_scale) = match mode {
            Mode::Classification => (0.0, 1.0),
            Mode::Regression => {
                let m = y.iter().sum::<f64>() / n as f64;
                let sd = (y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64).sqrt();
                (m, if sd > 0.0 { sd } else { 1.0 })
            }
        };
        // classification targets in {-1, +1}
        let t: Vec<f64> = match mode {
            Mode::Classification => y.iter().map(|&v| if v > 0.5 { 1.0 } else { -1.0 }).collect(),
            Mode::Regression => y.iter().map(|v| (v - y_center) / y_scale).collect(),
        };
        let lambda = 1.0 / (n as f64 * params.cost);
        let eps = params.epsilon;
        let objective = |w: &[f64], b: f64, grad: Option<(&mut [f64], &mut f64)>| -> f64 {
            let mut loss = 0.0;
            let mut gw = vec![0.0; p];
            let mut gb = 0.0;
            for i in 0..n {
                let row = z.row(i);
                let f = b + w.iter().zip(row).map(|(a, c)| a * c).sum::<f64>();
                let g = match mode {
                    Mode::Classification => {
                        let m = t[i] * f;
                        if m < 1.0 {
                            loss += 1.0 - m;
                            -t[i]
                        } else {
                            0.0
                        }
                    }
                    Mode::Regression => {
                        let r = f - t[i];
                        if r.abs() > eps {
                            loss += r.abs() - eps;
                            r.signum()
                        } else {
                            0.0
                        }
                    }
                };
                if g != 0.0 {
                    gb += g;
                    for j in 0..p {
                        gw[j] += g * row[j];
                    }
                }
            }
            let inv = 1.0 / n as f64;
            let reg = 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>();
            if let Some((out_w, out_b)) = grad {
                for j in 0..p {
                    out_w[j] = gw[j] * inv + lambda * w[j];
                }
                *out_b = gb * inv;
            }
            loss * inv + reg
        };

        let mut w = vec![0.0; p];
        let mut b = 0.0;
        let mut gw = vec![0.0; p];
        let mut gb = 0.0;
        let mut best = (f64::INFINITY, w.clone(), b);
        for it in 1..=params.iterations {
            let obj = objective(&w, b, Some((&mut gw, &mut gb)));
            if obj < best.0 {
                best = (obj, w.clone(), b);
            }
            let eta = 1.0 / (it as f64).sqrt();
            for j in 0..p {
                w[j] -= eta * gw[j];
            }
            b -= eta * gb;
        }
        let last = objective(&w, b, None);
        if last < best.0 {
            best = (last, w, b);
        }
        Self { standardizer, weights: best.1, bias: best.2, mode, y_center, y_scale }
    }

    pub fn decision_row(&self, row: &[f64]) -> f64 {
        let mut z = vec![0.0; row.len()];
        self.standardizer.transform_row(row, &mut z);
        self.bias + self.weights.iter().zip(&z).map(|(a, c)| a * c).sum::<f64>()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let f = self.decision_row(row);
        match self.mode {
            Mode::Classification => sigmoid(f),
            Mode::Regression => f * self.y_scale + self.y_center,
        }
    }
}
