//! Single-hidden-layer perceptron with logistic hidden units, trained by
//! BFGS on a weight-decay-penalized loss.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::linear::sigmoid;
use super::Mode;
use crate::linalg::Standardizer;
use crate::matrix::Matrix;

const INIT_RANGE: f64 = 0.7;
const REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnParams {
    pub hidden_grid: Vec<usize>,
    pub decay_grid: Vec<f64>,
    pub folds: usize,
    pub max_iterations: usize,
}

impl Default for NnParams {
    fn default() -> Self {
        Self { hidden_grid: vec![1, 3, 5], decay_grid: vec![0.0, 0.1], folds: 5, max_iterations: 100 }
    }
}

/// Network weights: per hidden unit a bias and `p` input weights, then the
/// output bias and `hidden` output weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub standardizer: Standardizer,
    pub hidden: usize,
    pub decay: f64,
    pub weights: Vec<f64>,
    pub mode: Mode,
    /// Regression targets are trained as `(y - center) / scale`.
    pub y_center: f64,
    pub y_scale: f64,
}

struct Problem<'a> {
    z: &'a Matrix,
    y: &'a [f64],
    rows: &'a [usize],
    hidden: usize,
    decay: f64,
    mode: Mode,
}

fn forward(w: &[f64], row: &[f64], hidden: usize, act: &mut [f64]) -> f64 {
    let p = row.len();
    let stride = p + 1;
    let out_base = hidden * stride;
    let mut out = w[out_base];
    for h in 0..hidden {
        let base = h * stride;
        let mut s = w[base];
        for j in 0..p {
            s += w[base + 1 + j] * row[j];
        }
        act[h] = sigmoid(s);
        out += w[out_base + 1 + h] * act[h];
    }
    out
}

impl Problem<'_> {
    fn loss_grad(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        let p = self.z.n_cols();
        let stride = p + 1;
        let out_base = self.hidden * stride;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut act = vec![0.0; self.hidden];
        let mut loss = 0.0;
        for &r in self.rows {
            let row = self.z.row(r);
            let out = forward(w, row, self.hidden, &mut act);
            let t = self.y[r];
            let delta = match self.mode {
                Mode::Classification => {
                    let pr = sigmoid(out);
                    // log(1 + e^out) - t * out, computed stably
                    loss += out.max(0.0) + (-out.abs()).exp().ln_1p() - t * out;
                    pr - t
                }
                Mode::Regression => {
                    let e = out - t;
                    loss += 0.5 * e * e;
                    e
                }
            };
            grad[out_base] += delta;
            for h in 0..self.hidden {
                grad[out_base + 1 + h] += delta * act[h];
                let dh = delta * w[out_base + 1 + h] * act[h] * (1.0 - act[h]);
                let base = h * stride;
                grad[base] += dh;
                for j in 0..p {
                    grad[base + 1 + j] += dh * row[j];
                }
            }
        }
        if self.decay > 0.0 {
            for (g, &wi) in grad.iter_mut().zip(w) {
                *g += 2.0 * self.decay * wi;
            }
            loss += self.decay * w.iter().map(|v| v * v).sum::<f64>();
        }
        loss
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Quasi-Newton minimization with backtracking line search.
fn bfgs(problem: &Problem<'_>, mut x: Vec<f64>, max_iter: usize) -> Vec<f64> {
    let d = x.len();
    let mut h = vec![0.0; d * d];
    let reset = |h: &mut [f64]| {
        h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..d {
            h[i * d + i] = 1.0;
        }
    };
    reset(&mut h);
    let mut g = vec![0.0; d];
    let mut f = problem.loss_grad(&x, &mut g);
    let mut g_new = vec![0.0; d];
    let mut x_new = vec![0.0; d];
    let mut dir = vec![0.0; d];
    for _ in 0..max_iter {
        for i in 0..d {
            dir[i] = -dot(&h[i * d..(i + 1) * d], &g);
        }
        let mut slope = dot(&dir, &g);
        if slope >= 0.0 {
            reset(&mut h);
            dir.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi);
            slope = dot(&dir, &g);
        }
        if slope == 0.0 {
            break;
        }
        let mut step = 1.0;
        let mut f_new = f;
        let mut accepted = false;
        for _ in 0..40 {
            for i in 0..d {
                x_new[i] = x[i] + step * dir[i];
            }
            f_new = problem.loss_grad(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= f + 1e-4 * step * slope {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        let s: Vec<f64> = (0..d).map(|i| x_new[i] - x[i]).collect();
        let yv: Vec<f64> = (0..d).map(|i| g_new[i] - g[i]).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-10 {
            let hy: Vec<f64> = (0..d).map(|i| dot(&h[i * d..(i + 1) * d], &yv)).collect();
            let yhy = dot(&yv, &hy);
            let coef = (sy + yhy) / (sy * sy);
            for i in 0..d {
                for j in 0..d {
                    h[i * d + j] += coef * s[i] * s[j] - (hy[i] * s[j] + s[i] * hy[j]) / sy;
                }
            }
        }
        let converged = (f - f_new).abs() <= REL_TOL * (f.abs() + REL_TOL);
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        f = f_new;
        if converged {
            break;
        }
    }
    x
}

fn train<R: Rng + ?Sized>(
    z: &Matrix,
    y: &[f64],
    rows: &[usize],
    hidden: usize,
    decay: f64,
    mode: Mode,
    max_iter: usize,
    rng: &mut R,
) -> Vec<f64> {
    let n_weights = hidden * (z.n_cols() + 1) + hidden + 1;
    let init: Vec<f64> = (0..n_weights).map(|_| rng.random_range(-INIT_RANGE..INIT_RANGE)).collect();
    let problem = Problem { z, y, rows, hidden, decay, mode };
    bfgs(&problem, init, max_iter)
}

fn predict_z(w: &[f64], hidden: usize, mode: Mode, row: &[f64], act: &mut [f64]) -> f64 {
    let out = forward(w, row, hidden, act);
    match mode {
        Mode::Classification => sigmoid(out),
        Mode::Regression => out,
    }
}

impl Mlp {
    pub fn fit<R: Rng + ?Sized>(x: &Matrix, y: &[f64], mode: Mode, params: &NnParams, rng: &mut R) -> Self {
        let n = x.n_rows();
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
        let target: Vec<f64> = y.iter().map(|v| (v - y_center) / y_scale).collect();

        let mut grid = Vec::new();
        for &h in &params.hidden_grid {
            for &d in &params.decay_grid {
                grid.push((h.max(1), d));
            }
        }
        let mut chosen = grid.first().copied().unwrap_or((1, 0.0));
        let folds = params.folds.min(n);
        if grid.len() > 1 && folds >= 2 {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            let mut best = f64::INFINITY;
            let mut act = vec![0.0; grid.iter().map(|g| g.0).max().unwrap_or(1)];
            for &(h, d) in &grid {
                let mut loss = 0.0;
                for f in 0..folds {
                    let train_rows: Vec<usize> =
                        order.iter().enumerate().filter(|(i, _)| i % folds != f).map(|(_, &r)| r).collect();
                    let w = train(&z, &target, &train_rows, h, d, mode, params.max_iterations, rng);
                    for (_, &r) in order.iter().enumerate().filter(|(i, _)| i % folds == f) {
                        let e = predict_z(&w, h, mode, z.row(r), &mut act) - target[r];
                        loss += e * e;
                    }
                }
                if loss < best {
                    best = loss;
                    chosen = (h, d);
                }
            }
        }
        let rows: Vec<usize> = (0..n).collect();
        let weights = train(&z, &target, &rows, chosen.0, chosen.1, mode, params.max_iterations, rng);
        Self { standardizer, hidden: chosen.0, decay: chosen.1, weights, mode, y_center, y_scale }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut z = vec![0.0; row.len()];
        self.standardizer.transform_row(row, &mut z);
        let mut act = vec![0.0; self.hidden];
        let v = predict_z(&self.weights, self.hidden, self.mode, &z, &mut act);
        match self.mode {
            Mode::Classification => v,
            Mode::Regression => v * self.y_scale + self.y_center,
        }
    }
}
