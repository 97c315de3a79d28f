//! Logistic regression by iteratively reweighted least squares.

use crate::linalg::{solve_spd_jittered, LinearFit, Standardizer};
use crate::matrix::Matrix;

const MAX_ITER: usize = 25;
const TOLERANCE: f64 = 1e-8;
const PROB_FLOOR: f64 = 1e-10;

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn deviance(eta: &[f64], y: &[f64]) -> f64 {
    eta.iter()
        .zip(y)
        .map(|(&e, &t)| {
            let p = sigmoid(e).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
            -2.0 * (t * p.ln() + (1.0 - t) * (1.0 - p).ln())
        })
        .sum()
}

/// Fit `P(y=1) = sigmoid(intercept + coef · x)`. Separable data stop at the
/// iteration cap with large but finite coefficients.
pub fn logistic_irls(x: &Matrix, y: &[f64]) -> LinearFit {
    let n = x.n_rows();
    let p = x.n_cols();
    let d = p + 1;
    let st = Standardizer::fit(x);
    let z = st.transform(x);
    let mut beta = vec![0.0; d];
    let mut eta = vec![0.0; n];
    let mut dev = deviance(&eta, y);
    let mut a = vec![0.0; d * d];
    let mut b = vec![0.0; d];
    let mut design = vec![0.0; d];
    for _ in 0..MAX_ITER {
        a.iter_mut().for_each(|v| *v = 0.0);
        b.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            let mu = sigmoid(eta[i]).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
            let w = mu * (1.0 - mu);
            let work = eta[i] + (y[i] - mu) / w;
            design[0] = 1.0;
            design[1..].copy_from_slice(z.row(i));
            for j in 0..d {
                b[j] += w * design[j] * work;
                for k in 0..=j {
                    a[j * d + k] += w * design[j] * design[k];
                }
            }
        }
        for j in 0..d {
            for k in 0..j {
                a[k * d + j] = a[j * d + k];
            }
        }
        let scale = 1.0 / n as f64;
        a.iter_mut().for_each(|v| *v *= scale);
        b.iter_mut().for_each(|v| *v *= scale);
        let next = solve_spd_jittered(&a, &b, d);
        if next.iter().any(|v| !v.is_finite()) {
            break;
        }
        beta = next;
        for i in 0..n {
            eta[i] = beta[0] + beta[1..].iter().zip(z.row(i)).map(|(c, v)| c * v).sum::<f64>();
        }
        let new_dev = deviance(&eta, y);
        let converged = (new_dev - dev).abs() / (new_dev.abs() + 0.1) < TOLERANCE;
        dev = new_dev;
        if converged {
            break;
        }
    }
    let coef: Vec<f64> = beta[1..].iter().zip(&st.scales).map(|(c, s)| c / s).collect();
    let intercept = beta[0] - coef.iter().zip(&st.means).map(|(c, m)| c * m).sum::<f64>();
    LinearFit { intercept, coef }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(800.0) <= 1.0 && sigmoid(-800.0) >= 0.0);
        assert!(sigmoid(-800.0).is_finite());
    }

    #[test]
    fn recovers_known_coefficients_on_grouped_data() {
        // Binomial data with exact proportions sigmoid(-1 + 2x) at x in {0, 0.5, 1}.
        let props = [sigmoid(-1.0), sigmoid(0.0), sigmoid(1.0)];
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for (k, &pr) in props.iter().enumerate() {
            let x = k as f64 * 0.5;
            let pos = (pr * 10000.0).round() as usize;
            for i in 0..10000 {
                rows.push(vec![x]);
                y.push(if i < pos { 1.0 } else { 0.0 });
            }
        }
        let fit = logistic_irls(&Matrix::from_rows(&rows).unwrap(), &y);
        assert!((fit.intercept + 1.0).abs() < 1e-3, "{fit:?}");
        assert!((fit.coef[0] - 2.0).abs() < 1e-3, "{fit:?}");
    }
}
