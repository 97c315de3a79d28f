//! k-nearest-neighbour scoring on z-standardized features.

use serde::{Deserialize, Serialize};

use crate::linalg::Standardizer;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub standardizer: Standardizer,
    pub train: Matrix,
    pub targets: Vec<f64>,
}

impl Knn {
    pub fn fit(x: &Matrix, y: &[f64], k: usize) -> Self {
        let standardizer = Standardizer::fit(x);
        let train = standardizer.transform(x);
        Self { k: k.clamp(1, x.n_rows()), standardizer, train, targets: y.to_vec() }
    }

    /// Mean target of the `k` nearest training rows (vote fraction for 0/1
    /// labels). Distance ties are broken by training row order.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut z = vec![0.0; row.len()];
        self.standardizer.transform_row(row, &mut z);
        let mut dist: Vec<(f64, usize)> = self
            .train
            .rows()
            .enumerate()
            .map(|(i, t)| (t.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        let k = self.k;
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
        }
        dist[..k].iter().map(|&(_, i)| self.targets[i]).sum::<f64>() / k as f64
    }
}
