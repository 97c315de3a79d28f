//! Bagged CART ensembles.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow, GrowParams, Presorted, Tree};
use super::Mode;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub mtry: usize,
    /// Nodes with at most this much (bootstrap) weight are not split.
    pub min_node_size: usize,
}

impl ForestParams {
    pub fn defaults(mode: Mode, n_features: usize) -> Self {
        match mode {
            Mode::Classification => Self {
                n_trees: 100,
                mtry: ((n_features as f64).sqrt().floor() as usize).max(1),
                min_node_size: 1,
            },
            Mode::Regression => Self { n_trees: 100, mtry: (n_features / 3).max(1), min_node_size: 5 },
        }
    }
}

/// A leaf's class-1 fraction as a vote; exact halves split the vote.
#[inline]
fn vote(v: f64) -> f64 {
    if v > 0.5 {
        1.0
    } else if v < 0.5 {
        0.0
    } else {
        0.5
    }
}

/// Prediction-only copy of a tree. Leaves point at themselves with an
/// infinite threshold, so every row can take exactly `depth` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatTree {
    nodes: Vec<FlatNode>,
    values: Vec<f64>,
    depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct FlatNode {
    threshold: f64,
    feature: u32,
    left: u32,
}

impl FlatTree {
    fn new(tree: &Tree) -> Self {
        let mut depth_of = vec![0usize; tree.nodes.len()];
        let mut depth = 0;
        let mut nodes = Vec::with_capacity(tree.nodes.len());
        for (i, n) in tree.nodes.iter().enumerate() {
            if n.is_leaf() {
                nodes.push(FlatNode { threshold: f64::INFINITY, feature: 0, left: i as u32 });
                depth = depth.max(depth_of[i]);
            } else {
                nodes.push(FlatNode { threshold: n.threshold, feature: n.feature, left: n.left });
                depth_of[n.left as usize] = depth_of[i] + 1;
                depth_of[n.right as usize] = depth_of[i] + 1;
            }
        }
        Self { nodes, values: tree.nodes.iter().map(|n| n.value).collect(), depth }
    }

    /// Add `f(leaf value)` of every row of `x` to `acc`.
    fn accumulate(&self, x: &Matrix, acc: &mut [f64], f: impl Fn(f64) -> f64) {
        const LANES: usize = 8;
        let p = x.n_cols();
        let data = x.as_slice();
        let n = x.n_rows();
        let mut start = 0;
        while start < n {
            let lanes = LANES.min(n - start);
            let mut idx = [0u32; LANES];
            for _ in 0..self.depth {
                for (l, i) in idx.iter_mut().enumerate().take(lanes) {
                    let node = self.nodes[*i as usize];
                    let v = data[(start + l) * p + node.feature as usize];
                    *i = node.left + u32::from(v > node.threshold);
                }
            }
            for l in 0..lanes {
                acc[start + l] += f(self.values[idx[l] as usize]);
            }
            start += lanes;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<Tree>,
    flat: Vec<FlatTree>,
    pub mode: Mode,
}

impl RandomForest {
    pub fn fit<R: Rng + ?Sized>(x: &Matrix, y: &[f64], mode: Mode, params: &ForestParams, rng: &mut R) -> Self {
        let n = x.n_rows();
        let pre = Presorted::new(x);
        let grow_params = GrowParams {
            mtry: Some(params.mtry.clamp(1, x.n_cols().max(1))),
            min_split_weight: params.min_node_size as f64 + 1.0,
            min_leaf_weight: 1.0,
            max_depth: usize::MAX,
        };
        let mut weights = vec![0.0; n];
        let trees: Vec<Tree> = (0..params.n_trees)
            .map(|_| {
                weights.iter_mut().for_each(|w| *w = 0.0);
                for _ in 0..n {
                    weights[rng.random_range(0..n)] += 1.0;
                }
                grow(&pre.columns, y, &weights, pre.filtered(&weights), &grow_params, rng)
            })
            .collect();
        let flat = trees.iter().map(FlatTree::new).collect();
        Self { trees, flat, mode }
    }

    /// Classification: fraction of trees voting defective (a leaf at exactly
    /// one half counts as half a vote). Regression: mean prediction.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let total: f64 = match self.mode {
            Mode::Classification => self
                .trees
                .iter()
                .map(|t| vote(t.predict_row(row)))
                .sum(),
            Mode::Regression => self.trees.iter().map(|t| t.predict_row(row)).sum(),
        };
        total / self.trees.len() as f64
    }

    /// Scores for every row of `x`; same values as `predict_row`.
    pub fn predict_matrix(&self, x: &Matrix) -> Vec<f64> {
        let mut total = vec![0.0; x.n_rows()];
        for t in &self.flat {
            match self.mode {
                Mode::Classification => t.accumulate(x, &mut total, vote),
                Mode::Regression => t.accumulate(x, &mut total, |v| v),
            }
        }
        let k = self.trees.len() as f64;
        total.iter_mut().for_each(|v| *v /= k);
        total
    }

    pub fn raw_importance(&self, n_features: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_features];
        for t in &self.trees {
            t.accumulate_importance(&mut out);
        }
        out
    }
}
