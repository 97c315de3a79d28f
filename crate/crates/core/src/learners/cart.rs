//! Single CART tree with cost-complexity pruning; the complexity parameter
//! is chosen by internal k-fold cross-validation.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow, GrowParams, Presorted, Tree};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartParams {
    pub cp_grid: Vec<f64>,
    pub folds: usize,
    pub min_split: usize,
    pub min_leaf: usize,
}

impl Default for CartParams {
    fn default() -> Self {
        Self { cp_grid: vec![0.0001, 0.001, 0.01, 0.1], folds: 5, min_split: 20, min_leaf: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrunedTree {
    pub tree: Tree,
    pub cp: f64,
}

fn grow_weighted<R: Rng + ?Sized>(pre: &Presorted, y: &[f64], w: &[f64], params: &CartParams, rng: &mut R) -> Tree {
    let gp = GrowParams {
        mtry: None,
        min_split_weight: params.min_split as f64,
        min_leaf_weight: params.min_leaf as f64,
        max_depth: 30,
    };
    grow(&pre.columns, y, w, pre.filtered(w), &gp, rng)
}

fn prune_cp(tree: &Tree, cp: f64) -> Tree {
    tree.prune(cp * tree.nodes[0].risk)
}

impl PrunedTree {
    pub fn fit<R: Rng + ?Sized>(x: &Matrix, y: &[f64], params: &CartParams, rng: &mut R) -> Self {
        let n = x.n_rows();
        let pre = Presorted::new(x);
        let mut cp = params.cp_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let folds = params.folds.min(n);
        if params.cp_grid.len() > 1 && folds >= 2 {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            let mut fold_of = vec![0usize; n];
            for (pos, &r) in order.iter().enumerate() {
                fold_of[r] = pos % folds;
            }
            let mut loss = vec![0.0; params.cp_grid.len()];
            for f in 0..folds {
                let w: Vec<f64> = fold_of.iter().map(|&k| if k == f { 0.0 } else { 1.0 }).collect();
                let full = grow_weighted(&pre, y, &w, params, rng);
                for (slot, &c) in loss.iter_mut().zip(&params.cp_grid) {
                    let t = prune_cp(&full, c);
                    for r in (0..n).filter(|&r| fold_of[r] == f) {
                        let e = t.predict_row(x.row(r)) - y[r];
                        *slot += e * e;
                    }
                }
            }
            // ties go to the larger (simpler) complexity parameter
            let mut best = f64::INFINITY;
            for (&l, &c) in loss.iter().zip(&params.cp_grid) {
                if l < best || (l == best && c > cp) {
                    best = l;
                    cp = c;
                }
            }
        }
        let full = grow_weighted(&pre, y, &vec![1.0; n], params, rng);
        Self { tree: prune_cp(&full, cp), cp }
    }
}
