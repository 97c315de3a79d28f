//! Weighted CART growth on presorted columns.
//!
//! Splits minimize the weighted sum of squared errors of the children. For
//! 0/1 labels this is the Gini criterion (node Gini impurity times weight is
//! twice the node SSE), so classification and regression trees share one
//! code path and differ only in how leaf values are read.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

const LEAF: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub feature: u32,
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    /// Weighted mean target (class-1 fraction for 0/1 labels).
    pub value: f64,
    pub weight: f64,
    /// Weighted SSE of the node's targets around `value`.
    pub risk: f64,
    /// SSE reduction achieved by this node's split; 0 for leaves.
    pub decrease: f64,
}

impl Node {
    fn leaf(value: f64, weight: f64, risk: f64) -> Self {
        Node { feature: LEAF, threshold: 0.0, left: 0, right: 0, value, weight, risk, decrease: 0.0 }
    }

    #[inline]
    pub fn is_leaf(&self) -> bool {
        self.feature == LEAF
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
    pub n_features: usize,
}

impl Tree {
    /// Single-leaf tree.
    pub fn constant(value: f64, n_features: usize) -> Self {
        Tree { nodes: vec![Node::leaf(value, 0.0, 0.0)], n_features }
    }

    #[inline]
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            let n = &self.nodes[i];
            if n.is_leaf() {
                return n.value;
            }
            // children are stored next to each other
            i = n.left as usize + usize::from(row[n.feature as usize] > n.threshold);
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.reachable().filter(|&i| self.nodes[i].is_leaf()).count()
    }

    fn reachable(&self) -> impl Iterator<Item = usize> + '_ {
        let mut stack = vec![0usize];
        std::iter::from_fn(move || {
            let i = stack.pop()?;
            let n = &self.nodes[i];
            if !n.is_leaf() {
                stack.push(n.right as usize);
                stack.push(n.left as usize);
            }
            Some(i)
        })
    }

    /// Add each split's impurity decrease to its feature's slot.
    pub fn accumulate_importance(&self, out: &mut [f64]) {
        for i in self.reachable() {
            let n = &self.nodes[i];
            if !n.is_leaf() {
                out[n.feature as usize] += n.decrease;
            }
        }
    }

    /// Smallest minimizer of `risk + alpha * leaves` among subtrees.
    pub fn prune(&self, alpha: f64) -> Tree {
        // children always have larger indices than their parent
        let mut cost = vec![0.0; self.nodes.len()];
        let mut collapse = vec![false; self.nodes.len()];
        for i in (0..self.nodes.len()).rev() {
            let n = &self.nodes[i];
            if n.is_leaf() {
                cost[i] = n.risk + alpha;
            } else {
                let keep = cost[n.left as usize] + cost[n.right as usize];
                let cut = n.risk + alpha;
                if cut <= keep {
                    collapse[i] = true;
                    cost[i] = cut;
                } else {
                    cost[i] = keep;
                }
            }
        }
        let mut nodes = vec![Node::leaf(0.0, 0.0, 0.0)];
        let mut stack = vec![(0usize, 0usize)];
        while let Some((old, new)) = stack.pop() {
            let n = &self.nodes[old];
            if n.is_leaf() || collapse[old] {
                nodes[new] = Node::leaf(n.value, n.weight, n.risk);
            } else {
                let left = nodes.len();
                nodes.push(Node::leaf(0.0, 0.0, 0.0));
                nodes.push(Node::leaf(0.0, 0.0, 0.0));
                nodes[new] = Node { left: left as u32, right: left as u32 + 1, ..n.clone() };
                stack.push((n.right as usize, left + 1));
                stack.push((n.left as usize, left));
            }
        }
        Tree { nodes, n_features: self.n_features }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct GrowParams {
    /// Features drawn per node; `None` evaluates all of them in order.
    pub mtry: Option<usize>,
    /// A node is split only if its weight is at least this.
    pub min_split_weight: f64,
    pub min_leaf_weight: f64,
    pub max_depth: usize,
}

/// Column-major copy of the training matrix plus per-feature row orders.
pub(crate) struct Presorted {
    pub columns: Vec<Vec<f64>>,
    orders: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new(x: &Matrix) -> Self {
        let columns: Vec<Vec<f64>> = (0..x.n_cols()).map(|j| x.column(j)).collect();
        let orders = columns
            .iter()
            .map(|col| {
                let mut o: Vec<u32> = (0..col.len() as u32).collect();
                o.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                o
            })
            .collect();
        Self { columns, orders }
    }

    /// Orders restricted to rows with positive weight.
    pub fn filtered(&self, weights: &[f64]) -> Vec<Vec<u32>> {
        self.orders
            .iter()
            .map(|o| o.iter().copied().filter(|&r| weights[r as usize] > 0.0).collect())
            .collect()
    }
}

struct Split {
    feature: usize,
    /// Number of rows (in sorted order) that go left.
    left_len: usize,
    threshold: f64,
    decrease: f64,
}

/// Grow a tree on the rows listed in `orders` (one presorted list per
/// feature, all over the same row set).
pub(crate) fn grow<R: Rng + ?Sized>(
    columns: &[Vec<f64>],
    y: &[f64],
    weights: &[f64],
    mut orders: Vec<Vec<u32>>,
    params: &GrowParams,
    rng: &mut R,
) -> Tree {
    let p = columns.len();
    let n_rows = orders.first().map_or(0, Vec::len);
    let mut nodes: Vec<Node> = vec![Node::leaf(0.0, 0.0, 0.0)];
    let mut goes_left = vec![false; y.len()];
    let mut buf: Vec<u32> = Vec::with_capacity(n_rows);
    let mut feats: Vec<usize> = (0..p).collect();
    let mut stack = vec![(0usize, 0usize, n_rows, 0usize)];

    while let Some((id, start, end, depth)) = stack.pop() {
        let rows = &orders[0][start..end];
        let (mut w, mut s, mut q) = (0.0, 0.0, 0.0);
        for &r in rows {
            let r = r as usize;
            let wy = weights[r] * y[r];
            w += weights[r];
            s += wy;
            q += wy * y[r];
        }
        let mean = if w > 0.0 { s / w } else { 0.0 };
        let risk = (q - s * mean).max(0.0);
        nodes[id] = Node::leaf(mean, w, risk);
        if w < params.min_split_weight || risk <= 0.0 || depth >= params.max_depth || end - start < 2 {
            continue;
        }

        let Some(split) = best_split(columns, y, weights, &orders, start, end, w, s, params, &mut feats, rng) else {
            continue;
        };
        if split.decrease <= risk * 1e-12 {
            continue;
        }

        for &r in &orders[split.feature][start..end] {
            goes_left[r as usize] = false;
        }
        for &r in &orders[split.feature][start..start + split.left_len] {
            goes_left[r as usize] = true;
        }
        // the split feature's order is already partitioned at left_len
        for (g, order) in orders.iter_mut().enumerate() {
            if g == split.feature {
                continue;
            }
            let seg = &mut order[start..end];
            buf.resize(seg.len(), 0);
            let (mut k, mut j) = (0, 0);
            // branch-free stable partition
            for i in 0..seg.len() {
                let r = seg[i];
                let left = usize::from(goes_left[r as usize]);
                seg[k] = r;
                buf[j] = r;
                k += left;
                j += 1 - left;
            }
            seg[k..].copy_from_slice(&buf[..j]);
        }

        let left = nodes.len();
        nodes.push(Node::leaf(0.0, 0.0, 0.0));
        nodes.push(Node::leaf(0.0, 0.0, 0.0));
        let node = &mut nodes[id];
        node.feature = split.feature as u32;
        node.threshold = split.threshold;
        node.left = left as u32;
        node.right = left as u32 + 1;
        node.decrease = split.decrease;
        let mid = start + split.left_len;
        stack.push((left + 1, mid, end, depth + 1));
        stack.push((left, start, mid, depth + 1));
    }
    Tree { nodes, n_features: p }
}

#[allow(clippy::too_many_arguments)]
fn best_split<R: Rng + ?Sized>(
    columns: &[Vec<f64>],
    y: &[f64],
    weights: &[f64],
    orders: &[Vec<u32>],
    start: usize,
    end: usize,
    w_total: f64,
    s_total: f64,
    params: &GrowParams,
    feats: &mut [usize],
    rng: &mut R,
) -> Option<Split> {
    let p = feats.len();
    let wanted = params.mtry.map_or(p, |m| m.clamp(1, p));
    let base = s_total * s_total / w_total;
    let mut best: Option<Split> = None;
    let mut best_proxy = f64::NEG_INFINITY;
    let mut evaluated = 0;
    for i in 0..p {
        let f = if params.mtry.is_some() {
            let j = rng.random_range(i..p);
            feats.swap(i, j);
            feats[i]
        } else {
            i
        };
        let col = &columns[f];
        let ord = &orders[f][start..end];
        if col[ord[0] as usize] == col[ord[ord.len() - 1] as usize] {
            continue;
        }
        evaluated += 1;
        let (mut wl, mut sl) = (0.0, 0.0);
        for k in 0..ord.len() - 1 {
            let r = ord[k] as usize;
            wl += weights[r];
            sl += weights[r] * y[r];
            let v = col[r];
            let next = col[ord[k + 1] as usize];
            if next <= v {
                continue;
            }
            let wr = w_total - wl;
            if wl < params.min_leaf_weight || wr < params.min_leaf_weight {
                continue;
            }
            let sr = s_total - sl;
            let proxy = sl * sl / wl + sr * sr / wr;
            if proxy > best_proxy {
                best_proxy = proxy;
                let mid = v + (next - v) / 2.0;
                best = Some(Split {
                    feature: f,
                    left_len: k + 1,
                    threshold: if mid < next { mid } else { v },
                    decrease: (proxy - base).max(0.0),
                });
            }
        }
        if evaluated == wanted {
            break;
        }
    }
    best
}
