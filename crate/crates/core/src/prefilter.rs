//! Correlation and redundancy pre-filtering of features.
//!
//! Features are clustered on |Spearman ρ| with complete linkage; each
//! sub-hierarchy whose merges all exceed the correlation threshold keeps a
//! single representative. Survivors are then pruned for redundancy: a
//! feature that ordinary least squares can predict from the others with
//! R² at or above the cutoff is dropped, one at a time.

use serde::{Deserialize, Serialize};

use crate::corpus::DefectDataset;
use crate::error::{Error, Result};
use crate::linalg::solve_spd_jittered;
use crate::stats::{midranks, pearson};

pub const DEFAULT_CORRELATION_THRESHOLD: f64 = 0.7;
pub const DEFAULT_REDUNDANCY_CUTOFF: f64 = 0.9;

/// One agglomeration step. Node ids below `leaves.len()` are leaves; merge
/// `i` creates node `leaves.len() + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationHierarchy {
    pub leaves: Vec<String>,
    pub merges: Vec<Merge>,
    /// Zero-variance features excluded before clustering.
    pub dropped_constant: Vec<String>,
}

impl CorrelationHierarchy {
    pub fn root(&self) -> usize {
        self.leaves.len() + self.merges.len() - 1
    }

    /// Leaf indices under `node`, ascending.
    pub fn members(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            if n < self.leaves.len() {
                out.push(n);
            } else {
                let m = &self.merges[n - self.leaves.len()];
                stack.push(m.left);
                stack.push(m.right);
            }
        }
        out.sort_unstable();
        out
    }

    fn similarity_of(&self, node: usize) -> Option<f64> {
        (node >= self.leaves.len()).then(|| self.merges[node - self.leaves.len()].similarity)
    }
}

fn is_constant(values: &[f64]) -> bool {
    values.iter().all(|v| *v == values[0])
}

/// |Spearman ρ| between every pair of columns.
fn abs_spearman_matrix(columns: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let ranks: Vec<Vec<f64>> = columns.iter().map(|c| midranks(c)).collect();
    let p = columns.len();
    let mut sim = vec![vec![1.0; p]; p];
    for i in 0..p {
        for j in 0..i {
            let r = pearson(&ranks[i], &ranks[j])?.abs();
            sim[i][j] = r;
            sim[j][i] = r;
        }
    }
    Ok(sim)
}

/// Complete-linkage agglomerative clustering of features on |Spearman ρ|.
pub fn spearman_cluster(ds: &DefectDataset) -> Result<CorrelationHierarchy> {
    let mut leaves = Vec::new();
    let mut columns = Vec::new();
    let mut dropped_constant = Vec::new();
    for (j, name) in ds.feature_names.iter().enumerate() {
        let col = ds.features.column(j);
        if is_constant(&col) {
            log::warn!("{}: dropping constant feature {name:?}", ds.name);
            dropped_constant.push(name.clone());
        } else {
            leaves.push(name.clone());
            columns.push(col);
        }
    }
    if leaves.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "{}: clustering needs at least 2 non-constant features, got {}",
            ds.name,
            leaves.len()
        )));
    }
    let p = leaves.len();
    let sim = abs_spearman_matrix(&columns)?;

    // active clusters: (node id, index into `linkage`)
    let mut active: Vec<usize> = (0..p).collect();
    let mut linkage = sim;
    let mut node_of: Vec<usize> = (0..p).collect();
    let mut merges = Vec::with_capacity(p - 1);
    while active.len() > 1 {
        let mut best = (0, 1, f64::NEG_INFINITY);
        for (ai, &a) in active.iter().enumerate() {
            for &b in &active[ai + 1..] {
                if linkage[a][b] > best.2 {
                    best = (a, b, linkage[a][b]);
                }
            }
        }
        let (a, b, s) = best;
        merges.push(Merge { left: node_of[a], right: node_of[b], similarity: s });
        // slot `a` now holds the merged cluster
        for &k in &active {
            if k != a && k != b {
                let v = linkage[a][k].min(linkage[b][k]);
                linkage[a][k] = v;
                linkage[k][a] = v;
            }
        }
        node_of[a] = p + merges.len() - 1;
        active.retain(|&k| k != b);
    }
    Ok(CorrelationHierarchy { leaves, merges, dropped_constant })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedDrop {
    pub dropped: String,
    pub surviving_representative: String,
    /// Similarity at which the cluster was formed (its weakest link).
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub survivors: Vec<String>,
    pub dropped: Vec<CorrelatedDrop>,
}

fn representative<'a>(members: &[&'a str], preference: &[String]) -> &'a str {
    preference
        .iter()
        .find_map(|p| members.iter().find(|m| **m == p.as_str()).copied())
        .unwrap_or_else(|| members.iter().min().copied().expect("non-empty cluster"))
}

/// Keep one feature per maximal sub-hierarchy whose merges all exceed
/// `threshold`.
pub fn cut_and_select(h: &CorrelationHierarchy, threshold: f64, preference: &[String]) -> Selection {
    let mut keep = vec![false; h.leaves.len()];
    let mut dropped = Vec::new();
    let mut stack = vec![h.root()];
    while let Some(node) = stack.pop() {
        match h.similarity_of(node) {
            None => keep[node] = true,
            // complete linkage never inverts, so the root merge is the weakest
            Some(s) if s > threshold => {
                let members = h.members(node);
                let names: Vec<&str> = members.iter().map(|&i| h.leaves[i].as_str()).collect();
                let rep = representative(&names, preference);
                for &i in &members {
                    if h.leaves[i] == rep {
                        keep[i] = true;
                    } else {
                        dropped.push(CorrelatedDrop {
                            dropped: h.leaves[i].clone(),
                            surviving_representative: rep.to_string(),
                            similarity: s,
                        });
                    }
                }
            }
            Some(_) => {
                let m = &h.merges[node - h.leaves.len()];
                stack.push(m.right);
                stack.push(m.left);
            }
        }
    }
    dropped.sort_by(|a, b| a.dropped.cmp(&b.dropped));
    let survivors = h.leaves.iter().zip(&keep).filter(|(_, &k)| k).map(|(n, _)| n.clone()).collect();
    Selection { survivors, dropped }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedundantDrop {
    pub dropped: String,
    pub r_squared_against_others: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefilterReport {
    pub kept: Vec<String>,
    pub dropped_constant: Vec<String>,
    pub dropped_correlated: Vec<CorrelatedDrop>,
    pub dropped_redundant: Vec<RedundantDrop>,
}

/// R² of each feature regressed (OLS with intercept) on the others, from
/// the inverse of their correlation matrix: R²ⱼ = 1 − 1/(C⁻¹)ⱼⱼ.
fn r_squared_against_others(corr: &[Vec<f64>], subset: &[usize]) -> Vec<f64> {
    let k = subset.len();
    let mut a = vec![0.0; k * k];
    for (i, &si) in subset.iter().enumerate() {
        for (j, &sj) in subset.iter().enumerate() {
            a[i * k + j] = corr[si][sj];
        }
    }
    (0..k)
        .map(|j| {
            let mut e = vec![0.0; k];
            e[j] = 1.0;
            let col = solve_spd_jittered(&a, &e, k);
            let inv_jj = col[j];
            if inv_jj <= 1.0 {
                0.0
            } else {
                (1.0 - 1.0 / inv_jj).min(1.0)
            }
        })
        .collect()
}

/// Iteratively drop the feature best explained by the remaining ones while
/// its R² reaches `cutoff`.
pub fn drop_redundant(ds: &DefectDataset, kept: &[String], cutoff: f64) -> Result<PrefilterReport> {
    if kept.is_empty() {
        return Err(Error::InvalidInput(format!("{}: no features to check for redundancy", ds.name)));
    }
    let idx = kept
        .iter()
        .map(|n| ds.feature_index(n).ok_or_else(|| Error::InvalidInput(format!("unknown feature {n:?}"))))
        .collect::<Result<Vec<_>>>()?;
    let columns: Vec<Vec<f64>> = idx.iter().map(|&j| ds.features.column(j)).collect();
    let p = columns.len();
    let mut corr = vec![vec![1.0; p]; p];
    for i in 0..p {
        for j in 0..i {
            let r = pearson(&columns[i], &columns[j]).unwrap_or(0.0);
            corr[i][j] = r;
            corr[j][i] = r;
        }
    }

    let mut live: Vec<usize> = (0..p).collect();
    let mut dropped = Vec::new();
    while live.len() >= 2 {
        let r2 = r_squared_against_others(&corr, &live);
        let mut best: Option<(usize, f64)> = None;
        for (pos, &r) in r2.iter().enumerate() {
            best = match best {
                None => Some((pos, r)),
                Some((bp, br)) => {
                    let tie = (r - br).abs() <= 1e-10;
                    if (!tie && r > br) || (tie && kept[live[pos]] < kept[live[bp]]) {
                        Some((pos, r))
                    } else {
                        Some((bp, br))
                    }
                }
            };
        }
        let (pos, r) = best.expect("at least two live features");
        if r < cutoff {
            break;
        }
        dropped.push(RedundantDrop { dropped: kept[live[pos]].clone(), r_squared_against_others: r });
        live.remove(pos);
    }
    Ok(PrefilterReport {
        kept: live.iter().map(|&i| kept[i].clone()).collect(),
        dropped_constant: Vec::new(),
        dropped_correlated: Vec::new(),
        dropped_redundant: dropped,
    })
}

/// Full pre-filter: constant removal, correlation clustering, redundancy.
pub fn prefilter(
    ds: &DefectDataset,
    corr_threshold: f64,
    redun_cutoff: f64,
    preference: &[String],
) -> Result<PrefilterReport> {
    if !(corr_threshold > 0.0 && corr_threshold < 1.0) {
        return Err(Error::InvalidInput(format!("correlation threshold {corr_threshold} outside (0, 1)")));
    }
    let non_constant: Vec<String> = ds
        .feature_names
        .iter()
        .enumerate()
        .filter(|(j, _)| !is_constant(&ds.features.column(*j)))
        .map(|(_, n)| n.clone())
        .collect();
    let (survivors, dropped_correlated, dropped_constant) = match non_constant.len() {
        0 => return Err(Error::InvalidInput(format!("{}: every feature is constant", ds.name))),
        1 => {
            let constant = ds.feature_names.iter().filter(|n| **n != non_constant[0]).cloned().collect();
            (non_constant, Vec::new(), constant)
        }
        _ => {
            let h = spearman_cluster(ds)?;
            let sel = cut_and_select(&h, corr_threshold, preference);
            (sel.survivors, sel.dropped, h.dropped_constant)
        }
    };
    let mut report = drop_redundant(ds, &survivors, redun_cutoff)?;
    report.dropped_constant = dropped_constant;
    report.dropped_correlated = dropped_correlated;
    Ok(report)
}
