//! Scott-Knott effect-size-aware clustering of treatments into ranks.
//!
//! Treatments are sorted by mean and split recursively at the contiguous
//! cut that maximizes the between-group sum of squares of treatment means.
//! A cut is kept only if the Scott-Knott likelihood-ratio statistic is
//! significant and the Cohen's d between the pooled observations on either
//! side is non-negligible.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{cohens_d, mean, Magnitude};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    #[default]
    HigherIsBetter,
    LowerIsBetter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkEsdOptions {
    pub alpha: f64,
    pub orientation: Orientation,
}

impl Default for SkEsdOptions {
    fn default() -> Self {
        Self { alpha: 0.05, orientation: Orientation::HigherIsBetter }
    }
}

/// Rank assignment, best treatment first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub treatments: Vec<String>,
    pub assigned_rank: Vec<usize>,
    pub mean_metric: Vec<f64>,
}

impl RankTable {
    pub fn rank_of(&self, name: &str) -> Option<usize> {
        self.treatments.iter().position(|t| t == name).map(|i| self.assigned_rank[i])
    }

    /// Treatments at rank `k`, in table order.
    pub fn members(&self, k: usize) -> Vec<&str> {
        self.treatments
            .iter()
            .zip(&self.assigned_rank)
            .filter(|(_, &r)| r == k)
            .map(|(t, _)| t.as_str())
            .collect()
    }

    pub fn n_ranks(&self) -> usize {
        self.assigned_rank.iter().copied().max().unwrap_or(0)
    }
}

struct Treatment<'a> {
    name: &'a str,
    obs: &'a [f64],
    mean: f64,
}

pub fn scott_knott_esd(distributions: &[(String, Vec<f64>)], opts: SkEsdOptions) -> Result<RankTable> {
    if distributions.is_empty() {
        return Err(Error::InvalidInput("no treatments to rank".into()));
    }
    if let Some((name, obs)) = distributions.iter().find(|(_, obs)| obs.len() < 2) {
        return Err(Error::InvalidInput(format!("treatment {name:?} has {} observations, need 2", obs.len())));
    }
    let sign = match opts.orientation {
        Orientation::HigherIsBetter => 1.0,
        Orientation::LowerIsBetter => -1.0,
    };
    let mut ts: Vec<Treatment> = distributions
        .iter()
        .map(|(name, obs)| Treatment { name, obs, mean: mean(obs) })
        .collect();
    ts.sort_by(|a, b| (sign * b.mean).total_cmp(&(sign * a.mean)).then_with(|| a.name.cmp(b.name)));

    // pooled within-treatment error of the whole experiment
    let n_total: usize = ts.iter().map(|t| t.obs.len()).sum();
    let k_total = ts.len();
    let sse: f64 = ts.iter().map(|t| t.obs.iter().map(|v| (v - t.mean) * (v - t.mean)).sum::<f64>()).sum();
    let error_df = (n_total - k_total) as f64;
    let mse = if error_df > 0.0 { sse / error_df } else { 0.0 };
    let replication = n_total as f64 / k_total as f64;
    let ctx = SplitContext { mse, error_df, replication, alpha: opts.alpha };

    let mut ranks = vec![0usize; ts.len()];
    let mut next_rank = 1;
    let mut stack = vec![(0usize, ts.len())];
    // depth-first, left (better) block first
    while let Some((lo, hi)) = stack.pop() {
        match ctx.split(&ts[lo..hi]) {
            Some(cut) => {
                stack.push((lo + cut, hi));
                stack.push((lo, lo + cut));
            }
            None => {
                for r in &mut ranks[lo..hi] {
                    *r = next_rank;
                }
                next_rank += 1;
            }
        }
    }

    Ok(RankTable {
        treatments: ts.iter().map(|t| t.name.to_string()).collect(),
        assigned_rank: ranks,
        mean_metric: ts.iter().map(|t| t.mean).collect(),
    })
}

struct SplitContext {
    mse: f64,
    error_df: f64,
    replication: f64,
    alpha: f64,
}

impl SplitContext {
    /// Accepted cut position within `block`, if any.
    fn split(&self, block: &[Treatment]) -> Option<usize> {
        let k = block.len();
        if k < 2 {
            return None;
        }
        let means: Vec<f64> = block.iter().map(|t| t.mean).collect();
        let grand = mean(&means);
        let mut best: Option<(usize, f64)> = None;
        for cut in 1..k {
            let (l, r) = means.split_at(cut);
            let (ml, mr) = (mean(l), mean(r));
            let b0 = cut as f64 * (ml - grand).powi(2) + (k - cut) as f64 * (mr - grand).powi(2);
            if best.is_none_or(|(_, b)| b0 > b) {
                best = Some((cut, b0));
            }
        }
        let (cut, b0) = best?;
        if b0 <= 0.0 {
            return None;
        }

        let spread: f64 = means.iter().map(|m| (m - grand).powi(2)).sum();
        let sigma2 = (spread + self.error_df * self.mse / self.replication) / (k as f64 + self.error_df);
        if sigma2 <= 0.0 {
            return None;
        }
        let lambda = PI / (2.0 * (PI - 2.0)) * b0 / sigma2;
        let df = k as f64 / (PI - 2.0);
        let p = ChiSquared::new(df).ok()?.sf(lambda);
        if p >= self.alpha {
            return None;
        }

        let pool = |ts: &[Treatment]| ts.iter().flat_map(|t| t.obs.iter().copied()).collect::<Vec<f64>>();
        let effect = cohens_d(&pool(&block[..cut]), &pool(&block[cut..])).ok()?;
        (effect.magnitude != Magnitude::Negligible).then_some(cut)
    }
}
