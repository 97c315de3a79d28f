use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::midranks;
use crate::error::{Error, Result};

/// Largest number of nonzero differences handled by exact enumeration.
pub const EXACT_MAX_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WilcoxonMethod {
    Exact,
    NormalApproximation,
    /// All differences were zero; p is reported as 1.
    NoSignal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub p_value: f64,
    /// Sum of midranks of the positive differences.
    pub statistic: f64,
    pub n_nonzero: usize,
    pub method: WilcoxonMethod,
}

fn nonzero_differences(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!("paired samples differ in length: {} vs {}", a.len(), b.len())));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect())
}

fn signed_rank_sum(diffs: &[f64]) -> (Vec<f64>, f64) {
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = midranks(&abs);
    let w = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    (ranks, w)
}

/// Two-sided paired Wilcoxon signed-rank test. Zero differences are
/// discarded; up to [`EXACT_MAX_N`] remaining pairs use the exact null
/// distribution, larger samples the tie- and continuity-corrected normal
/// approximation.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    let diffs = nonzero_differences(a, b)?;
    if diffs.is_empty() {
        return Ok(WilcoxonResult { p_value: 1.0, statistic: 0.0, n_nonzero: 0, method: WilcoxonMethod::NoSignal });
    }
    let (_, statistic) = signed_rank_sum(&diffs);
    let (p_value, method) = if diffs.len() <= EXACT_MAX_N {
        (exact_p(&diffs), WilcoxonMethod::Exact)
    } else {
        (normal_p(&diffs), WilcoxonMethod::NormalApproximation)
    };
    Ok(WilcoxonResult { p_value, statistic, n_nonzero: diffs.len(), method })
}

/// Exact two-sided p over all 2^n sign assignments of the (nonzero)
/// differences `diffs`.
pub fn wilcoxon_exact_p(diffs: &[f64]) -> Result<f64> {
    let d: Vec<f64> = diffs.iter().copied().filter(|v| *v != 0.0).collect();
    if d.is_empty() {
        return Err(Error::InvalidInput("no nonzero differences".into()));
    }
    if d.len() > 24 {
        return Err(Error::InvalidInput(format!("exact enumeration limited to 24 pairs, got {}", d.len())));
    }
    Ok(exact_p(&d))
}

/// Normal-approximation two-sided p for the (nonzero) differences.
pub fn wilcoxon_normal_p(diffs: &[f64]) -> Result<f64> {
    let d: Vec<f64> = diffs.iter().copied().filter(|v| *v != 0.0).collect();
    if d.is_empty() {
        return Err(Error::InvalidInput("no nonzero differences".into()));
    }
    Ok(normal_p(&d))
}

fn exact_p(diffs: &[f64]) -> f64 {
    let (ranks, w) = signed_rank_sum(diffs);
    // midranks are multiples of 1/2, so doubled ranks are integers
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut dist = vec![0.0f64; total + 1];
    dist[0] = 1.0;
    for &r in &doubled {
        for s in (r..=total).rev() {
            dist[s] += dist[s - r];
        }
    }
    let count: f64 = dist.iter().sum();
    let w2 = (w * 2.0).round() as usize;
    let lower: f64 = dist[..=w2].iter().sum::<f64>() / count;
    let upper: f64 = dist[w2..].iter().sum::<f64>() / count;
    (2.0 * lower.min(upper)).min(1.0)
}

fn normal_p(diffs: &[f64]) -> f64 {
    let (ranks, w) = signed_rank_sum(diffs);
    let n = diffs.len() as f64;
    let mut sorted = ranks.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let sigma = (n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0).sqrt();
    let centered = w - n * (n + 1.0) / 4.0;
    if sigma == 0.0 {
        return 1.0;
    }
    // signum(0.0) is 1, so the centre needs its own case
    let correction = if centered == 0.0 { 0.0 } else { 0.5 * centered.signum() };
    let z = (centered - correction) / sigma;
    let normal = Normal::standard();
    (2.0 * normal.cdf(z).min(normal.sf(z))).min(1.0)
}
