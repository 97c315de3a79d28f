//! Statistical toolbox: rank correlation, paired tests, effect sizes, and
//! Scott-Knott effect-size ranking.

mod effect;
mod scott_knott;
mod wilcoxon;

pub use effect::{cohens_d, compare_paired, ComparisonResult, Direction, EffectSize, Magnitude};
pub use scott_knott::{scott_knott_esd, Orientation, RankTable, SkEsdOptions};
pub use wilcoxon::{wilcoxon_exact_p, wilcoxon_normal_p, wilcoxon_signed_rank, WilcoxonMethod, WilcoxonResult};

use crate::error::{Error, Result};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance; 0 for fewer than two values.
pub fn sample_variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

/// 1-based ranks with ties assigned their average rank.
pub fn midranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        // positions i..j share ranks i+1..=j
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateVariance("correlation of a constant vector".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rank correlation (Pearson correlation of midranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::InvalidInput(format!("spearman needs at least 3 pairs, got {}", x.len())));
    }
    pearson(&midranks(x), &midranks(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    /// Direct midrank definition: rank = #smaller + (#equal + 1) / 2.
    fn brute_ranks(x: &[f64]) -> Vec<f64> {
        x.iter()
            .map(|&v| {
                let less = x.iter().filter(|&&w| w < v).count() as f64;
                let eq = x.iter().filter(|&&w| w == v).count() as f64;
                less + (eq + 1.0) / 2.0
            })
            .collect()
    }

    fn brute_spearman(x: &[f64], y: &[f64]) -> f64 {
        let (rx, ry) = (brute_ranks(x), brute_ranks(y));
        let n = x.len() as f64;
        let c = n * ((n + 1.0) / 2.0).powi(2);
        let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| a * b).sum::<f64>() - c;
        let sxx: f64 = rx.iter().map(|a| a * a).sum::<f64>() - c;
        let syy: f64 = ry.iter().map(|b| b * b).sum::<f64>() - c;
        sxy / (sxx * syy).sqrt()
    }

    #[test]
    fn midranks_with_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(midranks(&[5.0, 5.0, 5.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn spearman_monotone_and_reversed() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| v.powi(3) + 1.0).collect();
        assert_eq!(spearman(&x, &y).unwrap(), 1.0);
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        assert_eq!(spearman(&x, &rev).unwrap(), -1.0);
        assert!(spearman(&x, &[1.0; 10]).is_err());
        assert!(spearman(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn spearman_matches_rank_product_oracle() {
        let mut rng = crate::seed::rng_from_seed(11);
        for _ in 0..500 {
            // small integer support forces ties
            let x: Vec<f64> = (0..15).map(|_| f64::from(rng.random_range(0..6u8))).collect();
            let y: Vec<f64> = (0..15).map(|_| f64::from(rng.random_range(0..6u8))).collect();
            let (Ok(got), want) = (spearman(&x, &y), brute_spearman(&x, &y)) else { continue };
            assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
        }
    }

    proptest! {
        #[test]
        fn spearman_invariant_under_increasing_maps(
            x in prop::collection::vec(-100.0f64..100.0, 3..30),
            y_seed in prop::collection::vec(-100.0f64..100.0, 30),
        ) {
            let y = &y_seed[..x.len()];
            if let Ok(r) = spearman(&x, y) {
                let tx: Vec<f64> = x.iter().map(|v| v.exp().ln_1p() * 3.0 + v).collect();
                let ty: Vec<f64> = y.iter().map(|v| 2.0 * v + 7.0).collect();
                prop_assert_eq!(spearman(&tx, &ty).unwrap(), r);
            }
        }
    }
}
