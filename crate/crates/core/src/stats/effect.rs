use serde::{Deserialize, Serialize};

use super::{mean, sample_variance, wilcoxon_signed_rank};
use crate::error::{Error, Result};

/// Cohen's d magnitude bands: |d| ≤ 0.2, ≤ 0.5, ≤ 0.8, above.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

impl Magnitude {
    pub fn from_d(d: f64) -> Self {
        let a = d.abs();
        if a <= 0.2 {
            Magnitude::Negligible
        } else if a <= 0.5 {
            Magnitude::Small
        } else if a <= 0.8 {
            Magnitude::Medium
        } else {
            Magnitude::Large
        }
    }

    pub fn letter(self) -> char {
        match self {
            Magnitude::Negligible => 'N',
            Magnitude::Small => 'S',
            Magnitude::Medium => 'M',
            Magnitude::Large => 'L',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    FirstHigher,
    SecondHigher,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSize {
    /// May be ±infinity when both samples are constant but differ.
    pub d: f64,
    pub magnitude: Magnitude,
    pub direction: Direction,
}

/// Cohen's d with pooled standard deviation, `a` minus `b`.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<EffectSize> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidInput("cohen's d needs at least two values per sample".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let pooled = ((na - 1.0) * sample_variance(a) + (nb - 1.0) * sample_variance(b)) / (na + nb - 2.0);
    let diff = mean(a) - mean(b);
    let d = if pooled > 0.0 {
        diff / pooled.sqrt()
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    let direction = if d > 0.0 {
        Direction::FirstHigher
    } else if d < 0.0 {
        Direction::SecondHigher
    } else {
        Direction::None
    };
    Ok(EffectSize { d, magnitude: Magnitude::from_d(d), direction })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub p_value: f64,
    pub cohens_d: f64,
    pub magnitude: Magnitude,
    pub direction: Direction,
    /// Every paired difference was zero.
    pub no_signal: bool,
}

/// Paired Wilcoxon signed-rank test plus Cohen's d (`a` relative to `b`).
pub fn compare_paired(a: &[f64], b: &[f64]) -> Result<ComparisonResult> {
    let w = wilcoxon_signed_rank(a, b)?;
    let e = cohens_d(a, b)?;
    Ok(ComparisonResult {
        p_value: w.p_value,
        cohens_d: e.d,
        magnitude: e.magnitude,
        direction: e.direction,
        no_signal: w.method == super::WilcoxonMethod::NoSignal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn magnitude_boundaries() {
        assert_eq!(Magnitude::from_d(0.2), Magnitude::Negligible);
        assert_eq!(Magnitude::from_d(0.21), Magnitude::Small);
        assert_eq!(Magnitude::from_d(-0.5), Magnitude::Small);
        assert_eq!(Magnitude::from_d(0.8), Magnitude::Medium);
        assert_eq!(Magnitude::from_d(0.81), Magnitude::Large);
        assert_eq!(Magnitude::from_d(f64::NEG_INFINITY), Magnitude::Large);
    }

    #[test]
    fn identical_and_degenerate_samples() {
        let a = [1.0, 2.0, 3.0];
        let e = cohens_d(&a, &a).unwrap();
        assert_eq!(e.d, 0.0);
        assert_eq!(e.magnitude, Magnitude::Negligible);
        assert_eq!(e.direction, Direction::None);
        assert_eq!(cohens_d(&[2.0, 2.0], &[2.0, 2.0]).unwrap().d, 0.0);
        let inf = cohens_d(&[3.0, 3.0], &[2.0, 2.0]).unwrap();
        assert_eq!(inf.d, f64::INFINITY);
        assert_eq!(inf.magnitude, Magnitude::Large);
        assert!(cohens_d(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn shift_by_c_pooled_sds_recovers_c() {
        let mut rng = crate::seed::rng_from_seed(5);
        let n = Normal::new(0.0, 2.0).unwrap();
        for &c in &[0.3, 1.0, 2.5] {
            let b: Vec<f64> = (0..20_000).map(|_| n.sample(&mut rng)).collect();
            let a: Vec<f64> = (0..20_000).map(|_| n.sample(&mut rng) + 2.0 * c).collect();
            let d = cohens_d(&a, &b).unwrap().d;
            assert!((d - c).abs() < 0.05, "c={c} d={d}");
        }
    }

    #[test]
    fn antisymmetric() {
        let mut rng = crate::seed::rng_from_seed(9);
        for _ in 0..100 {
            let a: Vec<f64> = (0..rng.random_range(2..30)).map(|_| rng.random::<f64>()).collect();
            let b: Vec<f64> = (0..rng.random_range(2..30)).map(|_| rng.random::<f64>()).collect();
            assert_eq!(cohens_d(&a, &b).unwrap().d, -cohens_d(&b, &a).unwrap().d);
        }
    }
}
