//! Out-of-sample bootstrap validation.
//!
//! Each iteration draws `n` training rows with replacement, tests on the rows
//! never drawn, and records AUC, R² (regression arm) and permutation
//! importance. Iteration `i` is seeded only from the master seed, the dataset
//! name, the learner and `i`, so results do not depend on scheduling.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::DefectDataset;
use crate::error::{Error, Result};
use crate::learners::{fit_named, LearnerSpec, Mode, TrainedModel};
use crate::matrix::Matrix;
use crate::seed::{derive_seed, rng_from_seed};
use crate::stats::midranks;

/// Runs with a larger share of invalid iterations are aborted.
pub const MAX_INVALID_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Short content hash identifying the split.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for &i in &self.train {
            h.update((i as u64).to_le_bytes());
        }
        h.update(u64::MAX.to_le_bytes());
        for &i in &self.test {
            h.update((i as u64).to_le_bytes());
        }
        hex::encode(&h.finalize()[..8])
    }
}

/// `n` draws with replacement for training; the never-drawn rows (in
/// ascending order) for testing.
pub fn bootstrap_split<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Split {
    let mut drawn = vec![false; n];
    let train: Vec<usize> = (0..n)
        .map(|_| {
            let i = rng.random_range(0..n);
            drawn[i] = true;
            i
        })
        .collect();
    let test = (0..n).filter(|&i| !drawn[i]).collect();
    Split { train, test }
}

/// Rank-based (Mann-Whitney) area under the ROC curve; tied scores count
/// one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidInput(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidInput("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let ranks = midranks(scores);
    // doubled midranks are integers, so the numerator is exact
    let twice_rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l).map(|(r, _)| 2.0 * r).sum();
    let np = n_pos as f64;
    let numerator = twice_rank_sum - np * (np + 1.0);
    Ok(numerator / (2.0 * np * n_neg as f64))
}

/// Min-max scaling to `[0, 1]`; constant input maps to all 0.5.
pub fn normalize_scores(values: &[f64]) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return vec![0.5; values.len()];
    }
    let range = max - min;
    values.iter().map(|v| (v - min) / range).collect()
}

/// Test-set coefficient of determination; `None` when the actual values
/// have no variance.
pub fn r_squared(predicted: &[f64], actual: &[f64]) -> Option<f64> {
    if actual.len() < 2 || predicted.len() != actual.len() {
        return None;
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    if ss_tot <= 0.0 {
        return None;
    }
    let ss_res: f64 = predicted.iter().zip(actual).map(|(p, a)| (a - p) * (a - p)).sum();
    Some(1.0 - ss_res / ss_tot)
}

/// AUC of a model's scores; regression outputs are normalized first.
pub fn model_auc(model: &TrainedModel, x: &Matrix, labels: &[bool]) -> Result<f64> {
    let scores = model.score(x)?;
    match model.spec.mode {
        Mode::Classification => auc(&scores, labels),
        Mode::Regression => auc(&normalize_scores(&scores), labels),
    }
}

/// AUC drop after shuffling each test column once.
pub fn permutation_importance<R: Rng + ?Sized>(
    model: &TrainedModel,
    x_test: &Matrix,
    labels: &[bool],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let baseline = model_auc(model, x_test, labels)?;
    let mut work = x_test.clone();
    let mut drops = Vec::with_capacity(x_test.n_cols());
    for j in 0..x_test.n_cols() {
        let mut col = x_test.column(j);
        col.shuffle(rng);
        for (i, v) in col.iter().enumerate() {
            work.set(i, j, *v);
        }
        drops.push(baseline - model_auc(model, &work, labels)?);
        for i in 0..x_test.n_rows() {
            work.set(i, j, x_test.get(i, j));
        }
    }
    Ok(drops)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationStatus {
    Valid,
    EmptyTest,
    SingleClassTest,
    SingleClassTrain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationResult {
    pub iteration: usize,
    pub status: IterationStatus,
    pub auc: Option<f64>,
    pub r_squared: Option<f64>,
    pub permutation_importance: Vec<f64>,
    pub impurity_importance: Option<Vec<f64>>,
    pub oob_fraction: f64,
    pub split_digest: String,
}

impl IterationResult {
    pub fn is_valid(&self) -> bool {
        self.status == IterationStatus::Valid
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapRun {
    pub dataset: String,
    pub learner: LearnerSpec,
    pub master_seed: u64,
    pub feature_names: Vec<String>,
    pub iterations: Vec<IterationResult>,
}

impl BootstrapRun {
    pub fn valid(&self) -> impl Iterator<Item = &IterationResult> {
        self.iterations.iter().filter(|r| r.is_valid())
    }

    pub fn n_valid(&self) -> usize {
        self.valid().count()
    }

    pub fn auc_values(&self) -> Vec<f64> {
        self.valid().filter_map(|r| r.auc).collect()
    }

    pub fn mean_auc(&self) -> f64 {
        let v = self.auc_values();
        v.iter().sum::<f64>() / v.len() as f64
    }

    /// Valid-iteration permutation-importance values of feature `j`.
    pub fn permutation_values(&self, j: usize) -> Vec<f64> {
        self.valid().map(|r| r.permutation_importance[j]).collect()
    }

    pub fn impurity_values(&self, j: usize) -> Option<Vec<f64>> {
        self.valid().map(|r| r.impurity_importance.as_ref().map(|v| v[j])).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessOptions {
    pub repetitions: usize,
    pub master_seed: u64,
    /// Also record impurity importance (forest and tree families only).
    pub impurity_importance: bool,
}

impl HarnessOptions {
    pub fn new(repetitions: usize, master_seed: u64) -> Self {
        Self { repetitions, master_seed, impurity_importance: false }
    }
}

/// Seed of iteration `i`'s train/test split. It ignores the learner so
/// that all arms evaluated on a dataset share their splits.
pub fn split_seed(master: u64, dataset: &str, iteration: usize) -> u64 {
    derive_seed(master, &["split".into(), dataset.into(), iteration.into()])
}

pub fn learner_seed(master: u64, dataset: &str, learner_id: &str, iteration: usize) -> u64 {
    derive_seed(master, &["fit".into(), dataset.into(), learner_id.into(), iteration.into()])
}

fn run_iteration(ds: &DefectDataset, spec: &LearnerSpec, opts: &HarnessOptions, i: usize) -> Result<IterationResult> {
    let n = ds.n_modules();
    let split = bootstrap_split(n, &mut rng_from_seed(split_seed(opts.master_seed, &ds.name, i)));
    let mut result = IterationResult {
        iteration: i,
        status: IterationStatus::Valid,
        auc: None,
        r_squared: None,
        permutation_importance: Vec::new(),
        impurity_importance: None,
        oob_fraction: split.test.len() as f64 / n as f64,
        split_digest: split.digest(),
    };
    let labels = ds.labels();
    let test_labels: Vec<bool> = split.test.iter().map(|&r| labels[r]).collect();
    if split.test.is_empty() {
        result.status = IterationStatus::EmptyTest;
        return Ok(result);
    }
    if test_labels.iter().all(|&l| l) || test_labels.iter().all(|&l| !l) {
        result.status = IterationStatus::SingleClassTest;
        return Ok(result);
    }
    let y: Vec<f64> = match spec.mode {
        Mode::Classification => split.train.iter().map(|&r| if labels[r] { 1.0 } else { 0.0 }).collect(),
        Mode::Regression => split.train.iter().map(|&r| ds.defect_counts[r] as f64).collect(),
    };
    if spec.mode == Mode::Classification && (y.iter().all(|&v| v == 1.0) || y.iter().all(|&v| v == 0.0)) {
        result.status = IterationStatus::SingleClassTrain;
        return Ok(result);
    }
    let x_train = ds.features.select_rows(&split.train);
    let x_test = ds.features.select_rows(&split.test);
    let id = spec.id();
    let model = fit_named(spec, &x_train, &ds.feature_names, &y, learner_seed(opts.master_seed, &ds.name, &id, i))?;
    let scores = model.score(&x_test)?;
    result.auc = Some(match spec.mode {
        Mode::Classification => auc(&scores, &test_labels)?,
        Mode::Regression => {
            let actual: Vec<f64> = split.test.iter().map(|&r| ds.defect_counts[r] as f64).collect();
            result.r_squared = r_squared(&scores, &actual);
            auc(&normalize_scores(&scores), &test_labels)?
        }
    });
    let mut perm_rng = rng_from_seed(derive_seed(
        opts.master_seed,
        &["permute".into(), ds.name.as_str().into(), id.as_str().into(), i.into()],
    ));
    result.permutation_importance = permutation_importance(&model, &x_test, &test_labels, &mut perm_rng)?;
    if opts.impurity_importance && spec.family.has_impurity_importance() {
        result.impurity_importance = Some(model.impurity_importance()?);
    }
    Ok(result)
}

/// Run all bootstrap iterations on the current rayon pool. Results come
/// back in iteration order regardless of scheduling.
pub fn run_bootstrap(ds: &DefectDataset, spec: &LearnerSpec, opts: &HarnessOptions) -> Result<BootstrapRun> {
    if opts.repetitions == 0 {
        return Err(Error::InvalidInput("repetitions must be at least 1".into()));
    }
    if ds.n_features() == 0 {
        return Err(Error::InvalidInput(format!("{}: no features to train on", ds.name)));
    }
    let iterations: Vec<IterationResult> = (0..opts.repetitions)
        .into_par_iter()
        .map(|i| run_iteration(ds, spec, opts, i))
        .collect::<Result<_>>()?;
    let invalid = iterations.iter().filter(|r| !r.is_valid()).count();
    if invalid as f64 > MAX_INVALID_FRACTION * opts.repetitions as f64 {
        return Err(Error::TooManyInvalid {
            dataset: ds.name.clone(),
            learner: spec.id(),
            invalid,
            total: opts.repetitions,
        });
    }
    if invalid > 0 {
        log::warn!("{} / {}: {invalid} of {} iterations invalid", ds.name, spec.id(), opts.repetitions);
    }
    Ok(BootstrapRun {
        dataset: ds.name.clone(),
        learner: spec.clone(),
        master_seed: opts.master_seed,
        feature_names: ds.feature_names.clone(),
        iterations,
    })
}
