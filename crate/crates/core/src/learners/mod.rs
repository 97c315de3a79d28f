//! Six learner families, each usable as a classifier on binary labels or as
//! a regressor on raw defect counts.

mod cart;
mod forest;
mod knn;
mod linear;
mod nn;
mod svm;
pub(crate) mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use cart::{CartParams, PrunedTree};
pub use forest::{ForestParams, RandomForest};
pub use knn::Knn;
pub use linear::logistic_irls;
pub use nn::{Mlp, NnParams};
pub use svm::{LinearSvm, SvmParams};
pub use tree::{Node, Tree};

use crate::error::{Error, Result};
use crate::linalg::{ols, LinearFit};
use crate::matrix::Matrix;
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Statistical,
    RandomForest,
    NeuralNet,
    DecisionTree,
    Svm,
    Knn,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Statistical,
        Family::RandomForest,
        Family::NeuralNet,
        Family::DecisionTree,
        Family::Svm,
        Family::Knn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Statistical => "statistical",
            Family::RandomForest => "random_forest",
            Family::NeuralNet => "neural_net",
            Family::DecisionTree => "decision_tree",
            Family::Svm => "svm",
            Family::Knn => "knn",
        }
    }

    pub fn has_impurity_importance(self) -> bool {
        matches!(self, Family::RandomForest | Family::DecisionTree)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == key)
            .or(match key.as_str() {
                "rf" | "forest" => Some(Family::RandomForest),
                "nn" => Some(Family::NeuralNet),
                "cart" | "tree" => Some(Family::DecisionTree),
                "linear" | "logistic" => Some(Family::Statistical),
                _ => None,
            })
            .ok_or_else(|| Error::InvalidInput(format!("unknown learner family {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Classification,
    Regression,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Classification => "classification",
            Mode::Regression => "regression",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Learner settings. `None` fields resolve to mode-dependent defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub trees: usize,
    pub mtry: Option<usize>,
    pub min_node_size: Option<usize>,
    pub knn_k: usize,
    pub svm: SvmParams,
    pub nn: NnParams,
    pub cart: CartParams,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            trees: 100,
            mtry: None,
            min_node_size: None,
            knn_k: 10,
            svm: SvmParams::default(),
            nn: NnParams::default(),
            cart: CartParams::default(),
        }
    }
}

impl Hyperparameters {
    pub fn forest(&self, mode: Mode, n_features: usize) -> ForestParams {
        let d = ForestParams::defaults(mode, n_features);
        ForestParams {
            n_trees: self.trees.max(1),
            mtry: self.mtry.unwrap_or(d.mtry),
            min_node_size: self.min_node_size.unwrap_or(d.min_node_size),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub family: Family,
    pub mode: Mode,
    pub params: Hyperparameters,
}

impl LearnerSpec {
    pub fn new(family: Family, mode: Mode) -> Self {
        Self { family, mode, params: Hyperparameters::default() }
    }

    pub fn with_params(mut self, params: Hyperparameters) -> Self {
        self.params = params;
        self
    }

    /// Stable identifier, e.g. `random_forest/regression`.
    pub fn id(&self) -> String {
        format!("{}/{}", self.family, self.mode)
    }

    /// Display label of the concrete algorithm.
    pub fn short_name(&self) -> &'static str {
        use Family::*;
        use Mode::*;
        match (self.family, self.mode) {
            (Statistical, Classification) => "Log-Reg",
            (Statistical, Regression) => "Lin-Reg",
            (RandomForest, Classification) => "RF-C",
            (RandomForest, Regression) => "RF-R",
            (NeuralNet, Classification) => "NN-C",
            (NeuralNet, Regression) => "NN-R",
            (DecisionTree, Classification) => "CT",
            (DecisionTree, Regression) => "RT",
            (Svm, Classification) => "SVM-C",
            (Svm, Regression) => "SVM-R",
            (Knn, Classification) => "KNN-C",
            (Knn, Regression) => "KNN-R",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Fitted {
    Constant(f64),
    Linear(LinearFit),
    Logistic(LinearFit),
    Forest(RandomForest),
    Tree(PrunedTree),
    Mlp(Mlp),
    Svm(LinearSvm),
    Knn(Knn),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: LearnerSpec,
    pub training_feature_names: Vec<String>,
    pub fitted: Fitted,
}

fn default_names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}

/// Fit with generated feature names `x0, x1, ...`.
pub fn fit(spec: &LearnerSpec, x: &Matrix, y: &[f64], seed: u64) -> Result<TrainedModel> {
    fit_named(spec, x, &default_names(x.n_cols()), y, seed)
}

pub fn fit_named(spec: &LearnerSpec, x: &Matrix, names: &[String], y: &[f64], seed: u64) -> Result<TrainedModel> {
    let n = x.n_rows();
    let p = x.n_cols();
    if n == 0 || p == 0 {
        return Err(Error::InvalidInput("empty training matrix".into()));
    }
    if y.len() != n {
        return Err(Error::InvalidInput(format!("{} targets for {n} training rows", y.len())));
    }
    if names.len() != p {
        return Err(Error::ArityMismatch { expected: p, actual: names.len() });
    }
    if y.iter().any(|v| !v.is_finite()) || x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite training value".into()));
    }
    let mut rng = rng_from_seed(seed);
    let params = &spec.params;
    let fitted = match spec.mode {
        Mode::Classification => {
            if y.iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(Error::InvalidInput("classification labels must be 0 or 1".into()));
            }
            let positives = y.iter().filter(|&&v| v == 1.0).count();
            if positives == 0 || positives == n {
                return Err(Error::SingleClass);
            }
            match spec.family {
                Family::Statistical => Fitted::Logistic(logistic_irls(x, y)),
                Family::RandomForest => {
                    Fitted::Forest(RandomForest::fit(x, y, spec.mode, &params.forest(spec.mode, p), &mut rng))
                }
                Family::NeuralNet => Fitted::Mlp(Mlp::fit(x, y, spec.mode, &params.nn, &mut rng)),
                Family::DecisionTree => Fitted::Tree(PrunedTree::fit(x, y, &params.cart, &mut rng)),
                Family::Svm => Fitted::Svm(LinearSvm::fit(x, y, spec.mode, &params.svm)),
                Family::Knn => Fitted::Knn(Knn::fit(x, y, params.knn_k)),
            }
        }
        Mode::Regression => {
            if y.iter().all(|&v| v == y[0]) {
                log::warn!("{}: zero-variance target, using a constant predictor", spec.id());
                Fitted::Constant(y[0])
            } else {
                match spec.family {
                    Family::Statistical => Fitted::Linear(ols(x, y)),
                    Family::RandomForest => {
                        Fitted::Forest(RandomForest::fit(x, y, spec.mode, &params.forest(spec.mode, p), &mut rng))
                    }
                    Family::NeuralNet => Fitted::Mlp(Mlp::fit(x, y, spec.mode, &params.nn, &mut rng)),
                    Family::DecisionTree => Fitted::Tree(PrunedTree::fit(x, y, &params.cart, &mut rng)),
                    Family::Svm => Fitted::Svm(LinearSvm::fit(x, y, spec.mode, &params.svm)),
                    Family::Knn => Fitted::Knn(Knn::fit(x, y, params.knn_k)),
                }
            }
        }
    };
    Ok(TrainedModel { spec: spec.clone(), training_feature_names: names.to_vec(), fitted })
}

impl TrainedModel {
    /// Wrap an already-fitted state, e.g. a hand-built logistic model.
    pub fn from_parts(spec: LearnerSpec, training_feature_names: Vec<String>, fitted: Fitted) -> Self {
        Self { spec, training_feature_names, fitted }
    }

    pub fn n_features(&self) -> usize {
        self.training_feature_names.len()
    }

    pub fn score_row(&self, row: &[f64]) -> f64 {
        match &self.fitted {
            Fitted::Constant(c) => *c,
            Fitted::Linear(f) => f.predict_row(row),
            Fitted::Logistic(f) => linear::sigmoid(f.predict_row(row)),
            Fitted::Forest(f) => f.predict_row(row),
            Fitted::Tree(t) => t.tree.predict_row(row),
            Fitted::Mlp(m) => m.predict_row(row),
            Fitted::Svm(s) => s.predict_row(row),
            Fitted::Knn(k) => k.predict_row(row),
        }
    }

    /// One continuous score per row: class-1 probability-like values in
    /// `[0, 1]` for classifiers, predicted counts for regressors.
    pub fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.n_cols() != self.n_features() {
            return Err(Error::ArityMismatch { expected: self.n_features(), actual: x.n_cols() });
        }
        Ok(match &self.fitted {
            Fitted::Forest(f) => f.predict_matrix(x),
            _ => x.rows().map(|r| self.score_row(r)).collect(),
        })
    }

    /// Normalized total impurity decrease per feature (all zeros when the
    /// model never split).
    pub fn impurity_importance(&self) -> Result<Vec<f64>> {
        let p = self.n_features();
        let raw = match &self.fitted {
            Fitted::Forest(f) => f.raw_importance(p),
            Fitted::Tree(t) => {
                let mut out = vec![0.0; p];
                t.tree.accumulate_importance(&mut out);
                out
            }
            Fitted::Constant(_) if self.spec.family.has_impurity_importance() => vec![0.0; p],
            _ => {
                return Err(Error::Unsupported(format!(
                    "impurity importance is not defined for {}",
                    self.spec.family
                )))
            }
        };
        let total: f64 = raw.iter().sum();
        Ok(if total > 0.0 { raw.iter().map(|v| v / total).collect() } else { raw })
    }
}
