//! Classifiers, evaluation, feature ranking and selection.
//!
//! Learners ignore columns with no observed value in the training data
//! and train on rows without missing values in the remaining columns
//! (other rows are dropped and counted); at prediction time each learner
//! has its own missing-value policy.

mod bayes;
mod igr;
mod linalg;
mod logistic;
mod pca;
mod select;
mod tree;

pub use bayes::{Gaussian, NaiveBayes};
pub use igr::{igr, igr_rank, igr_values, IgrEntry, DEFAULT_BINS};
pub use logistic::Logistic;
pub use pca::{pca_fit, pca_reduce, Pca};
pub use select::{best_first, wrapper_select, SearchOutcome, Selection, SelectionOptions};
pub use tree::{DecisionTree, Node};

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{time_split, undersample, DatasetError, FeatureMatrix, SampleSpec};
use crate::num;
use tree::{SplitRule, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LearnerKind {
    DecisionTree,
    RandomForest,
    NaiveBayes,
    Logistic,
    Bagging,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 5] = [
        LearnerKind::DecisionTree,
        LearnerKind::RandomForest,
        LearnerKind::NaiveBayes,
        LearnerKind::Logistic,
        LearnerKind::Bagging,
    ];

    pub fn code(self) -> &'static str {
        match self {
            LearnerKind::DecisionTree => "dt",
            LearnerKind::RandomForest => "rf",
            LearnerKind::NaiveBayes => "nb",
            LearnerKind::Logistic => "logistic",
            LearnerKind::Bagging => "bagging",
        }
    }

    /// Accepts the short codes plus a few common spellings (`j48`,
    /// `random-forest`, `naive-bayes`, ...), case-insensitively.
    pub fn from_code(code: &str) -> Option<Self> {
        let c: String = code.chars().filter(|c| c.is_ascii_alphanumeric()).map(|c| c.to_ascii_lowercase()).collect();
        match c.as_str() {
            "dt" | "j48" | "decisiontree" | "tree" => Some(LearnerKind::DecisionTree),
            "rf" | "randomforest" | "forest" => Some(LearnerKind::RandomForest),
            "nb" | "naivebayes" | "bayes" => Some(LearnerKind::NaiveBayes),
            "logistic" | "lr" | "logisticregression" => Some(LearnerKind::Logistic),
            "bagging" | "bag" => Some(LearnerKind::Bagging),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerParams {
    /// Pruning confidence factor of the single decision tree.
    pub confidence: f64,
    /// Minimum rows per leaf for the single tree and bagged trees.
    pub min_leaf: usize,
    /// Random forest size.
    pub trees: usize,
    /// Random features tried per forest split; `None` means `⌊√d⌋`.
    pub features_per_split: Option<usize>,
    pub bagging_iterations: usize,
    pub ridge: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for LearnerParams {
    fn default() -> Self {
        LearnerParams {
            confidence: 0.25,
            min_leaf: 2,
            trees: 100,
            features_per_split: None,
            bagging_iterations: 10,
            ridge: 1e-8,
            max_iterations: 100,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    pub params: LearnerParams,
    pub seed: u64,
}

impl LearnerSpec {
    pub fn new(kind: LearnerKind) -> Self {
        LearnerSpec {
            kind,
            params: LearnerParams::default(),
            seed: 0,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        LearnerSpec { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        let p = &self.params;
        let bad = |what: &str| Err(LearnError::InvalidParameter(what.to_string()));
        match self.kind {
            LearnerKind::DecisionTree | LearnerKind::Bagging if !(p.confidence > 0.0 && p.confidence <= 0.5) => bad("confidence must lie in (0, 0.5]"),
            LearnerKind::DecisionTree | LearnerKind::Bagging if p.min_leaf == 0 => bad("min_leaf must be at least 1"),
            LearnerKind::RandomForest if p.trees == 0 => bad("trees must be at least 1"),
            LearnerKind::RandomForest if p.features_per_split == Some(0) => bad("features_per_split must be at least 1"),
            LearnerKind::Bagging if p.bagging_iterations == 0 => bad("bagging_iterations must be at least 1"),
            LearnerKind::Logistic if !(p.ridge >= 0.0 && p.ridge.is_finite()) => bad("ridge must be a finite non-negative number"),
            LearnerKind::Logistic if p.max_iterations == 0 => bad("max_iterations must be at least 1"),
            LearnerKind::Logistic if !(p.tolerance > 0.0) => bad("tolerance must be positive"),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error("training data holds a single class")]
    SingleClassTraining,
    #[error("non-finite value in row {row}, feature {feature}")]
    NonFiniteFeature { row: usize, feature: String },
    #[error("model expects features {expected:?}, got {found:?}")]
    FeatureMismatch { expected: Vec<String>, found: Vec<String> },
    #[error("invalid learner parameter: {0}")]
    InvalidParameter(String),
    #[error("missing values in columns passed to PCA")]
    MissingValues,
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelBody {
    Tree(DecisionTree),
    Forest(Vec<DecisionTree>),
    Bayes(NaiveBayes),
    Logistic(Logistic),
    Bagging(Vec<DecisionTree>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: LearnerKind,
    pub features: Vec<String>,
    pub body: ModelBody,
    pub seed: u64,
    pub training_rows: usize,
    /// Training rows dropped for holding a missing value.
    pub dropped_rows: usize,
    /// Columns never observed in training; read as missing at prediction.
    #[serde(default)]
    pub ignored_columns: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub impacted: bool,
    /// Model confidence in the impacted class, in `[0, 1]`.
    pub score: f64,
}

fn bootstrap<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Fits a model; deterministic given the matrix and `spec.seed`.
pub fn train(spec: &LearnerSpec, matrix: &FeatureMatrix) -> Result<TrainedModel, LearnError> {
    spec.validate()?;
    matrix.check_rectangular()?;
    for (i, row) in matrix.rows.iter().enumerate() {
        if let Some(f) = row.values.iter().position(|v| v.is_some_and(|v| !v.is_finite())) {
            return Err(LearnError::NonFiniteFeature {
                row: i,
                feature: matrix.features[f].clone(),
            });
        }
    }
    let ignored: Vec<usize> = (0..matrix.features.len())
        .filter(|&c| matrix.rows.iter().all(|r| r.values[c].is_none()))
        .collect();
    let complete: Vec<&crate::dataset::FeatureRow> = matrix
        .rows
        .iter()
        .filter(|r| r.values.iter().enumerate().all(|(c, v)| v.is_some() || ignored.contains(&c)))
        .collect();
    let x: Vec<Vec<f64>> = complete.iter().map(|r| r.values.iter().map(|v| v.unwrap_or(0.0)).collect()).collect();
    let y: Vec<bool> = complete.iter().map(|r| r.impacted).collect();
    let pos = y.iter().filter(|&&v| v).count();
    if pos == 0 || pos == y.len() {
        return Err(LearnError::SingleClassTraining);
    }

    let p = &spec.params;
    let d = matrix.features.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = x.len();
    let body = match spec.kind {
        LearnerKind::DecisionTree => ModelBody::Tree(DecisionTree::fit(
            &x,
            &y,
            (0..n).collect(),
            &TreeParams {
                min_leaf: p.min_leaf,
                rule: SplitRule::GainRatio,
                features_per_split: None,
                prune_confidence: Some(p.confidence),
            },
            &mut rng,
        )),
        LearnerKind::RandomForest => {
            let k = p.features_per_split.unwrap_or_else(|| (num::floor(num::sqrt(d as f64)) as usize).max(1));
            let params = TreeParams {
                min_leaf: 1,
                rule: SplitRule::Gain,
                features_per_split: Some(k),
                prune_confidence: None,
            };
            ModelBody::Forest(
                (0..p.trees)
                    .map(|_| {
                        let rows = bootstrap(n, &mut rng);
                        DecisionTree::fit(&x, &y, rows, &params, &mut rng)
                    })
                    .collect(),
            )
        }
        LearnerKind::Bagging => {
            let params = TreeParams {
                min_leaf: p.min_leaf,
                rule: SplitRule::GainRatio,
                features_per_split: None,
                prune_confidence: Some(p.confidence),
            };
            ModelBody::Bagging(
                (0..p.bagging_iterations)
                    .map(|_| {
                        let rows = bootstrap(n, &mut rng);
                        DecisionTree::fit(&x, &y, rows, &params, &mut rng)
                    })
                    .collect(),
            )
        }
        LearnerKind::NaiveBayes => ModelBody::Bayes(NaiveBayes::fit(&x, &y)),
        LearnerKind::Logistic => ModelBody::Logistic(Logistic::fit(&x, &y, p.ridge, p.max_iterations, p.tolerance)),
    };
    Ok(TrainedModel {
        kind: spec.kind,
        features: matrix.features.clone(),
        body,
        seed: spec.seed,
        training_rows: n,
        dropped_rows: matrix.rows.len() - n,
        ignored_columns: ignored,
    })
}

/// Classifies one row. Ties (score exactly 0.5, or an even bagging vote)
/// go to the non-impacted class.
pub fn predict(model: &TrainedModel, row: &[Option<f64>]) -> Result<Prediction, LearnError> {
    if row.len() != model.features.len() {
        return Err(LearnError::FeatureMismatch {
            expected: model.features.clone(),
            found: alloc::vec![format!("{} values", row.len())],
        });
    }
    let masked: Vec<Option<f64>>;
    let row = if model.ignored_columns.is_empty() {
        row
    } else {
        masked = row
            .iter()
            .enumerate()
            .map(|(c, v)| if model.ignored_columns.contains(&c) { None } else { *v })
            .collect();
        &masked
    };
    let mean = |trees: &[DecisionTree]| trees.iter().map(|t| t.probability(row)).sum::<f64>() / trees.len() as f64;
    Ok(match &model.body {
        ModelBody::Tree(t) => threshold(t.probability(row)),
        ModelBody::Forest(trees) => threshold(mean(trees)),
        ModelBody::Bayes(nb) => threshold(nb.probability(row)),
        ModelBody::Logistic(lr) => threshold(lr.probability(row)),
        ModelBody::Bagging(trees) => {
            let yes = trees.iter().filter(|t| t.probability(row) > 0.5).count();
            Prediction {
                impacted: 2 * yes > trees.len(),
                score: mean(trees),
            }
        }
    })
}

fn threshold(score: f64) -> Prediction {
    Prediction {
        impacted: score > 0.5,
        score,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// `TP / (TP + FP)`, 0 when nothing was predicted impacted.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// `TP / (TP + FN)`, 0 when nothing is impacted.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        self.f_measure(1.0)
    }

    /// Weighted harmonic mean of precision and recall; `beta > 1` favours recall.
    pub fn f_measure(&self, beta: f64) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        let b2 = beta * beta;
        let denom = b2 * p + r;
        if denom > 0.0 {
            (1.0 + b2) * p * r / denom
        } else {
            0.0
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn evaluate(model: &TrainedModel, test: &FeatureMatrix) -> Result<Confusion, LearnError> {
    if test.features != model.features {
        return Err(LearnError::FeatureMismatch {
            expected: model.features.clone(),
            found: test.features.clone(),
        });
    }
    let mut c = Confusion::default();
    for row in &test.rows {
        let p = predict(model, &row.values)?;
        match (p.impacted, row.impacted) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSample {
    pub seed: u64,
    #[serde(flatten)]
    pub confusion: Confusion,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl EvalSample {
    pub fn new(seed: u64, confusion: Confusion) -> Self {
        EvalSample {
            seed,
            confusion,
            precision: confusion.precision(),
            recall: confusion.recall(),
            f1: confusion.f1(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub learner: String,
    pub params: LearnerParams,
    pub seeds: Vec<u64>,
    pub per_sample: Vec<EvalSample>,
    pub mean: Scores,
    /// Sample standard deviation; 0 for a single sample.
    pub stddev: Scores,
    pub features: Vec<String>,
    pub train_rows: usize,
    pub test_rows: usize,
    pub boundary_key: String,
    /// Training rows dropped per sample for holding a missing value.
    pub dropped_training_rows: Vec<usize>,
}

impl EvalReport {
    pub fn aggregate(samples: &[EvalSample]) -> (Scores, Scores) {
        let n = samples.len() as f64;
        let mean_of = |f: fn(&EvalSample) -> f64| if samples.is_empty() { 0.0 } else { samples.iter().map(f).sum::<f64>() / n };
        let sd_of = |f: fn(&EvalSample) -> f64, m: f64| {
            if samples.len() < 2 {
                0.0
            } else {
                num::sqrt(samples.iter().map(|s| (f(s) - m) * (f(s) - m)).sum::<f64>() / (n - 1.0))
            }
        };
        let mean = Scores {
            precision: mean_of(|s| s.precision),
            recall: mean_of(|s| s.recall),
            f1: mean_of(|s| s.f1),
        };
        let stddev = Scores {
            precision: sd_of(|s| s.precision, mean.precision),
            recall: sd_of(|s| s.recall, mean.recall),
            f1: sd_of(|s| s.f1, mean.f1),
        };
        (mean, stddev)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOptions {
    pub train_fraction: f64,
    /// Variance fraction kept by a per-sample PCA; `None` skips PCA.
    pub pca_variance: Option<f64>,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        ProtocolOptions {
            train_fraction: 0.8,
            pca_variance: None,
        }
    }
}

/// Splits once by time, then per seed undersamples the training side,
/// trains and scores against the untouched test side.
pub fn run_protocol(spec: &LearnerSpec, matrix: &FeatureMatrix, sample: &SampleSpec, options: &ProtocolOptions) -> Result<EvalReport, LearnError> {
    spec.validate()?;
    let split = time_split(matrix, options.train_fraction)?;
    let seeds = sample.seeds();
    let mut per_sample = Vec::with_capacity(seeds.len());
    let mut dropped = Vec::with_capacity(seeds.len());
    for &seed in &seeds {
        let balanced = undersample(&split.train, seed)?;
        let (train_m, test_m) = match options.pca_variance {
            Some(v) => {
                let complete = FeatureMatrix {
                    features: balanced.features.clone(),
                    rows: balanced.rows.iter().filter(|r| r.values.iter().all(Option::is_some)).cloned().collect(),
                };
                let pca = pca_fit(&complete, v)?;
                (pca.transform(&complete), pca.transform(&split.test))
            }
            None => (balanced, split.test.clone()),
        };
        let model = train(&spec.with_seed(seed), &train_m)?;
        dropped.push(model.dropped_rows);
        per_sample.push(EvalSample::new(seed, evaluate(&model, &test_m)?));
    }
    let (mean, stddev) = EvalReport::aggregate(&per_sample);
    Ok(EvalReport {
        learner: spec.kind.code().to_string(),
        params: spec.params.clone(),
        seeds,
        per_sample,
        mean,
        stddev,
        features: matrix.features.clone(),
        train_rows: split.train.len(),
        test_rows: split.test.len(),
        boundary_key: split.boundary_key,
        dropped_training_rows: dropped,
    })
}
