//! Multiclass models over TF-IDF feature vectors.
//!
//! Four algorithms share one training entry point: multinomial naive Bayes,
//! one-vs-all logistic regression, a random forest, and one-vs-all
//! gradient-boosted regression trees. Defaults follow the usual parameter
//! table for these learners (forest: 8 trees, depth 32, 128 random splits
//! per node, 1 sample per leaf; boosting: 20 leaves, 10 samples per leaf,
//! learning rate 0.2, 100 trees; logistic regression: L2 weight 1,
//! tolerance 1e-7).

mod boost;
mod forest;
mod logreg;
mod nb;
mod tree;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::RefactoringType;
use crate::error::{Error, Result};
use crate::features::{FeatureVector, Vocabulary};

pub use boost::{BoostedClass, GbtModel, GbtParams};
pub use forest::{ForestModel, RfParams};
pub use logreg::{logreg_gradient, BinaryLogReg, Gradient, LogRegBatch, LogRegModel, LogRegParams};
pub use nb::{NbModel, NbParams};
pub use tree::{Node, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Nb,
    Logreg,
    Rf,
    Gbt,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Nb, Algorithm::Logreg, Algorithm::Rf, Algorithm::Gbt];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Nb => "nb",
            Algorithm::Logreg => "logreg",
            Algorithm::Rf => "rf",
            Algorithm::Gbt => "gbt",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Algorithm::Nb => "Multinomial Naive Bayes",
            Algorithm::Logreg => "Logistic Regression",
            Algorithm::Rf => "Random Forest",
            Algorithm::Gbt => "One-vs-All Gradient Boosted Machine",
        }
    }

    /// Whether class scores form a probability distribution.
    pub fn is_probabilistic(self) -> bool {
        matches!(self, Algorithm::Nb | Algorithm::Logreg)
    }

    /// Full hyperparameter table with defaults.
    pub fn default_hyperparameters(self) -> BTreeMap<String, f64> {
        match self {
            Algorithm::Nb => NbParams::default().to_map(),
            Algorithm::Logreg => LogRegParams::default().to_map(),
            Algorithm::Rf => RfParams::default().to_map(),
            Algorithm::Gbt => GbtParams::default().to_map(),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm {s:?}")))
    }
}

/// Featurization settings shared by training and prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub n_max: usize,
    pub k_select: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            n_max: 2,
            k_select: 5000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub algorithm: Algorithm,
    /// Overrides on top of the algorithm defaults. Unknown names are rejected.
    pub hyperparameters: BTreeMap<String, f64>,
    pub pipeline: PipelineConfig,
    pub include_none: bool,
}

impl ModelConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        ModelConfig {
            algorithm,
            hyperparameters: BTreeMap::new(),
            pipeline: PipelineConfig::default(),
            include_none: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.pipeline.seed = seed;
        self
    }

    pub fn with_pipeline(mut self, n_max: usize, k_select: usize) -> Self {
        self.pipeline.n_max = n_max;
        self.pipeline.k_select = k_select;
        self
    }

    pub fn with_hyperparameter(mut self, name: &str, value: f64) -> Self {
        self.hyperparameters.insert(name.to_string(), value);
        self
    }

    pub fn with_include_none(mut self, include_none: bool) -> Self {
        self.include_none = include_none;
        self
    }

    /// Defaults merged with overrides; fails on names the algorithm does not know.
    pub fn resolved_hyperparameters(&self) -> Result<BTreeMap<String, f64>> {
        let mut all = self.algorithm.default_hyperparameters();
        for (name, value) in &self.hyperparameters {
            match all.get_mut(name) {
                Some(slot) => *slot = *value,
                None => {
                    return Err(Error::InvalidConfig(format!(
                        "{} has no hyperparameter {name:?}",
                        self.algorithm
                    )))
                }
            }
        }
        Ok(all)
    }
}

pub(crate) fn param(map: &BTreeMap<String, f64>, name: &str) -> f64 {
    map[name]
}

pub(crate) fn count_param(map: &BTreeMap<String, f64>, name: &str) -> Result<usize> {
    let v = map[name];
    if v.is_finite() && v >= 0.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidConfig(format!("{name} must be a nonnegative integer, got {v}")))
    }
}

/// Learned state per algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum ModelParameters {
    Nb(NbModel),
    Logreg(LogRegModel),
    Rf(ForestModel),
    Gbt(GbtModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    /// Classes seen in training, in alphabetical order of canonical name.
    pub class_order: Vec<RefactoringType>,
    pub parameters: ModelParameters,
}

/// Per-class scores in class order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScores {
    scores: Vec<(RefactoringType, f64)>,
}

impl ClassScores {
    pub fn new(scores: Vec<(RefactoringType, f64)>) -> Self {
        ClassScores { scores }
    }

    pub fn scores(&self) -> &[(RefactoringType, f64)] {
        &self.scores
    }

    pub fn get(&self, class: RefactoringType) -> Option<f64> {
        self.scores.iter().find(|(c, _)| *c == class).map(|&(_, s)| s)
    }

    /// Highest-scoring class; ties go to the earlier class.
    pub fn label(&self) -> RefactoringType {
        let mut best = self.scores[0];
        for &(class, score) in &self.scores[1..] {
            if score > best.1 {
                best = (class, score);
            }
        }
        best.0
    }

    pub fn sum(&self) -> f64 {
        self.scores.iter().map(|(_, s)| s).sum()
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.scores
            .iter()
            .map(|(c, s)| (c.name().to_string(), *s))
            .collect()
    }
}

/// Feature vectors re-keyed by column position in the selected feature list.
#[derive(Debug, Clone)]
pub(crate) struct Design {
    pub rows: Vec<Vec<(u32, f64)>>,
    pub n_cols: usize,
}

pub(crate) fn to_columns(doc: &FeatureVector, vocab: &Vocabulary) -> Vec<(u32, f64)> {
    let mut row: Vec<(u32, f64)> = doc
        .entries()
        .iter()
        .filter_map(|&(id, w)| vocab.column(id).map(|c| (c as u32, w)))
        .collect();
    row.sort_unstable_by_key(|&(c, _)| c);
    row
}

impl Design {
    fn new(docs: &[FeatureVector], vocab: &Vocabulary) -> Self {
        Design {
            rows: docs.iter().map(|d| to_columns(d, vocab)).collect(),
            n_cols: vocab.selected().len(),
        }
    }
}

/// Value of column `col` in a column-sorted sparse row.
pub(crate) fn row_value(row: &[(u32, f64)], col: u32) -> f64 {
    match row.binary_search_by_key(&col, |&(c, _)| c) {
        Ok(i) => row[i].1,
        Err(_) => 0.0,
    }
}

pub fn train(
    config: &ModelConfig,
    docs: &[FeatureVector],
    labels: &[RefactoringType],
    vocab: &Vocabulary,
) -> Result<TrainedModel> {
    if docs.len() != labels.len() {
        return Err(Error::InvalidConfig(format!(
            "{} vectors but {} labels",
            docs.len(),
            labels.len()
        )));
    }
    let class_order: Vec<RefactoringType> = labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if class_order.len() < 2 {
        return Err(Error::SingleClass);
    }
    if class_order.contains(&RefactoringType::None) && !config.include_none {
        return Err(Error::InvalidConfig(
            "None-labeled records require include_none".into(),
        ));
    }
    if config.include_none && !class_order.contains(&RefactoringType::None) {
        return Err(Error::InvalidConfig(
            "include_none requires None-labeled training records".into(),
        ));
    }
    for &class in &class_order {
        let available = labels.iter().filter(|&&l| l == class).count();
        if available < 2 {
            return Err(Error::InsufficientClass {
                class,
                available,
                requested: 2,
            });
        }
    }
    if docs.iter().all(FeatureVector::is_empty) {
        return Err(Error::EmptyFeatures);
    }

    let hyper = config.resolved_hyperparameters()?;
    let design = Design::new(docs, vocab);
    let targets: Vec<usize> = labels
        .iter()
        .map(|l| class_order.binary_search(l).expect("label is in class order"))
        .collect();
    let k = class_order.len();
    let seed = config.pipeline.seed;

    let parameters = match config.algorithm {
        Algorithm::Nb => ModelParameters::Nb(NbModel::fit(&NbParams::from_map(&hyper)?, &design, &targets, k)?),
        Algorithm::Logreg => ModelParameters::Logreg(LogRegModel::fit(
            &LogRegParams::from_map(&hyper)?,
            &design,
            &targets,
            k,
        )?),
        Algorithm::Rf => ModelParameters::Rf(ForestModel::fit(
            &RfParams::from_map(&hyper)?,
            &design,
            &targets,
            k,
            seed,
        )?),
        Algorithm::Gbt => ModelParameters::Gbt(GbtModel::fit(&GbtParams::from_map(&hyper)?, &design, &targets, k)?),
    };

    Ok(TrainedModel {
        config: ModelConfig {
            hyperparameters: hyper,
            ..config.clone()
        },
        vocab: vocab.clone(),
        class_order,
        parameters,
    })
}

impl TrainedModel {
    pub fn algorithm(&self) -> Algorithm {
        self.config.algorithm
    }

    pub fn predict(&self, doc: &FeatureVector) -> ClassScores {
        let row = to_columns(doc, &self.vocab);
        let raw = match &self.parameters {
            ModelParameters::Nb(m) => m.scores(&row),
            ModelParameters::Logreg(m) => m.scores(&row),
            ModelParameters::Rf(m) => m.scores(&row, self.class_order.len()),
            ModelParameters::Gbt(m) => m.scores(&row),
        };
        ClassScores::new(self.class_order.iter().copied().zip(raw).collect())
    }
}

pub fn predict(model: &TrainedModel, doc: &FeatureVector) -> ClassScores {
    model.predict(doc)
}

/// Numerically stable `ln(1 + e^z)`.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Exponentiates and normalizes log-scores so they sum to one.
pub(crate) fn normalize_log_scores(log_scores: &[f64]) -> Vec<f64> {
    let max = log_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = log_scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}
