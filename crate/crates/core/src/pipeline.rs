//! End-to-end training from raw messages, and the persisted model file.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{self, Algorithm, ClassScores, ModelConfig, TrainedModel};
use crate::corpus::{Dataset, RefactoringType, RNG_ALGORITHM};
use crate::error::{Error, Result};
use crate::features::{build_vocabulary, vectorize};
use crate::textprep::{PreprocessedDoc, Preprocessor};

pub const FORMAT_VERSION: u32 = 1;

pub fn preprocess_all(messages: &[&str]) -> Vec<PreprocessedDoc> {
    let pre = Preprocessor::default();
    messages.par_iter().map(|m| pre.preprocess(m)).collect()
}

/// Builds the vocabulary on `d` and trains the configured model on it.
pub fn fit(d: &Dataset, config: &ModelConfig) -> Result<TrainedModel> {
    if d.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let labels = d.require_labels()?;
    let messages: Vec<&str> = d.records().iter().map(|r| r.message.as_str()).collect();
    let docs = preprocess_all(&messages);
    let vocab = build_vocabulary(&docs, &labels, config.pipeline.n_max, config.pipeline.k_select)?;
    let vectors: Vec<_> = docs.par_iter().map(|doc| vectorize(doc, &vocab)).collect();
    classifiers::train(config, &vectors, &labels, &vocab)
}

pub fn predict_message(model: &TrainedModel, message: &str) -> ClassScores {
    let doc = Preprocessor::default().preprocess(message);
    model.predict(&vectorize(&doc, &model.vocab))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub corpus_fingerprint: String,
    pub n_records: usize,
    pub rng: String,
    /// RFC 3339 or epoch seconds; omitted unless requested so files are reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub metadata: TrainingMetadata,
    pub model: TrainedModel,
}

fn notes_for(algorithm: Algorithm) -> Vec<String> {
    let mut notes = vec!["class scores: argmax, ties to the earliest class in class_order".to_string()];
    match algorithm {
        Algorithm::Nb => notes.push("multinomial likelihood over tf-idf mass".into()),
        Algorithm::Logreg => notes.push(
            "gradient descent with backtracking line search; L2 only, no L1 term".into(),
        ),
        Algorithm::Rf => notes.push("class score = fraction of trees voting for the class".into()),
        Algorithm::Gbt => notes.push("class score = sigmoid of the boosted one-vs-all margin".into()),
    }
    notes
}

impl ModelFile {
    pub fn new(model: TrainedModel, corpus: &Dataset, created_at: Option<String>) -> Self {
        ModelFile {
            format_version: FORMAT_VERSION,
            metadata: TrainingMetadata {
                seed: model.config.pipeline.seed,
                corpus_fingerprint: corpus.fingerprint(),
                n_records: corpus.len(),
                rng: RNG_ALGORITHM.to_string(),
                created_at,
                notes: notes_for(model.algorithm()),
            },
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::DataFile {
                name: "model file".into(),
                message: "missing format_version".into(),
            })?;
        if found != u64::from(FORMAT_VERSION) {
            return Err(Error::ModelVersion {
                found: u32::try_from(found).unwrap_or(u32::MAX),
                expected: FORMAT_VERSION,
            });
        }
        Ok(serde_json::from_value(value)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn includes_none(&self) -> bool {
        self.model.class_order.contains(&RefactoringType::None)
    }
}
