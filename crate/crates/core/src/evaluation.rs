//! Stratified k-fold cross-validation, confusion matrices and P/R/F metrics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{ModelConfig, TrainedModel};
use crate::corpus::{Dataset, RefactoringType};
use crate::error::{Error, Result};
use crate::pipeline::{fit, predict_message};

/// Row = true class, column = predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<RefactoringType>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(classes: Vec<RefactoringType>) -> Self {
        let n = classes.len();
        ConfusionMatrix {
            classes,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn index(&self, class: RefactoringType) -> Option<usize> {
        self.classes.iter().position(|&c| c == class)
    }

    pub fn get(&self, truth: RefactoringType, predicted: RefactoringType) -> u64 {
        match (self.index(truth), self.index(predicted)) {
            (Some(i), Some(j)) => self.counts[i][j],
            _ => 0,
        }
    }

    pub fn add(&mut self, truth: RefactoringType, predicted: RefactoringType) -> Result<()> {
        let unknown = |c: RefactoringType| Error::UnknownLabel {
            label: c.name().to_string(),
            line: None,
        };
        let i = self.index(truth).ok_or_else(|| unknown(truth))?;
        let j = self.index(predicted).ok_or_else(|| unknown(predicted))?;
        self.counts[i][j] += 1;
        Ok(())
    }

    /// Row sum for class `i`.
    pub fn support(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }
}

pub fn confusion_matrix(
    pairs: &[(RefactoringType, RefactoringType)],
    classes: &[RefactoringType],
) -> Result<ConfusionMatrix> {
    let mut m = ConfusionMatrix::zeros(classes.to_vec());
    for &(truth, predicted) in pairs {
        m.add(truth, predicted)?;
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub support: u64,
    /// Some ratio was 0/0 and was set to 0.
    pub zero_division: bool,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn per_class_metrics(m: &ConfusionMatrix) -> BTreeMap<RefactoringType, ClassMetrics> {
    let n = m.classes.len();
    (0..n)
        .map(|c| {
            let tp = m.counts[c][c];
            let col: u64 = (0..n).map(|r| m.counts[r][c]).sum();
            let row = m.support(c);
            let (precision, p0) = ratio(tp, col);
            let (recall, r0) = ratio(tp, row);
            // 2PR/(P+R) reduced to counts, so the only rounding is one division
            let (f_measure, f0) = if tp > 0 {
                ((2 * tp) as f64 / (row + col) as f64, false)
            } else {
                (0.0, true)
            };
            (
                m.classes[c],
                ClassMetrics {
                    precision,
                    recall,
                    f_measure,
                    support: row,
                    zero_division: p0 || r0 || f0,
                },
            )
        })
        .collect()
}

/// Unweighted mean over classes that occur as true labels.
pub fn macro_average(per_class: &BTreeMap<RefactoringType, ClassMetrics>) -> ClassMetrics {
    let present: Vec<&ClassMetrics> = per_class.values().filter(|m| m.support > 0).collect();
    let n = present.len().max(1) as f64;
    ClassMetrics {
        precision: present.iter().map(|m| m.precision).sum::<f64>() / n,
        recall: present.iter().map(|m| m.recall).sum::<f64>() / n,
        f_measure: present.iter().map(|m| m.f_measure).sum::<f64>() / n,
        support: present.iter().map(|m| m.support).sum(),
        zero_division: present.iter().any(|m| m.zero_division),
    }
}

/// Metrics derived from one confusion matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub per_class: BTreeMap<RefactoringType, ClassMetrics>,
    #[serde(rename = "macro")]
    pub macro_avg: ClassMetrics,
    pub matrix: ConfusionMatrix,
    /// Classes where a 0/0 ratio was reported as 0.
    pub zero_division_classes: Vec<RefactoringType>,
}

impl MetricsSummary {
    pub fn from_matrix(matrix: ConfusionMatrix) -> Self {
        let per_class = per_class_metrics(&matrix);
        let macro_avg = macro_average(&per_class);
        let zero_division_classes = per_class
            .iter()
            .filter(|(_, m)| m.zero_division)
            .map(|(&c, _)| c)
            .collect();
        MetricsSummary {
            per_class,
            macro_avg,
            matrix,
            zero_division_classes,
        }
    }

    /// Aligned P / R / F1 table, one row per class that has support.
    pub fn render_table(&self, title: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{title}");
        let _ = writeln!(out, "{:<18} {:>9} {:>9} {:>9} {:>8}", "Refactoring Type", "Precision", "Recall", "F1", "Support");
        let ordered = RefactoringType::ALL.iter().filter_map(|c| self.per_class.get(c).map(|m| (c, m)));
        for (class, m) in ordered.filter(|(_, m)| m.support > 0) {
            let _ = writeln!(
                out,
                "{:<18} {:>9.2} {:>9.2} {:>9.2} {:>8}",
                class.display_name(),
                m.precision,
                m.recall,
                m.f_measure,
                m.support
            );
        }
        let m = &self.macro_avg;
        let _ = writeln!(
            out,
            "{:<18} {:>9.2} {:>9.2} {:>9.2} {:>8}",
            "Macro average", m.precision, m.recall, m.f_measure, m.support
        );
        if !self.zero_division_classes.is_empty() {
            let names: Vec<&str> = self.zero_division_classes.iter().map(|c| c.name()).collect();
            let _ = writeln!(out, "0/0 reported as 0 for: {}", names.join(", "));
        }
        out
    }
}

/// Fold index for every record. Each class is shuffled and dealt round-robin,
/// with the starting fold carried over between classes so fold sizes stay balanced.
pub fn stratified_folds(labels: &[RefactoringType], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 folds, got {folds}")));
    }
    let mut by_class: BTreeMap<RefactoringType, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    if let Some((&class, members)) = by_class.iter().find(|(_, v)| v.len() < folds) {
        return Err(Error::InsufficientClass {
            class,
            available: members.len(),
            requested: folds,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut offset = 0;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for (k, &i) in members.iter().enumerate() {
            assignment[i] = (offset + k) % folds;
        }
        offset = (offset + members.len()) % folds;
    }
    Ok(assignment)
}

/// Trains on every record outside `fold`.
pub fn train_fold(d: &Dataset, assignment: &[usize], fold: usize, config: &ModelConfig) -> Result<TrainedModel> {
    let train: Vec<usize> = (0..d.len()).filter(|&i| assignment[i] != fold).collect();
    fit(&d.select(&train), config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ModelConfig,
    pub folds: usize,
    pub seed: u64,
    /// PRNG behind the fold assignment.
    pub rng: String,
    /// How fold results were combined.
    pub aggregation: String,
    pub n_records: usize,
    #[serde(flatten)]
    pub summary: MetricsSummary,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn render_table(&self) -> String {
        self.summary.render_table(&format!(
            "{} ({}-fold cross-validation, seed {})",
            self.config.algorithm.display_name(),
            self.folds,
            self.seed
        ))
    }
}

/// Out-of-fold predicted label for every record.
pub fn out_of_fold_predictions(
    d: &Dataset,
    config: &ModelConfig,
    folds: usize,
    seed: u64,
) -> Result<Vec<RefactoringType>> {
    let labels = d.require_labels()?;
    let assignment = stratified_folds(&labels, folds, seed)?;
    let per_fold: Vec<Vec<(usize, RefactoringType)>> = (0..folds)
        .into_par_iter()
        .map(|fold| {
            let model = train_fold(d, &assignment, fold, config)?;
            Ok((0..d.len())
                .filter(|&i| assignment[i] == fold)
                .map(|i| (i, predict_message(&model, &d.records()[i].message).label()))
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut predicted = vec![RefactoringType::None; d.len()];
    for (i, p) in per_fold.into_iter().flatten() {
        predicted[i] = p;
    }
    Ok(predicted)
}

pub fn cross_validate(d: &Dataset, config: &ModelConfig, folds: usize, seed: u64) -> Result<EvalReport> {
    let labels = d.require_labels()?;
    let predicted = out_of_fold_predictions(d, config, folds, seed)?;
    let classes: Vec<RefactoringType> = d.class_counts().keys().copied().collect();
    let pairs: Vec<_> = labels.into_iter().zip(predicted).collect();
    let matrix = confusion_matrix(&pairs, &classes)?;
    Ok(EvalReport {
        config: ModelConfig {
            hyperparameters: config.resolved_hyperparameters()?,
            ..config.clone()
        },
        folds,
        seed,
        rng: crate::corpus::RNG_ALGORITHM.into(),
        aggregation: "pooled confusion matrix over all folds".into(),
        n_records: d.len(),
        summary: MetricsSummary::from_matrix(matrix),
    })
}

/// Keyword-baseline metrics; messages with no keyword hit land in the `None` column.
pub fn evaluate_baseline(d: &Dataset, rules: &crate::baseline::KeywordRules) -> Result<MetricsSummary> {
    let labels = d.require_labels()?;
    let mut classes: Vec<RefactoringType> = d.class_counts().keys().copied().collect();
    if !classes.contains(&RefactoringType::None) {
        classes.push(RefactoringType::None);
        classes.sort();
    }
    let pairs: Vec<_> = d
        .records()
        .iter()
        .zip(labels)
        .map(|(r, truth)| (truth, rules.predict(&r.message).label.unwrap_or(RefactoringType::None)))
        .collect();
    Ok(MetricsSummary::from_matrix(confusion_matrix(&pairs, &classes)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use RefactoringType::*;

    #[test]
    fn diagonal_and_off_diagonal() {
        let m = confusion_matrix(&[(ExtractMethod, MoveMethod); 3], &[ExtractMethod, MoveMethod]).unwrap();
        assert_eq!(m.counts, vec![vec![0, 3], vec![0, 0]]);
        let m = confusion_matrix(&[(ExtractMethod, ExtractMethod), (MoveMethod, MoveMethod)], &[ExtractMethod, MoveMethod])
            .unwrap();
        assert_eq!(m.counts, vec![vec![1, 0], vec![0, 1]]);
        assert!(confusion_matrix(&[(RenameMethod, MoveMethod)], &[MoveMethod]).is_err());
    }

    #[test]
    fn precision_from_counts() {
        let mut m = ConfusionMatrix::zeros(vec![ExtractMethod, MoveMethod]);
        m.counts = vec![vec![3, 0], vec![1, 0]];
        let p = per_class_metrics(&m);
        assert_eq!(p[&ExtractMethod].precision, 0.75);
        assert!(p[&MoveMethod].zero_division);
        assert_eq!(p[&MoveMethod].f_measure, 0.0);
    }

    #[test]
    fn rounded_rename_row() {
        let (p, r) = (0.91f64, 0.94f64);
        let f = 2.0 * p * r / (p + r);
        assert!((f - 0.9247).abs() < 1e-4);
    }

    #[test]
    fn folds_are_stratified() {
        let labels: Vec<_> = [ExtractMethod, ExtractMethod, MoveMethod, MoveMethod].to_vec();
        let a = stratified_folds(&labels, 2, 3).unwrap();
        for fold in 0..2 {
            for class in [ExtractMethod, MoveMethod] {
                let n = (0..4).filter(|&i| a[i] == fold && labels[i] == class).count();
                assert_eq!(n, 1);
            }
        }
        assert!(matches!(stratified_folds(&labels, 3, 0), Err(Error::InsufficientClass { .. })));
    }
}
