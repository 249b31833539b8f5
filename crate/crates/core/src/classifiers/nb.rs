use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{normalize_log_scores, param, Design};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NbParams {
    /// Laplace smoothing added to every feature mass.
    pub alpha: f64,
}

impl Default for NbParams {
    fn default() -> Self {
        NbParams { alpha: 1.0 }
    }
}

impl NbParams {
    pub fn to_map(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([("alpha".to_string(), self.alpha)])
    }

    pub fn from_map(map: &BTreeMap<String, f64>) -> Result<Self> {
        let alpha = param(map, "alpha");
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("alpha must be positive, got {alpha}")));
        }
        Ok(NbParams { alpha })
    }
}

/// Multinomial naive Bayes over TF-IDF mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub class_log_prior: Vec<f64>,
    /// `feature_log_prob[class][column]`
    pub feature_log_prob: Vec<Vec<f64>>,
}

impl NbModel {
    pub(crate) fn fit(params: &NbParams, design: &Design, targets: &[usize], n_classes: usize) -> Result<Self> {
        let n_cols = design.n_cols;
        let mut mass = vec![vec![0.0f64; n_cols]; n_classes];
        let mut count = vec![0usize; n_classes];
        for (row, &t) in design.rows.iter().zip(targets) {
            count[t] += 1;
            for &(c, w) in row {
                mass[t][c as usize] += w;
            }
        }
        let n = targets.len() as f64;
        let class_log_prior = count.iter().map(|&c| (c as f64 / n).ln()).collect();
        let feature_log_prob = mass
            .into_iter()
            .map(|m| {
                let total: f64 = m.iter().sum::<f64>() + params.alpha * n_cols as f64;
                m.into_iter().map(|x| ((x + params.alpha) / total).ln()).collect()
            })
            .collect();
        Ok(NbModel {
            class_log_prior,
            feature_log_prob,
        })
    }

    pub(crate) fn scores(&self, row: &[(u32, f64)]) -> Vec<f64> {
        let log_joint: Vec<f64> = self
            .class_log_prior
            .iter()
            .zip(&self.feature_log_prob)
            .map(|(&prior, probs)| {
                prior + row.iter().map(|&(c, w)| w * probs[c as usize]).sum::<f64>()
            })
            .collect();
        normalize_log_scores(&log_joint)
    }
}
