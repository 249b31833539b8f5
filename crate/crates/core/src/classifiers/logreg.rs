use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{count_param, param, sigmoid, softplus, Design};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRegParams {
    pub l2_weight: f64,
    /// Relative loss decrease below which optimization stops.
    pub optimization_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams {
            l2_weight: 1.0,
            optimization_tolerance: 1e-7,
            max_iterations: 1000,
        }
    }
}

impl LogRegParams {
    pub fn to_map(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("l2_weight".to_string(), self.l2_weight),
            ("optimization_tolerance".to_string(), self.optimization_tolerance),
            ("max_iterations".to_string(), self.max_iterations as f64),
        ])
    }

    pub fn from_map(map: &BTreeMap<String, f64>) -> Result<Self> {
        let p = LogRegParams {
            l2_weight: param(map, "l2_weight"),
            optimization_tolerance: param(map, "optimization_tolerance"),
            max_iterations: count_param(map, "max_iterations")?,
        };
        if p.l2_weight.is_nan() || p.l2_weight < 0.0 || p.optimization_tolerance.is_nan() || p.optimization_tolerance <= 0.0 {
            return Err(Error::InvalidConfig(
                "l2_weight must be >= 0 and optimization_tolerance > 0".into(),
            ));
        }
        Ok(p)
    }
}

/// One binary logistic model: `P(y = 1 | x) = sigmoid(w·x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryLogReg {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl BinaryLogReg {
    pub fn zeros(n_features: usize) -> Self {
        BinaryLogReg {
            weights: vec![0.0; n_features],
            bias: 0.0,
        }
    }

    pub fn margin(&self, row: &[(u32, f64)]) -> f64 {
        self.bias + row.iter().map(|&(c, x)| self.weights[c as usize] * x).sum::<f64>()
    }
}

/// Sparse rows with 0/1 targets.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRegBatch {
    pub rows: Vec<Vec<(u32, f64)>>,
    pub targets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub loss: f64,
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// Loss of `Σ_i [ln(1 + e^{z_i}) − y_i z_i] + (l2/2)·‖w‖²` with the unpenalized bias.
pub fn logreg_loss(params: &BinaryLogReg, batch: &LogRegBatch, l2_weight: f64) -> f64 {
    let data: f64 = batch
        .rows
        .iter()
        .zip(&batch.targets)
        .map(|(row, &y)| {
            let z = params.margin(row);
            softplus(z) - y * z
        })
        .sum();
    data + 0.5 * l2_weight * params.weights.iter().map(|w| w * w).sum::<f64>()
}

/// Analytic gradient of [`logreg_loss`].
pub fn logreg_gradient(params: &BinaryLogReg, batch: &LogRegBatch, l2_weight: f64) -> Gradient {
    let mut weights: Vec<f64> = params.weights.iter().map(|w| l2_weight * w).collect();
    let mut bias = 0.0;
    let mut loss = 0.5 * l2_weight * params.weights.iter().map(|w| w * w).sum::<f64>();
    for (row, &y) in batch.rows.iter().zip(&batch.targets) {
        let z = params.margin(row);
        loss += softplus(z) - y * z;
        let residual = sigmoid(z) - y;
        bias += residual;
        for &(c, x) in row {
            weights[c as usize] += residual * x;
        }
    }
    Gradient { loss, weights, bias }
}

fn step_to(params: &BinaryLogReg, g: &Gradient, t: f64) -> BinaryLogReg {
    BinaryLogReg {
        weights: params
            .weights
            .iter()
            .zip(&g.weights)
            .map(|(w, d)| w - t * d)
            .collect(),
        bias: params.bias - t * g.bias,
    }
}

fn grad_norm_sq(g: &Gradient) -> f64 {
    g.weights.iter().map(|d| d * d).sum::<f64>() + g.bias * g.bias
}

/// Full-batch gradient descent with Armijo backtracking; the trial step of
/// each iteration is the Barzilai-Borwein step of the previous one.
pub(crate) fn fit_binary(params: &LogRegParams, batch: &LogRegBatch, n_features: usize) -> Result<BinaryLogReg> {
    const ARMIJO: f64 = 1e-4;
    let l2 = params.l2_weight;
    let n = batch.rows.len() as f64;
    let mut current = BinaryLogReg::zeros(n_features);
    let mut grad = logreg_gradient(&current, batch, l2);
    // rows are L2-normalized, so with the bias column ‖x‖² ≤ 2
    let mut step = 1.0 / (0.5 * n + l2).max(1e-12);

    for _ in 0..params.max_iterations {
        let gnorm = grad_norm_sq(&grad);
        if gnorm.sqrt() <= params.optimization_tolerance {
            break;
        }
        let mut t = step;
        let (next, next_loss) = loop {
            let candidate = step_to(&current, &grad, t);
            let loss = logreg_loss(&candidate, batch, l2);
            if !loss.is_finite() && t < 1e-300 {
                return Err(Error::NonFinite("logistic loss".into()));
            }
            if loss.is_finite() && loss <= grad.loss - ARMIJO * t * gnorm {
                break (candidate, loss);
            }
            t *= 0.5;
            if t < 1e-300 {
                break (current.clone(), grad.loss);
            }
        };
        if !next_loss.is_finite() {
            return Err(Error::NonFinite("logistic loss".into()));
        }
        let decrease = grad.loss - next_loss;
        let next_grad = logreg_gradient(&next, batch, l2);

        let mut sy = (next.bias - current.bias) * (next_grad.bias - grad.bias);
        let mut ss = (next.bias - current.bias).powi(2);
        for i in 0..n_features {
            let s = next.weights[i] - current.weights[i];
            sy += s * (next_grad.weights[i] - grad.weights[i]);
            ss += s * s;
        }
        step = if sy > 0.0 { ss / sy } else { t * 2.0 };

        current = next;
        grad = next_grad;
        if decrease <= params.optimization_tolerance * grad.loss.abs().max(1.0) {
            break;
        }
    }
    Ok(current)
}

/// One-vs-all logistic regression; class scores are the per-class
/// probabilities renormalized to sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub classes: Vec<BinaryLogReg>,
}

impl LogRegModel {
    pub(crate) fn fit(params: &LogRegParams, design: &Design, targets: &[usize], n_classes: usize) -> Result<Self> {
        let classes = (0..n_classes)
            .into_par_iter()
            .map(|k| {
                let batch = LogRegBatch {
                    rows: design.rows.clone(),
                    targets: targets.iter().map(|&t| if t == k { 1.0 } else { 0.0 }).collect(),
                };
                fit_binary(params, &batch, design.n_cols)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LogRegModel { classes })
    }

    pub(crate) fn scores(&self, row: &[(u32, f64)]) -> Vec<f64> {
        // ln sigmoid(z) = -softplus(-z)
        let log_p: Vec<f64> = self.classes.iter().map(|m| -softplus(-m.margin(row))).collect();
        super::normalize_log_scores(&log_p)
    }
}
