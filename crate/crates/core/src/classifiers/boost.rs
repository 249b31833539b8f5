use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{Node, Tree};
use super::{count_param, param, sigmoid, softplus, Design};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbtParams {
    pub max_leaves: usize,
    pub min_samples_per_leaf: usize,
    pub learning_rate: f64,
    pub n_trees: usize,
    /// L2 penalty on leaf values.
    pub leaf_l2: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            max_leaves: 20,
            min_samples_per_leaf: 10,
            learning_rate: 0.2,
            n_trees: 100,
            leaf_l2: 1.0,
        }
    }
}

impl GbtParams {
    pub fn to_map(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("max_leaves".to_string(), self.max_leaves as f64),
            ("min_samples_per_leaf".to_string(), self.min_samples_per_leaf as f64),
            ("learning_rate".to_string(), self.learning_rate),
            ("n_trees".to_string(), self.n_trees as f64),
            ("leaf_l2".to_string(), self.leaf_l2),
        ])
    }

    pub fn from_map(map: &BTreeMap<String, f64>) -> Result<Self> {
        let p = GbtParams {
            max_leaves: count_param(map, "max_leaves")?,
            min_samples_per_leaf: count_param(map, "min_samples_per_leaf")?,
            learning_rate: param(map, "learning_rate"),
            n_trees: count_param(map, "n_trees")?,
            leaf_l2: param(map, "leaf_l2"),
        };
        if p.max_leaves == 0 || p.min_samples_per_leaf == 0 {
            return Err(Error::InvalidConfig(
                "max_leaves and min_samples_per_leaf must be positive".into(),
            ));
        }
        if !(p.learning_rate > 0.0 && p.learning_rate.is_finite()) || p.leaf_l2.is_nan() || p.leaf_l2 < 0.0 {
            return Err(Error::InvalidConfig(
                "learning_rate must be positive and leaf_l2 nonnegative".into(),
            ));
        }
        Ok(p)
    }
}

/// Boosted regression trees for one class against the rest. The class score
/// is `sigmoid(init + Σ tree(x))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoostedClass {
    pub init: f64,
    pub trees: Vec<Tree<f64>>,
    /// Training loss before the first tree and after each one. Not persisted.
    #[serde(skip)]
    pub loss_history: Vec<f64>,
}

impl PartialEq for BoostedClass {
    fn eq(&self, other: &Self) -> bool {
        self.init == other.init && self.trees == other.trees
    }
}

impl BoostedClass {
    pub fn margin(&self, row: &[(u32, f64)]) -> f64 {
        self.init + self.trees.iter().map(|t| *t.leaf(row)).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub classes: Vec<BoostedClass>,
}

impl GbtModel {
    pub(crate) fn fit(params: &GbtParams, design: &Design, targets: &[usize], n_classes: usize) -> Result<Self> {
        let entries = sorted_entries(design);
        let classes = (0..n_classes)
            .into_par_iter()
            .map(|k| {
                let y: Vec<f64> = targets.iter().map(|&t| if t == k { 1.0 } else { 0.0 }).collect();
                fit_class(params, design, &entries, &y)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GbtModel { classes })
    }

    pub(crate) fn scores(&self, row: &[(u32, f64)]) -> Vec<f64> {
        self.classes.iter().map(|c| sigmoid(c.margin(row))).collect()
    }
}

/// Nonzero design entries as (column, value, row), by column then value descending.
fn sorted_entries(design: &Design) -> Vec<(u32, f64, u32)> {
    let mut entries: Vec<(u32, f64, u32)> = design
        .rows
        .iter()
        .enumerate()
        .flat_map(|(r, row)| row.iter().filter(|e| e.1 != 0.0).map(move |&(c, v)| (c, v, r as u32)))
        .collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)).then(a.2.cmp(&b.2)));
    entries
}

fn log_loss(margins: &[f64], y: &[f64]) -> f64 {
    margins.iter().zip(y).map(|(&z, &t)| softplus(z) - t * z).sum()
}

fn fit_class(params: &GbtParams, design: &Design, entries: &[(u32, f64, u32)], y: &[f64]) -> Result<BoostedClass> {
    let n = y.len() as f64;
    let positive: f64 = y.iter().sum();
    let prior = (positive / n).clamp(1e-6, 1.0 - 1e-6);
    let init = (prior / (1.0 - prior)).ln();

    let mut margins = vec![init; y.len()];
    let mut loss = log_loss(&margins, y);
    let mut loss_history = vec![loss];
    let mut trees = Vec::with_capacity(params.n_trees);

    for _ in 0..params.n_trees {
        let mut grad = Vec::with_capacity(y.len());
        let mut hess = Vec::with_capacity(y.len());
        for (&z, &t) in margins.iter().zip(y) {
            let p = sigmoid(z);
            grad.push(p - t);
            hess.push(p * (1.0 - p));
        }
        let mut tree = grow_tree(params, design, entries, &grad, &hess);
        for node in &mut tree.nodes {
            if let Node::Leaf(v) = node {
                *v *= params.learning_rate;
            }
        }
        let deltas: Vec<f64> = design.rows.iter().map(|row| *tree.leaf(row)).collect();

        // shrink the step until the training loss does not go up
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = margins.iter().zip(&deltas).map(|(m, d)| m + scale * d).collect();
            let trial_loss = log_loss(&trial, y);
            if !trial_loss.is_finite() {
                return Err(Error::NonFinite("boosting loss".into()));
            }
            if trial_loss <= loss {
                accepted = Some((trial, trial_loss));
                break;
            }
            scale *= 0.5;
        }
        let Some((trial, trial_loss)) = accepted else {
            loss_history.push(loss);
            continue;
        };
        if scale != 1.0 {
            for node in &mut tree.nodes {
                if let Node::Leaf(v) = node {
                    *v *= scale;
                }
            }
        }
        margins = trial;
        loss = trial_loss;
        loss_history.push(loss);
        trees.push(tree);
    }

    Ok(BoostedClass {
        init,
        trees,
        loss_history,
    })
}

#[derive(Clone, Copy)]
struct Split {
    gain: f64,
    feature: u32,
    threshold: f64,
}

struct Leaf {
    node: u32,
    rows: Vec<u32>,
    g: f64,
    h: f64,
    split: Option<Split>,
}

fn score(g: f64, h: f64, l2: f64) -> f64 {
    g * g / (h + l2)
}

/// Best split of `rows`: rows whose value in `feature` exceeds `threshold`
/// go right; absent entries count as zero and go left.
#[allow(clippy::too_many_arguments)]
fn best_split(
    params: &GbtParams,
    entries: &[(u32, f64, u32)],
    member: &[bool],
    grad: &[f64],
    hess: &[f64],
    n: usize,
    g_total: f64,
    h_total: f64,
) -> Option<Split> {
    let min_leaf = params.min_samples_per_leaf;
    if n < 2 * min_leaf {
        return None;
    }
    let l2 = params.leaf_l2;
    let parent = score(g_total, h_total, l2);
    let mut best: Option<Split> = None;

    let mut i = 0;
    while i < entries.len() {
        let col = entries[i].0;
        let mut j = i;
        while j < entries.len() && entries[j].0 == col {
            j += 1;
        }
        let (mut g_right, mut h_right, mut n_right) = (0.0, 0.0, 0usize);
        let mut k = i;
        while k < j {
            let value = entries[k].1;
            while k < j && entries[k].1 == value {
                let r = entries[k].2 as usize;
                if member[r] {
                    g_right += grad[r];
                    h_right += hess[r];
                    n_right += 1;
                }
                k += 1;
            }
            // next smaller member value, or zero
            let mut next = k;
            while next < j && !member[entries[next].2 as usize] {
                next += 1;
            }
            let threshold = if next < j { entries[next].1 } else { 0.0 };
            if n_right == 0 || threshold >= value {
                continue;
            }
            let n_left = n - n_right;
            if n_right < min_leaf {
                continue;
            }
            if n_left < min_leaf {
                break;
            }
            let g_left = g_total - g_right;
            let h_left = h_total - h_right;
            let gain = score(g_left, h_left, l2) + score(g_right, h_right, l2) - parent;
            if gain > 1e-12 && best.is_none_or(|b| gain > b.gain) {
                best = Some(Split {
                    gain,
                    feature: col,
                    threshold,
                });
            }
            k = next;
        }
        i = j;
    }
    best
}

/// Leaf-wise growth: repeatedly split the leaf with the largest gain.
fn grow_tree(params: &GbtParams, design: &Design, entries: &[(u32, f64, u32)], grad: &[f64], hess: &[f64]) -> Tree<f64> {
    let n = grad.len();
    let mut member = vec![false; n];
    let l2 = params.leaf_l2;

    let evaluate = |rows: Vec<u32>, node: u32, member: &mut Vec<bool>| -> Leaf {
        let g: f64 = rows.iter().map(|&r| grad[r as usize]).sum();
        let h: f64 = rows.iter().map(|&r| hess[r as usize]).sum();
        for &r in &rows {
            member[r as usize] = true;
        }
        let split = best_split(params, entries, member, grad, hess, rows.len(), g, h);
        for &r in &rows {
            member[r as usize] = false;
        }
        Leaf {
            node,
            rows,
            g,
            h,
            split,
        }
    };

    let mut nodes: Vec<Node<f64>> = vec![Node::Leaf(0.0)];
    let mut leaves = vec![evaluate((0..n as u32).collect(), 0, &mut member)];

    while leaves.len() < params.max_leaves {
        let pick = leaves
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.split.map(|s| (i, s.gain)))
            .fold(None, |best: Option<(usize, f64)>, (i, gain)| match best {
                Some((_, b)) if b >= gain => best,
                _ => Some((i, gain)),
            });
        let Some((i, _)) = pick else { break };
        let leaf = leaves.swap_remove(i);
        let split = leaf.split.expect("picked leaf has a split");
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = leaf
            .rows
            .iter()
            .partition(|&&r| super::row_value(&design.rows[r as usize], split.feature) <= split.threshold);
        let left = nodes.len() as u32;
        let right = left + 1;
        nodes.push(Node::Leaf(0.0));
        nodes.push(Node::Leaf(0.0));
        nodes[leaf.node as usize] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        leaves.push(evaluate(left_rows, left, &mut member));
        leaves.push(evaluate(right_rows, right, &mut member));
    }

    for leaf in leaves {
        nodes[leaf.node as usize] = Node::Leaf(-leaf.g / (leaf.h + l2));
    }
    Tree { nodes }
}
