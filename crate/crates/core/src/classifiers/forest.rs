use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{Node, Tree};
use super::{count_param, row_value, Design};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub random_splits_per_node: usize,
    pub min_samples_per_leaf: usize,
}

impl Default for RfParams {
    fn default() -> Self {
        RfParams {
            n_estimators: 8,
            max_depth: 32,
            random_splits_per_node: 128,
            min_samples_per_leaf: 1,
        }
    }
}

impl RfParams {
    pub fn to_map(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("n_estimators".to_string(), self.n_estimators as f64),
            ("max_depth".to_string(), self.max_depth as f64),
            ("random_splits_per_node".to_string(), self.random_splits_per_node as f64),
            ("min_samples_per_leaf".to_string(), self.min_samples_per_leaf as f64),
        ])
    }

    pub fn from_map(map: &BTreeMap<String, f64>) -> Result<Self> {
        let p = RfParams {
            n_estimators: count_param(map, "n_estimators")?,
            max_depth: count_param(map, "max_depth")?,
            random_splits_per_node: count_param(map, "random_splits_per_node")?,
            min_samples_per_leaf: count_param(map, "min_samples_per_leaf")?,
        };
        if p.n_estimators == 0 || p.min_samples_per_leaf == 0 {
            return Err(Error::InvalidConfig(
                "n_estimators and min_samples_per_leaf must be positive".into(),
            ));
        }
        Ok(p)
    }
}

/// Bagged randomized classification trees; each leaf holds a class index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree<u16>>,
}

/// Offset keeping forest tree streams apart from other seeded consumers.
const TREE_STREAM_BASE: u64 = 1 << 32;

impl ForestModel {
    pub(crate) fn fit(
        params: &RfParams,
        design: &Design,
        targets: &[usize],
        n_classes: usize,
        seed: u64,
    ) -> Result<Self> {
        let trees = (0..params.n_estimators)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(TREE_STREAM_BASE + t as u64);
                let n = targets.len();
                let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                let mut builder = Builder {
                    params,
                    design,
                    targets,
                    n_classes,
                    rng,
                    nodes: Vec::new(),
                };
                builder.grow(sample, 0);
                Tree {
                    nodes: builder.nodes,
                }
            })
            .collect();
        Ok(ForestModel { trees })
    }

    /// Fraction of trees voting for each class.
    pub(crate) fn scores(&self, row: &[(u32, f64)], n_classes: usize) -> Vec<f64> {
        let mut votes = vec![0.0; n_classes];
        for tree in &self.trees {
            votes[*tree.leaf(row) as usize] += 1.0;
        }
        let n = self.trees.len() as f64;
        votes.into_iter().map(|v| v / n).collect()
    }
}

struct Builder<'a> {
    params: &'a RfParams,
    design: &'a Design,
    targets: &'a [usize],
    n_classes: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node<u16>>,
}

fn gini_mass(counts: &[usize], n: usize) -> f64 {
    // n * gini impurity
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    n - counts.iter().map(|&c| (c * c) as f64).sum::<f64>() / n
}

impl Builder<'_> {
    fn majority(counts: &[usize]) -> u16 {
        let mut best = 0;
        for (i, &c) in counts.iter().enumerate() {
            if c > counts[best] {
                best = i;
            }
        }
        best as u16
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> u32 {
        let mut counts = vec![0usize; self.n_classes];
        for &i in &rows {
            counts[self.targets[i]] += 1;
        }
        let id = self.nodes.len() as u32;
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let min_leaf = self.params.min_samples_per_leaf;
        if pure || depth >= self.params.max_depth || rows.len() < 2 * min_leaf {
            self.nodes.push(Node::Leaf(Self::majority(&counts)));
            return id;
        }

        let parent = gini_mass(&counts, rows.len());
        let mut best: Option<(f64, u32, f64)> = None;
        let mut left_counts = vec![0usize; self.n_classes];
        for _ in 0..self.params.random_splits_per_node {
            let pick = rows[self.rng.gen_range(0..rows.len())];
            let row = &self.design.rows[pick];
            if row.is_empty() {
                continue;
            }
            let (feature, value) = row[self.rng.gen_range(0..row.len())];
            let threshold = value * self.rng.gen::<f64>();

            left_counts.iter_mut().for_each(|c| *c = 0);
            let mut n_left = 0;
            for &i in &rows {
                if row_value(&self.design.rows[i], feature) <= threshold {
                    left_counts[self.targets[i]] += 1;
                    n_left += 1;
                }
            }
            let n_right = rows.len() - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let right_counts: Vec<usize> = counts.iter().zip(&left_counts).map(|(t, l)| t - l).collect();
            let impurity = gini_mass(&left_counts, n_left) + gini_mass(&right_counts, n_right);
            if impurity < parent - 1e-12 && best.is_none_or(|(b, _, _)| impurity < b) {
                best = Some((impurity, feature, threshold));
            }
        }

        let Some((_, feature, threshold)) = best else {
            self.nodes.push(Node::Leaf(Self::majority(&counts)));
            return id;
        };
        self.nodes.push(Node::Leaf(0));
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&i| row_value(&self.design.rows[i], feature) <= threshold);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id as usize] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}
