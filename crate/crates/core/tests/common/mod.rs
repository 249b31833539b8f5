//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use refdoc::classifiers::{logreg_gradient, BinaryLogReg, LogRegBatch};
use refdoc::corpus::RefactoringType::{self, ExtractMethod, RenameMethod};
use refdoc::features::FeatureVector;
use refdoc::textprep::PreprocessedDoc;

pub const WORDS: &[&str] = &[
    "extract", "method", "rename", "move", "class", "helper", "inline", "pull", "push", "field", "code", "test",
];

pub struct RandomCorpus {
    pub docs: Vec<PreprocessedDoc>,
    pub labels: Vec<RefactoringType>,
    pub n_max: usize,
}

/// Up to 20 docs of up to 50 tokens over a small word list, with at least two classes.
pub fn random_corpus(seed: u64) -> RandomCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_docs = rng.gen_range(2..=20);
    let n_classes = rng.gen_range(2..=4);
    let vocab = rng.gen_range(3..=WORDS.len());
    let mut docs = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n_docs {
        let len = rng.gen_range(0..=50);
        let tokens: Vec<String> = (0..len).map(|_| WORDS[rng.gen_range(0..vocab)].to_string()).collect();
        docs.push(PreprocessedDoc::new(tokens));
        // the first two docs guarantee two classes
        let class = if i < 2 { i } else { rng.gen_range(0..n_classes) };
        labels.push(RefactoringType::METHOD_LEVEL[class]);
    }
    if docs.iter().all(|d| d.tokens.is_empty()) {
        docs[0] = PreprocessedDoc::new(vec!["method".to_string()]);
    }
    RandomCorpus {
        docs,
        labels,
        n_max: rng.gen_range(1..=3),
    }
}

/// Space-joined n-grams of orders 1..=n_max with their counts.
pub fn ngram_counts(tokens: &[String], n_max: usize) -> HashMap<String, usize> {
    let mut out = HashMap::new();
    for n in 1..=n_max {
        if tokens.len() < n {
            continue;
        }
        for i in 0..=tokens.len() - n {
            *out.entry(tokens[i..i + n].join(" ")).or_insert(0) += 1;
        }
    }
    out
}

pub fn idf_table(docs: &[PreprocessedDoc], n_max: usize) -> HashMap<String, f64> {
    let mut df: HashMap<String, usize> = HashMap::new();
    for d in docs {
        for g in ngram_counts(&d.tokens, n_max).into_keys() {
            *df.entry(g).or_insert(0) += 1;
        }
    }
    let n = docs.len() as f64;
    df.into_iter()
        .map(|(g, f)| (g, ((1.0 + n) / (1.0 + f as f64)).ln() + 1.0))
        .collect()
}

/// count × idf over `keep`, L2-normalized.
pub fn tfidf(doc: &PreprocessedDoc, n_max: usize, idf: &HashMap<String, f64>, keep: Option<&HashSet<String>>) -> BTreeMap<String, f64> {
    let mut w: BTreeMap<String, f64> = ngram_counts(&doc.tokens, n_max)
        .into_iter()
        .filter(|(g, _)| idf.contains_key(g) && keep.is_none_or(|k| k.contains(g)))
        .map(|(g, c)| {
            let v = c as f64 * idf[&g];
            (g, v)
        })
        .collect();
    let norm = w.values().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in w.values_mut() {
            *v /= norm;
        }
    }
    w
}

/// Between-class over within-class variance on the dense normalized TF-IDF matrix.
pub fn fisher(docs: &[PreprocessedDoc], labels: &[RefactoringType], n_max: usize) -> HashMap<String, f64> {
    let idf = idf_table(docs, n_max);
    let rows: Vec<BTreeMap<String, f64>> = docs.iter().map(|d| tfidf(d, n_max, &idf, None)).collect();
    let mut classes: Vec<RefactoringType> = labels.to_vec();
    classes.sort();
    classes.dedup();
    let mut out = HashMap::new();
    for g in idf.keys() {
        let column: Vec<f64> = rows.iter().map(|r| r.get(g).copied().unwrap_or(0.0)).collect();
        let mean = column.iter().sum::<f64>() / column.len() as f64;
        let mut between = 0.0;
        let mut within = 0.0;
        for &c in &classes {
            let xs: Vec<f64> = column.iter().zip(labels).filter(|(_, &l)| l == c).map(|(x, _)| *x).collect();
            let n = xs.len() as f64;
            let m = xs.iter().sum::<f64>() / n;
            between += n * (m - mean) * (m - mean);
            within += xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
        }
        out.insert(g.clone(), between / (within + 1e-12));
    }
    out
}

/// Absolute tolerance on values near 1, relative beyond.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Exact per-class (precision, recall, F1) from a confusion matrix `counts[truth][predicted]`;
/// 0/0 is 0.
pub fn exact_metrics(counts: &[Vec<u64>]) -> Vec<(num::BigRational, num::BigRational, num::BigRational)> {
    use num::{BigInt, BigRational, Zero};
    let q = |n: u64, d: u64| {
        if d == 0 {
            BigRational::zero()
        } else {
            BigRational::new(BigInt::from(n), BigInt::from(d))
        }
    };
    let k = counts.len();
    (0..k)
        .map(|c| {
            let tp = counts[c][c];
            let predicted: u64 = (0..k).map(|r| counts[r][c]).sum();
            let actual: u64 = counts[c].iter().sum();
            let p = q(tp, predicted);
            let r = q(tp, actual);
            let f = if (&p + &r).is_zero() {
                BigRational::zero()
            } else {
                BigRational::from_integer(BigInt::from(2)) * &p * &r / (&p + &r)
            };
            (p, r, f)
        })
        .collect()
}

pub fn to_f64(x: &num::BigRational) -> f64 {
    use num::ToPrimitive;
    x.to_f64().expect("finite rational")
}

/// Random square matrix with up to `max_classes` classes and cells up to `max_count`.
pub fn random_matrix(rng: &mut ChaCha8Rng, max_classes: usize, max_count: u64) -> Vec<Vec<u64>> {
    let k = rng.gen_range(1..=max_classes);
    let mut m = vec![vec![0; k]; k];
    for row in &mut m {
        for cell in row.iter_mut() {
            // leave some cells empty so zero-division paths are exercised
            if rng.gen_bool(0.7) {
                *cell = rng.gen_range(0..=max_count);
            }
        }
    }
    m
}

/// Literal dataset with the given (message, label) rows.
pub fn dataset(rows: &[(&str, RefactoringType)]) -> refdoc::corpus::Dataset {
    refdoc::corpus::Dataset::new(
        rows.iter()
            .enumerate()
            .map(|(i, &(message, label))| refdoc::corpus::CommitRecord {
                id: format!("r{i}"),
                project: "p".into(),
                message: message.into(),
                label: Some(label),
            })
            .collect(),
    )
    .unwrap()
}

pub fn words(tokens: &[&str]) -> PreprocessedDoc {
    tokens.iter().copied().collect()
}

/// Five documents, two classes, unigram features.
pub fn five_docs() -> (Vec<PreprocessedDoc>, Vec<RefactoringType>) {
    (
        vec![
            words(&["extract", "method"]),
            words(&["extract", "helper", "method"]),
            words(&["extract", "code"]),
            words(&["rename", "method"]),
            words(&["rename", "field", "rename"]),
        ],
        vec![ExtractMethod, ExtractMethod, ExtractMethod, RenameMethod, RenameMethod],
    )
}

/// Posterior `P(c | x) ∝ P(c) Π_j θ_cj^{x_j}` with Laplace-smoothed θ over TF-IDF mass.
pub fn bayes_posterior(vectors: &[FeatureVector], labels: &[RefactoringType], n_features: usize, x: &FeatureVector) -> Vec<f64> {
    let classes = [ExtractMethod, RenameMethod];
    let n = labels.len() as f64;
    let joint: Vec<f64> = classes
        .iter()
        .map(|&c| {
            let mut mass = vec![0.0; n_features];
            let mut count = 0.0;
            for (v, &l) in vectors.iter().zip(labels) {
                if l == c {
                    count += 1.0;
                    for &(j, w) in v.entries() {
                        mass[j as usize] += w;
                    }
                }
            }
            let total: f64 = mass.iter().sum::<f64>() + n_features as f64;
            let mut p = count / n;
            for &(j, w) in x.entries() {
                p *= ((mass[j as usize] + 1.0) / total).powf(w);
            }
            p
        })
        .collect();
    let z: f64 = joint.iter().sum();
    joint.into_iter().map(|p| p / z).collect()
}

pub fn random_logreg_instance(rng: &mut ChaCha8Rng) -> (BinaryLogReg, LogRegBatch, f64) {
    let n_features = rng.gen_range(1..8);
    let n_rows = rng.gen_range(1..12);
    let rows = (0..n_rows)
        .map(|_| {
            let mut row = Vec::new();
            for j in 0..n_features as u32 {
                if rng.gen_bool(0.6) {
                    row.push((j, rng.gen_range(-1.0..1.0)));
                }
            }
            row
        })
        .collect();
    let targets = (0..n_rows).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect();
    let params = BinaryLogReg {
        weights: (0..n_features).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        bias: rng.gen_range(-1.0..1.0),
    };
    (params, LogRegBatch { rows, targets }, rng.gen_range(0.0..2.0))
}

/// Largest relative error of the analytic gradient against central differences.
pub fn gradient_relative_error(params: &BinaryLogReg, batch: &LogRegBatch, l2: f64) -> f64 {
    const H: f64 = 1e-5;
    let g = logreg_gradient(params, batch, l2);
    let loss = |p: &BinaryLogReg| logreg_gradient(p, batch, l2).loss;
    let rel = |analytic: f64, numeric: f64| (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
    let mut worst: f64 = 0.0;
    for i in 0..params.weights.len() {
        let mut up = params.clone();
        let mut down = params.clone();
        up.weights[i] += H;
        down.weights[i] -= H;
        worst = worst.max(rel(g.weights[i], (loss(&up) - loss(&down)) / (2.0 * H)));
    }
    let mut up = params.clone();
    let mut down = params.clone();
    up.bias += H;
    down.bias -= H;
    worst.max(rel(g.bias, (loss(&up) - loss(&down)) / (2.0 * H)))
}

