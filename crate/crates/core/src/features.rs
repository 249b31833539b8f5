//! N-gram vocabulary, TF-IDF weighting and Fisher-score feature selection.
//!
//! Weighting is fixed: raw term count times smoothed IDF
//! `ln((1 + N) / (1 + df)) + 1`, followed by L2 normalization. Features are
//! ranked by their Fisher score over the L2-normalized TF-IDF matrix of the
//! training documents, and only the top `k_select` take part in vectors.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::RefactoringType;
use crate::error::{Error, Result};
use crate::textprep::PreprocessedDoc;

/// Denominator guard for features with zero within-class variance.
pub const FISHER_EPSILON: f64 = 1e-12;

/// Largest supported n-gram order.
pub const MAX_NGRAM: usize = 3;

/// A contiguous sequence of lemmas.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ngram(pub Vec<String>);

impl Ngram {
    pub fn new<S: Into<String>>(terms: impl IntoIterator<Item = S>) -> Self {
        Ngram(terms.into_iter().map(Into::into).collect())
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn terms(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for Ngram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

/// Every n-gram of exactly order `n`, in document order.
pub fn ngrams_of_order(tokens: &[String], n: usize) -> impl Iterator<Item = Ngram> + '_ {
    let windows = if n == 0 { None } else { Some(tokens.windows(n)) };
    windows.into_iter().flatten().map(|w| Ngram(w.to_vec()))
}

/// Counts of every n-gram of order `1..=n_max`.
pub fn ngram_counts(tokens: &[String], n_max: usize) -> BTreeMap<Ngram, u32> {
    let mut counts = BTreeMap::new();
    for n in 1..=n_max {
        for g in ngrams_of_order(tokens, n) {
            *counts.entry(g).or_insert(0) += 1;
        }
    }
    counts
}

/// Sparse, L2-normalized TF-IDF vector keyed by feature id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    entries: Vec<(u32, f64)>,
}

impl FeatureVector {
    /// Entries sorted by feature id, all weights positive.
    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, feature: u32) -> Option<f64> {
        self.entries
            .binary_search_by_key(&feature, |&(f, _)| f)
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "VocabularyFile", try_from = "VocabularyFile")]
pub struct Vocabulary {
    n_max: usize,
    n_docs: usize,
    ngrams: Vec<Ngram>,
    doc_freq: Vec<u32>,
    idf: Vec<f64>,
    fisher: Vec<f64>,
    selected: Vec<u32>,
    index: HashMap<Ngram, u32>,
    columns: HashMap<u32, u32>,
}

/// On-disk layout: parallel arrays indexed by feature id.
#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    n_max: usize,
    n_docs: usize,
    ngrams: Vec<String>,
    doc_freq: Vec<u32>,
    idf: Vec<f64>,
    fisher: Vec<f64>,
    selected: Vec<u32>,
}

impl From<Vocabulary> for VocabularyFile {
    fn from(v: Vocabulary) -> Self {
        VocabularyFile {
            n_max: v.n_max,
            n_docs: v.n_docs,
            ngrams: v.ngrams.iter().map(Ngram::to_string).collect(),
            doc_freq: v.doc_freq,
            idf: v.idf,
            fisher: v.fisher,
            selected: v.selected,
        }
    }
}

impl TryFrom<VocabularyFile> for Vocabulary {
    type Error = String;

    fn try_from(f: VocabularyFile) -> std::result::Result<Self, String> {
        let v = f.ngrams.len();
        if f.doc_freq.len() != v || f.idf.len() != v || f.fisher.len() != v {
            return Err("vocabulary arrays have different lengths".into());
        }
        if f.selected.iter().any(|&id| id as usize >= v) {
            return Err("selected feature id out of range".into());
        }
        let ngrams: Vec<Ngram> = f
            .ngrams
            .iter()
            .map(|s| Ngram(s.split(' ').map(str::to_string).collect()))
            .collect();
        Ok(Vocabulary::assemble(
            f.n_max, f.n_docs, ngrams, f.doc_freq, f.idf, f.fisher, f.selected,
        ))
    }
}

/// Smoothed inverse document frequency.
pub fn smoothed_idf(n_docs: usize, doc_freq: u32) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + doc_freq as f64)).ln() + 1.0
}

impl Vocabulary {
    fn assemble(
        n_max: usize,
        n_docs: usize,
        ngrams: Vec<Ngram>,
        doc_freq: Vec<u32>,
        idf: Vec<f64>,
        fisher: Vec<f64>,
        selected: Vec<u32>,
    ) -> Self {
        let index = ngrams
            .iter()
            .enumerate()
            .map(|(i, g)| (g.clone(), i as u32))
            .collect();
        let columns = selected
            .iter()
            .enumerate()
            .map(|(col, &id)| (id, col as u32))
            .collect();
        Vocabulary {
            n_max,
            n_docs,
            ngrams,
            doc_freq,
            idf,
            fisher,
            selected,
            index,
            columns,
        }
    }

    /// Number of distinct n-grams (V).
    pub fn len(&self) -> usize {
        self.ngrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ngrams.is_empty()
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn id(&self, ngram: &Ngram) -> Option<u32> {
        self.index.get(ngram).copied()
    }

    pub fn ngram(&self, id: u32) -> &Ngram {
        &self.ngrams[id as usize]
    }

    pub fn doc_freq(&self) -> &[u32] {
        &self.doc_freq
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn fisher(&self) -> &[f64] {
        &self.fisher
    }

    /// Selected feature ids, best Fisher score first.
    pub fn selected(&self) -> &[u32] {
        &self.selected
    }

    /// Position of a selected feature in [`Vocabulary::selected`].
    pub fn column(&self, id: u32) -> Option<usize> {
        self.columns.get(&id).map(|&c| c as usize)
    }

    /// Re-ranks with a different `k_select`, keeping every other statistic.
    pub fn with_selection(&self, k_select: usize) -> Vocabulary {
        let selected = rank_features(&self.ngrams, &self.fisher, k_select);
        Vocabulary::assemble(
            self.n_max,
            self.n_docs,
            self.ngrams.clone(),
            self.doc_freq.clone(),
            self.idf.clone(),
            self.fisher.clone(),
            selected,
        )
    }

    /// Unnormalized count × idf over the full vocabulary, sorted by id.
    fn raw_weights(&self, doc: &PreprocessedDoc, selected_only: bool) -> Vec<(u32, f64)> {
        let mut entries: Vec<(u32, f64)> = ngram_counts(&doc.tokens, self.n_max)
            .into_iter()
            .filter_map(|(g, count)| {
                let id = self.id(&g)?;
                if selected_only && !self.columns.contains_key(&id) {
                    return None;
                }
                Some((id, count as f64 * self.idf[id as usize]))
            })
            .collect();
        entries.sort_unstable_by_key(|&(id, _)| id);
        entries
    }
}

fn l2_normalize(mut entries: Vec<(u32, f64)>) -> Vec<(u32, f64)> {
    entries.retain(|&(_, w)| w > 0.0);
    let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, w) in &mut entries {
            *w /= norm;
        }
    }
    entries
}

fn rank_features(ngrams: &[Ngram], fisher: &[f64], k_select: usize) -> Vec<u32> {
    let mut ids: Vec<u32> = (0..ngrams.len() as u32).collect();
    ids.sort_by(|&a, &b| {
        fisher[b as usize]
            .total_cmp(&fisher[a as usize])
            .then_with(|| ngrams[a as usize].cmp(&ngrams[b as usize]))
    });
    ids.truncate(k_select.min(ngrams.len()));
    ids
}

pub fn build_vocabulary(
    docs: &[PreprocessedDoc],
    labels: &[RefactoringType],
    n_max: usize,
    k_select: usize,
) -> Result<Vocabulary> {
    if docs.len() != labels.len() {
        return Err(Error::InvalidConfig(format!(
            "{} documents but {} labels",
            docs.len(),
            labels.len()
        )));
    }
    if !(1..=MAX_NGRAM).contains(&n_max) {
        return Err(Error::InvalidConfig(format!(
            "n-gram order must be 1..={MAX_NGRAM}, got {n_max}"
        )));
    }
    if docs.len() < 2 {
        return Err(Error::EmptyCorpus);
    }
    if labels.iter().collect::<BTreeSet<_>>().len() < 2 {
        return Err(Error::SingleClass);
    }

    let per_doc: Vec<BTreeMap<Ngram, u32>> =
        docs.iter().map(|d| ngram_counts(&d.tokens, n_max)).collect();
    let mut df: BTreeMap<&Ngram, u32> = BTreeMap::new();
    for counts in &per_doc {
        for g in counts.keys() {
            *df.entry(g).or_insert(0) += 1;
        }
    }
    if df.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let n_docs = docs.len();
    let ngrams: Vec<Ngram> = df.keys().map(|g| (*g).clone()).collect();
    let doc_freq: Vec<u32> = df.values().copied().collect();
    let idf: Vec<f64> = doc_freq.iter().map(|&d| smoothed_idf(n_docs, d)).collect();
    drop(df);

    let mut vocab = Vocabulary::assemble(n_max, n_docs, ngrams, doc_freq, idf, Vec::new(), Vec::new());
    let fisher = fisher_scores(docs, labels, &vocab);
    let selected = rank_features(&vocab.ngrams, &fisher, k_select);
    vocab.fisher = fisher;
    vocab.columns = selected
        .iter()
        .enumerate()
        .map(|(col, &id)| (id, col as u32))
        .collect();
    vocab.selected = selected;
    Ok(vocab)
}

/// L2-normalized TF-IDF weights of `doc` over every vocabulary feature.
pub fn full_tfidf(doc: &PreprocessedDoc, vocab: &Vocabulary) -> Vec<(u32, f64)> {
    l2_normalize(vocab.raw_weights(doc, false))
}

/// Fisher score of every vocabulary feature over the full TF-IDF matrix of `docs`.
///
/// Labels are matched with docs by position.
pub fn fisher_scores(
    docs: &[PreprocessedDoc],
    labels: &[RefactoringType],
    vocab: &Vocabulary,
) -> Vec<f64> {
    let v = vocab.len();
    let classes: Vec<RefactoringType> = labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let class_pos = |l: RefactoringType| classes.binary_search(&l).unwrap_or(0);
    let k = classes.len();
    let rows: Vec<(usize, Vec<(u32, f64)>)> = docs
        .iter()
        .zip(labels)
        .map(|(doc, &label)| (class_pos(label), full_tfidf(doc, vocab)))
        .collect();
    let mut n_class = vec![0usize; k];
    let mut sums = vec![vec![0.0f64; v]; k];
    let mut nonzero = vec![vec![0usize; v]; k];
    for (c, row) in &rows {
        n_class[*c] += 1;
        for &(id, w) in row {
            sums[*c][id as usize] += w;
            nonzero[*c][id as usize] += 1;
        }
    }
    let means: Vec<Vec<f64>> = (0..k)
        .map(|c| sums[c].iter().map(|s| s / n_class[c].max(1) as f64).collect())
        .collect();
    // second pass: squared deviations, with absent entries contributing mean²
    let mut deviations: Vec<Vec<f64>> = (0..k)
        .map(|c| {
            (0..v)
                .map(|j| (n_class[c] - nonzero[c][j]) as f64 * means[c][j] * means[c][j])
                .collect()
        })
        .collect();
    for (c, row) in &rows {
        for &(id, w) in row {
            let d = w - means[*c][id as usize];
            deviations[*c][id as usize] += d * d;
        }
    }
    let n_total: usize = n_class.iter().sum();
    (0..v)
        .map(|j| {
            let global_mean = (0..k).map(|c| sums[c][j]).sum::<f64>() / n_total as f64;
            let mut between = 0.0;
            let mut within = 0.0;
            for c in 0..k {
                if n_class[c] == 0 {
                    continue;
                }
                between += n_class[c] as f64 * (means[c][j] - global_mean).powi(2);
                within += deviations[c][j];
            }
            between / (within + FISHER_EPSILON)
        })
        .collect()
}

/// TF-IDF vector of `doc` restricted to the selected features, L2-normalized.
pub fn vectorize(doc: &PreprocessedDoc, vocab: &Vocabulary) -> FeatureVector {
    FeatureVector {
        entries: l2_normalize(vocab.raw_weights(doc, true)),
    }
}

/// Count × idf weights of the selected features before normalization.
pub fn unnormalized_weights(doc: &PreprocessedDoc, vocab: &Vocabulary) -> Vec<(u32, f64)> {
    vocab.raw_weights(doc, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use RefactoringType::{ExtractMethod, RenameMethod};

    fn doc(tokens: &[&str]) -> PreprocessedDoc {
        tokens.iter().copied().collect()
    }

    fn two_doc_vocab(k: usize) -> Vocabulary {
        build_vocabulary(
            &[doc(&["extract", "method"]), doc(&["rename", "method"])],
            &[ExtractMethod, RenameMethod],
            1,
            k,
        )
        .unwrap()
    }

    #[test]
    fn idf_matches_smoothing_formula() {
        let v = two_doc_vocab(10);
        let method = v.id(&Ngram::new(["method"])).unwrap();
        let extract = v.id(&Ngram::new(["extract"])).unwrap();
        assert_eq!(v.idf()[method as usize], 1.0);
        // ln(3/2) + 1
        assert!((v.idf()[extract as usize] - 1.405_465_108_108_164_4).abs() < 1e-12);
    }

    #[test]
    fn weights_before_normalization() {
        let v = two_doc_vocab(10);
        let raw = unnormalized_weights(&doc(&["extract", "method"]), &v);
        let by_name: BTreeMap<String, f64> = raw
            .iter()
            .map(|&(id, w)| (v.ngram(id).to_string(), w))
            .collect();
        assert!((by_name["extract"] - 1.405_465_108_108_164_4).abs() < 1e-12);
        assert_eq!(by_name["method"], 1.0);

        let twice = unnormalized_weights(&doc(&["method", "method"]), &v);
        assert_eq!(twice, vec![(v.id(&Ngram::new(["method"])).unwrap(), 2.0)]);
    }

    #[test]
    fn selection_clamps_and_oov_is_empty() {
        let v = two_doc_vocab(100);
        assert_eq!(v.selected().len(), v.len());
        assert!(vectorize(&doc(&["unknown", "words"]), &v).is_empty());
        assert!(vectorize(&doc(&[]), &v).is_empty());
    }

    #[test]
    fn build_errors() {
        assert!(matches!(
            build_vocabulary(&[doc(&["a"])], &[ExtractMethod], 1, 5),
            Err(Error::EmptyCorpus)
        ));
        assert!(matches!(
            build_vocabulary(&[doc(&["aa"]), doc(&["bb"])], &[ExtractMethod, ExtractMethod], 1, 5),
            Err(Error::SingleClass)
        ));
        assert!(matches!(
            build_vocabulary(&[doc(&[]), doc(&[])], &[ExtractMethod, RenameMethod], 1, 5),
            Err(Error::EmptyCorpus)
        ));
        assert!(build_vocabulary(&[doc(&["aa"]), doc(&["bb"])], &[ExtractMethod, RenameMethod], 4, 5).is_err());
    }

    #[test]
    fn constant_feature_scores_zero_and_exclusive_feature_is_large() {
        let docs = [
            doc(&["common", "alpha"]),
            doc(&["common", "alpha"]),
            doc(&["common", "beta"]),
            doc(&["common", "beta"]),
        ];
        let labels = [ExtractMethod, ExtractMethod, RenameMethod, RenameMethod];
        let v = build_vocabulary(&docs, &labels, 1, 10).unwrap();
        let score = |w: &str| v.fisher()[v.id(&Ngram::new([w])).unwrap() as usize];
        assert_eq!(score("common"), 0.0);
        assert!(score("alpha") > 1e9 && score("alpha").is_finite());
        assert_eq!(v.ngram(v.selected()[0]).to_string(), "alpha");
    }

    #[test]
    fn bigrams_are_indexed() {
        let v = build_vocabulary(
            &[doc(&["pull", "up", "method"]), doc(&["push", "down"])],
            &[RenameMethod, ExtractMethod],
            2,
            100,
        )
        .unwrap();
        assert!(v.id(&Ngram::new(["pull", "up"])).is_some());
        assert!(v.id(&Ngram::new(["up", "method"])).is_some());
        assert_eq!(v.len(), 8);
    }

    #[test]
    fn serde_round_trip() {
        let v = two_doc_vocab(2);
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
    }
}
