//! Frequent per-class n-grams and the wildcard pattern catalog.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, RefactoringType};
use crate::error::{Error, Result};
use crate::features::{ngrams_of_order, Ngram};
use crate::pipeline::preprocess_all;

const BUNDLED_PATTERNS: &str = include_str!("../data/patterns.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermRow {
    pub ngram: String,
    pub frequency: usize,
}

/// Ranked by document frequency descending, ties lexicographic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermTable {
    pub class: RefactoringType,
    pub n: usize,
    pub documents: usize,
    pub rows: Vec<TermRow>,
}

pub fn frequent_ngrams(d: &Dataset, class: RefactoringType, n: usize, top_k: usize) -> Result<TermTable> {
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidConfig(format!("n-gram order must be 1..=3, got {n}")));
    }
    let messages: Vec<&str> = d
        .labeled()
        .filter(|(_, l)| *l == class)
        .map(|(r, _)| r.message.as_str())
        .collect();
    if messages.is_empty() {
        return Err(Error::InsufficientClass {
            class,
            available: 0,
            requested: 1,
        });
    }
    let docs = preprocess_all(&messages);
    let mut df: BTreeMap<Ngram, usize> = BTreeMap::new();
    for doc in &docs {
        let distinct: BTreeSet<Ngram> = ngrams_of_order(&doc.tokens, n).collect();
        for g in distinct {
            *df.entry(g).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(Ngram, usize)> = df.into_iter().collect();
    // BTreeMap order is lexicographic already; a stable sort keeps it for ties
    ranked.sort_by_key(|&(_, f)| std::cmp::Reverse(f));
    ranked.truncate(top_k);
    Ok(TermTable {
        class,
        n,
        documents: docs.len(),
        rows: ranked
            .into_iter()
            .map(|(g, frequency)| TermRow {
                ngram: g.to_string(),
                frequency,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternWord {
    Exact(String),
    Prefix(String),
    Any,
}

impl PatternWord {
    pub fn matches(&self, word: &str) -> bool {
        match self {
            PatternWord::Exact(w) => w == word,
            PatternWord::Prefix(p) => word.starts_with(p.as_str()),
            PatternWord::Any => true,
        }
    }
}

/// A catalog entry. `text` is kept verbatim; `words` is the normalized form
/// used for matching, split on punctuation the same way messages are.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern {
    pub text: String,
    pub words: Vec<PatternWord>,
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut words = Vec::new();
        for raw in s.split_whitespace() {
            if raw == "[]" {
                words.push(PatternWord::Any);
                continue;
            }
            let lower = raw.to_lowercase();
            let trimmed = lower.trim_matches(|c: char| !c.is_alphanumeric() && c != '*');
            let (body, wildcard) = match trimmed.strip_suffix('*') {
                Some(b) => (b, true),
                None => (trimmed, false),
            };
            let parts: Vec<&str> = body.split(|c: char| !c.is_alphanumeric()).filter(|p| !p.is_empty()).collect();
            for (i, part) in parts.iter().enumerate() {
                if wildcard && i + 1 == parts.len() {
                    words.push(PatternWord::Prefix(part.to_string()));
                } else {
                    words.push(PatternWord::Exact(part.to_string()));
                }
            }
        }
        if words.is_empty() {
            return Err(Error::InvalidConfig(format!("pattern {s:?} has no words")));
        }
        Ok(Pattern {
            text: s.split_whitespace().collect::<Vec<_>>().join(" "),
            words,
        })
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl Pattern {
    /// True when the pattern occurs as a contiguous run of `words`.
    pub fn matches_words(&self, words: &[&str]) -> bool {
        let n = self.words.len();
        n <= words.len()
            && words
                .windows(n)
                .any(|win| self.words.iter().zip(win).all(|(p, w)| p.matches(w)))
    }

    /// The verbatim text with every wildcard filled in by `filler`.
    pub fn instantiate(&self, filler: &str) -> String {
        self.text
            .split(' ')
            .map(|w| if w == "[]" { filler.to_string() } else { w.replace('*', filler) })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Lowercased words with punctuation removed; digits are kept.
pub fn message_words(message: &str) -> Vec<String> {
    message
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternCatalog {
    classes: BTreeMap<RefactoringType, Vec<Pattern>>,
}

impl PatternCatalog {
    /// One pattern per line under `[ClassName]` headers; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |line: usize, message: String| Error::DataFile {
            name: "pattern catalog".into(),
            message: format!("line {line}: {message}"),
        };
        let mut classes: BTreeMap<RefactoringType, Vec<Pattern>> = BTreeMap::new();
        let mut current = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')).filter(|n| !n.is_empty()) {
                let class: RefactoringType = name.parse().map_err(|_| bad(i + 1, format!("unknown class {name:?}")))?;
                classes.entry(class).or_default();
                current = Some(class);
                continue;
            }
            let class = current.ok_or_else(|| bad(i + 1, "pattern before any class header".into()))?;
            let pattern: Pattern = line.parse().map_err(|_| bad(i + 1, "empty pattern".into()))?;
            classes.entry(class).or_default().push(pattern);
        }
        Ok(PatternCatalog { classes })
    }

    pub fn bundled() -> &'static PatternCatalog {
        static CATALOG: OnceLock<PatternCatalog> = OnceLock::new();
        CATALOG.get_or_init(|| PatternCatalog::parse(BUNDLED_PATTERNS).expect("bundled pattern catalog parses"))
    }

    pub fn classes(&self) -> impl Iterator<Item = (RefactoringType, &[Pattern])> {
        self.classes.iter().map(|(&c, p)| (c, p.as_slice()))
    }

    pub fn patterns(&self, class: RefactoringType) -> &[Pattern] {
        self.classes.get(&class).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.classes.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Catalog patterns found in `message`, grouped by class; classes without a hit are omitted.
pub fn match_patterns(message: &str, catalog: &PatternCatalog) -> BTreeMap<RefactoringType, Vec<String>> {
    let owned = message_words(message);
    let words: Vec<&str> = owned.iter().map(String::as_str).collect();
    let mut out = BTreeMap::new();
    if words.is_empty() {
        return out;
    }
    for (class, patterns) in catalog.classes() {
        let hits: Vec<String> = patterns
            .iter()
            .filter(|p| p.matches_words(&words))
            .map(Pattern::to_string)
            .collect();
        if !hits.is_empty() {
            out.insert(class, hits);
        }
    }
    out
}
