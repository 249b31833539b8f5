//! Keyword-stem classifier used as the non-learning reference point.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, RefactoringType};
use crate::error::{Error, Result};

const BUNDLED_RULES: &str = include_str!("../data/keyword_rules.tsv");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordRule {
    pub stem: String,
    pub target: RefactoringType,
    /// Full words that contain the stem but must not count as a hit.
    pub exclusions: BTreeSet<String>,
}

impl KeywordRule {
    pub fn matches_word(&self, word: &str) -> bool {
        word.contains(&self.stem) && !self.exclusions.contains(word)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordVerdict {
    pub label: Option<RefactoringType>,
    /// Every rule that fired, in priority order.
    pub matches: Vec<RefactoringType>,
}

/// Ordered rule list; earlier rules win when several fire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordRules {
    rules: Vec<KeywordRule>,
}

impl KeywordRules {
    /// Parses `stem<TAB>target[<TAB>excl,excl,...]` lines; `#` starts a comment line.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let bad = |message: String| Error::DataFile {
            name: "keyword rules".into(),
            message,
        };
        let mut rules = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let stem = fields.next().unwrap_or("").trim().to_lowercase();
            let target = fields
                .next()
                .ok_or_else(|| bad(format!("line {}: missing target", i + 1)))?
                .trim();
            let target: RefactoringType = target
                .parse()
                .map_err(|_| bad(format!("line {}: unknown target {target:?}", i + 1)))?;
            if stem.is_empty() {
                return Err(bad(format!("line {}: empty stem", i + 1)));
            }
            let exclusions = fields
                .next()
                .unwrap_or("")
                .split(',')
                .map(|w| w.trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect();
            rules.push(KeywordRule {
                stem,
                target,
                exclusions,
            });
        }
        if rules.is_empty() {
            return Err(bad("no rules".into()));
        }
        Ok(KeywordRules { rules })
    }

    pub fn bundled() -> &'static KeywordRules {
        static RULES: OnceLock<KeywordRules> = OnceLock::new();
        RULES.get_or_init(|| KeywordRules::from_tsv(BUNDLED_RULES).expect("bundled keyword rules parse"))
    }

    pub fn rules(&self) -> &[KeywordRule] {
        &self.rules
    }

    pub fn predict(&self, message: &str) -> KeywordVerdict {
        let lower = message.to_lowercase();
        let words: Vec<&str> = lower
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .collect();
        let mut matches = Vec::new();
        for rule in &self.rules {
            if !matches.contains(&rule.target) && words.iter().any(|w| rule.matches_word(w)) {
                matches.push(rule.target);
            }
        }
        KeywordVerdict {
            label: matches.first().copied(),
            matches,
        }
    }
}

/// Classifies `message` with the bundled rules.
pub fn keyword_predict(message: &str) -> KeywordVerdict {
    KeywordRules::bundled().predict(message)
}

/// (true, predicted) pairs for every labeled record; `None` when no rule fired.
pub fn baseline_predictions(d: &Dataset, rules: &KeywordRules) -> Vec<(String, RefactoringType, Option<RefactoringType>)> {
    d.labeled()
        .map(|(r, label)| (r.id.clone(), label, rules.predict(&r.message).label))
        .collect()
}
