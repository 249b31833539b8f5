//! Commit-message cleaning: noise removal, contraction expansion, tokenization,
//! lemmatization and stop-word removal.
//!
//! The lemmatizer is rule based. A bundled exception dictionary
//! (`data/lemmas.tsv`, `inflected<TAB>lemma`) takes precedence over the
//! suffix rules, and the rules are applied until the word stops changing, so
//! `lemmatize` is idempotent.

use std::collections::{HashMap, HashSet};
use std::sync::{LazyLock, OnceLock};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords.txt");
const BUNDLED_LEMMAS: &str = include_str!("../data/lemmas.tsv");

/// Tokens shorter than this are dropped before and after lemmatization.
pub const MIN_TOKEN_LEN: usize = 2;

/// Ordered lowercase lemmas of one message.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessedDoc {
    pub tokens: Vec<String>,
}

impl PreprocessedDoc {
    pub fn new(tokens: Vec<String>) -> Self {
        PreprocessedDoc { tokens }
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Space-joined tokens.
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

impl<S: Into<String>> FromIterator<S> for PreprocessedDoc {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        PreprocessedDoc {
            tokens: iter.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StopWordList {
    words: HashSet<String>,
}

impl StopWordList {
    /// One word per line; blank lines and `#` comments are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let words: HashSet<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        if words.is_empty() {
            return Err(Error::DataFile {
                name: "stop-word list".into(),
                message: "no entries".into(),
            });
        }
        Ok(StopWordList { words })
    }

    pub fn bundled() -> &'static StopWordList {
        static LIST: OnceLock<StopWordList> = OnceLock::new();
        LIST.get_or_init(|| {
            StopWordList::from_text(BUNDLED_STOPWORDS).expect("bundled stop-word list is valid")
        })
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone)]
pub struct Lemmatizer {
    exceptions: HashMap<String, String>,
}

impl Lemmatizer {
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut exceptions = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (inflected, lemma) = line.split_once('\t').ok_or_else(|| Error::DataFile {
                name: "lemma dictionary".into(),
                message: format!("line {} has no tab separator", i + 1),
            })?;
            exceptions.insert(inflected.to_string(), lemma.to_string());
        }
        Ok(Lemmatizer { exceptions })
    }

    pub fn bundled() -> &'static Lemmatizer {
        static LEMMATIZER: OnceLock<Lemmatizer> = OnceLock::new();
        LEMMATIZER
            .get_or_init(|| Lemmatizer::from_tsv(BUNDLED_LEMMAS).expect("bundled lemma dictionary is valid"))
    }

    pub fn exceptions(&self) -> impl Iterator<Item = (&str, &str)> {
        self.exceptions.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Lemma of a lowercase alphabetic token.
    pub fn lemmatize(&self, token: &str) -> String {
        let mut current = token.to_string();
        // every rule shortens the word, so this bound is never the reason to stop
        for _ in 0..=token.len() + 1 {
            match self.step(&current) {
                Some(next) if next != current => current = next,
                _ => break,
            }
        }
        current
    }

    fn step(&self, word: &str) -> Option<String> {
        if let Some(lemma) = self.exceptions.get(word) {
            return Some(lemma.clone());
        }
        suffix_rule(word)
    }
}

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u' | b'y')
}

fn has_vowel(stem: &str) -> bool {
    stem.bytes().any(is_vowel)
}

fn suffix_rule(word: &str) -> Option<String> {
    let n = word.len();
    if n <= 3 || !word.is_ascii() {
        return None;
    }
    let cut = |k: usize| word[..n - k].to_string();
    if word.ends_with("ies") && n > 4 {
        return Some(cut(3) + "y");
    }
    if word.ends_with("es") {
        let base = &word[..n - 2];
        if ["ss", "x", "z", "ch", "sh"].iter().any(|s| base.ends_with(s)) {
            return Some(base.to_string());
        }
        return Some(cut(1));
    }
    if word.ends_with('s') {
        if ["ss", "us", "is"].iter().any(|s| word.ends_with(s)) {
            return None;
        }
        return Some(cut(1));
    }
    if word.ends_with("eed") {
        return None;
    }
    if word.ends_with("ied") && n > 4 {
        return Some(cut(3) + "y");
    }
    for suffix in ["ing", "ed"] {
        if let Some(stem) = word.strip_suffix(suffix) {
            if stem.len() >= 3 && has_vowel(stem) {
                return Some(restore_stem(stem));
            }
            return None;
        }
    }
    None
}

/// Undo consonant doubling or restore a silent `e` after stripping -ing/-ed.
fn restore_stem(stem: &str) -> String {
    let b = stem.as_bytes();
    let (last, prev) = (b[b.len() - 1], b[b.len() - 2]);
    if last == prev && !is_vowel(last) && !matches!(last, b'l' | b's' | b'z' | b'f') {
        return stem[..stem.len() - 1].to_string();
    }
    let wants_e = ["at", "bl", "iz", "yz", "ut", "dg", "rg", "ur", "v", "c"]
        .iter()
        .any(|s| stem.ends_with(s))
        || (last == b's' && is_vowel(prev));
    if wants_e {
        format!("{stem}e")
    } else {
        stem.to_string()
    }
}

/// Lemma of `token` under the bundled dictionary.
pub fn lemmatize(token: &str) -> String {
    Lemmatizer::bundled().lemmatize(token)
}

/// Splits on whitespace and on every character that is not an ASCII letter or digit.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

static URL_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(?:[a-z][a-z0-9+.\-]*://|www\.)\S*").expect("valid url pattern")
});
static EMAIL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[^\s@]+@[^\s@]+").expect("valid email pattern"));

/// Removes URLs (`scheme://...`, `www....`) and email addresses.
pub fn strip_urls_and_emails(text: &str) -> String {
    let without_urls = URL_RE.replace_all(text, " ");
    EMAIL_RE.replace_all(&without_urls, " ").into_owned()
}

static CONTRACTIONS: LazyLock<Vec<(Regex, &'static str)>> = LazyLock::new(|| {
    let apos = "['\u{2019}]";
    [
        (format!(r"\bwon{apos}t\b"), "will not"),
        (format!(r"\bcan{apos}t\b"), "can not"),
        (format!(r"\bshan{apos}t\b"), "shall not"),
        (format!(r"\bain{apos}t\b"), "am not"),
        (format!(r"\blet{apos}s\b"), "let us"),
        (format!(r"n{apos}t\b"), " not"),
        (
            format!(r"\b(it|that|there|here|what|who|he|she|where|how){apos}s\b"),
            "$1 is",
        ),
        (format!(r"{apos}re\b"), " are"),
        (format!(r"{apos}ve\b"), " have"),
        (format!(r"{apos}ll\b"), " will"),
        (format!(r"{apos}d\b"), " would"),
        (format!(r"{apos}m\b"), " am"),
    ]
    .into_iter()
    .map(|(pattern, with)| (Regex::new(&pattern).expect("valid contraction pattern"), with))
    .collect()
});

/// Expands verb contractions in lowercase text ("don't" becomes "do not").
pub fn expand_contractions(text: &str) -> String {
    let mut out = text.to_string();
    for (re, with) in CONTRACTIONS.iter() {
        if re.is_match(&out) {
            out = re.replace_all(&out, *with).into_owned();
        }
    }
    out
}

/// The cleaning pipeline with its word lists.
#[derive(Debug, Clone, Copy)]
pub struct Preprocessor<'a> {
    pub stops: &'a StopWordList,
    pub lemmatizer: &'a Lemmatizer,
}

impl Default for Preprocessor<'static> {
    fn default() -> Self {
        Preprocessor {
            stops: StopWordList::bundled(),
            lemmatizer: Lemmatizer::bundled(),
        }
    }
}

impl Preprocessor<'_> {
    pub fn preprocess(&self, message: &str) -> PreprocessedDoc {
        let cleaned = strip_urls_and_emails(message);
        let expanded = expand_contractions(&cleaned.to_lowercase());
        let tokens = tokenize(&expanded)
            .into_iter()
            .filter(|t| t.len() >= MIN_TOKEN_LEN && !t.bytes().any(|b| b.is_ascii_digit()))
            .filter_map(|t| {
                let lemma = self.lemmatizer.lemmatize(&t);
                let keep = lemma.len() >= MIN_TOKEN_LEN
                    && !self.stops.contains(&t)
                    && !self.stops.contains(&lemma);
                keep.then_some(lemma)
            })
            .collect();
        PreprocessedDoc { tokens }
    }
}

/// Cleans one message with the bundled lemmatizer and the given stop words.
pub fn preprocess(message: &str, stops: &StopWordList) -> PreprocessedDoc {
    Preprocessor {
        stops,
        lemmatizer: Lemmatizer::bundled(),
    }
    .preprocess(message)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundled(message: &str) -> Vec<String> {
        preprocess(message, StopWordList::bundled()).tokens
    }

    #[test]
    fn tokenize_splits_on_special_characters() {
        assert_eq!(tokenize("package-level"), ["package", "level"]);
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("fcrepo-1029: move purge code"),
            ["fcrepo", "1029", "move", "purge", "code"]
        );
        assert_eq!(tokenize("a__b  c\td\n"), ["a", "b", "c", "d"]);
    }

    #[test]
    fn stop_list_has_required_words() {
        let stops = StopWordList::bundled();
        for w in ["is", "are", "if", "the", "a", "to", "and", "see"] {
            assert!(stops.contains(w), "{w}");
        }
        for w in ["up", "down", "into", "from", "move", "name"] {
            assert!(!stops.contains(w), "{w}");
        }
    }

    #[test]
    fn dictionary_lemmas() {
        assert_eq!(lemmatize("renamed"), "rename");
        assert_eq!(lemmatize("classes"), "class");
        assert_eq!(lemmatize("move"), "move");
        assert_eq!(lemmatize("made"), "make");
        assert_eq!(lemmatize("broken"), "break");
        assert_eq!(lemmatize("children"), "child");
    }

    #[test]
    fn suffix_rules_without_dictionary() {
        let rules = Lemmatizer {
            exceptions: HashMap::new(),
        };
        let cases = [
            ("renamed", "renam"),
            ("renaming", "renam"),
            ("classes", "class"),
            ("boxes", "box"),
            ("utilities", "utility"),
            ("moves", "move"),
            ("moving", "move"),
            ("extracting", "extract"),
            ("splitting", "split"),
            ("pulled", "pull"),
            ("created", "create"),
            ("normalized", "normalize"),
            ("copied", "copy"),
            ("status", "status"),
            ("string", "string"),
            ("speed", "speed"),
            ("merging", "merge"),
        ];
        for (word, lemma) in cases {
            assert_eq!(rules.lemmatize(word), lemma, "{word}");
        }
    }

    #[test]
    fn dictionary_lemmas_are_fixed_points() {
        let lem = Lemmatizer::bundled();
        let mut broken = Vec::new();
        for (inflected, lemma) in lem.exceptions() {
            assert!(lemma.len() >= MIN_TOKEN_LEN && lemma.bytes().all(|b| b.is_ascii_lowercase()));
            if lem.lemmatize(lemma) != lemma {
                broken.push(format!("{inflected}->{lemma}->{}", lem.lemmatize(lemma)));
            }
        }
        broken.sort();
        assert!(broken.is_empty(), "{broken:?}");
    }

    #[test]
    fn pipeline_examples() {
        assert_eq!(
            bundled("Renamed getter for better readability"),
            ["rename", "getter", "better", "readability"]
        );
        assert!(bundled("see https://x.y/z v2.0").is_empty());
        assert_eq!(bundled("don't move it"), ["move"]);
        assert_eq!(bundled("contact dev@example.org about Moving code"), ["contact", "move", "code"]);
        assert!(bundled("").is_empty());
    }

    #[test]
    fn contractions_expand() {
        assert_eq!(expand_contractions("don't"), "do not");
        assert_eq!(expand_contractions("won\u{2019}t it's"), "will not it is");
        assert_eq!(expand_contractions("we're done"), "we are done");
    }
}
