//! Synthetic commit messages built from the pattern catalog.
//!
//! Each message instantiates one catalog pattern: wildcard stems become real
//! word forms and `[]` slots become code identifiers. Some messages get an
//! unrelated maintenance clause appended, which often carries a keyword that
//! belongs to another class.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{CommitRecord, Dataset, RefactoringType};
use crate::error::Result;
use crate::terms::PatternCatalog;

const BUNDLED_SYNTHETIC: &str = include_str!("../data/synthetic.jsonl");
const BUNDLED_SYNTHETIC_NONE: &str = include_str!("../data/synthetic_none.jsonl");
const BUNDLED_SYNTHETIC_DETECTOR: &str = include_str!("../data/synthetic_detector.jsonl");

/// Word forms for every wildcard stem in the bundled catalog.
const STEM_FORMS: &[(&str, &[&str])] = &[
    ("add", &["add", "added", "adding", "adds"]),
    ("alter", &["alter", "altered", "altering"]),
    ("break", &["break", "breaking", "breaks"]),
    ("brok", &["broke", "broken"]),
    ("chang", &["change", "changed", "changing", "changes"]),
    ("clarif", &["clarify", "clarified", "clarifying"]),
    ("clean", &["clean", "cleaned", "cleaning"]),
    ("combin", &["combine", "combined", "combining"]),
    ("consolidat", &["consolidate", "consolidated", "consolidating"]),
    ("correct", &["correct", "corrected", "correcting"]),
    ("creat", &["create", "created", "creating", "creates"]),
    ("delet", &["delete", "deleted", "deleting"]),
    ("extract", &["extract", "extracted", "extracting", "extracts"]),
    ("fix", &["fix", "fixed", "fixing", "fixes"]),
    ("improv", &["improve", "improved", "improving"]),
    ("inlin", &["inline", "inlined", "inlining", "inlines"]),
    ("introduc", &["introduce", "introduced", "introducing"]),
    ("merg", &["merge", "merged", "merging"]),
    ("modif", &["modify", "modified", "modifying"]),
    ("mov", &["move", "moved", "moving", "moves"]),
    ("normaliz", &["normalize", "normalized", "normalizing"]),
    ("pull", &["pull", "pulled", "pulling", "pulls"]),
    ("push", &["push", "pushed", "pushing", "pushes"]),
    ("reduc", &["reduce", "reduced", "reducing"]),
    ("refactor", &["refactor", "refactored", "refactoring"]),
    ("remov", &["remove", "removed", "removing"]),
    ("renam", &["rename", "renamed", "renaming", "renames"]),
    ("separat", &["separate", "separated", "separating"]),
    ("shift", &["shift", "shifted", "shifting"]),
    ("shorten", &["shorten", "shortened", "shortening"]),
    ("simplif", &["simplify", "simplified", "simplifying"]),
    ("solv", &["solve", "solved", "solving"]),
    ("split", &["split", "splitting", "splits"]),
    ("tid", &["tidy", "tidied", "tidying"]),
    ("unif", &["unify", "unified", "unifying"]),
    ("uniformiz", &["uniformize", "uniformized"]),
    ("updat", &["update", "updated", "updating"]),
];

const VERBS: &[&str] = &[
    "get", "set", "parse", "load", "build", "compute", "handle", "render", "validate", "find", "read", "write", "init",
    "format", "resolve", "apply", "check", "convert", "emit", "encode",
];
const NOUNS: &[&str] = &[
    "User", "Config", "Request", "Session", "Token", "Node", "Cache", "Buffer", "Query", "Event", "Index", "Layout",
    "Record", "Stream", "Plugin", "Schema", "Widget", "Path", "Entry", "Report",
];
const TYPE_SUFFIXES: &[&str] = &[
    "Helper", "Manager", "Service", "Util", "Factory", "Parser", "Handler", "Builder", "Provider", "Adapter",
];
const PROJECTS: &[&str] = &["atlas", "borealis", "cinder", "delta", "ember", "fjord", "granite", "harbor"];

const CONTEXTS: &[&str] = &[
    "in {}",
    "for {}",
    "in {} for readability",
    "as part of the {} cleanup",
    "after code review",
    "to simplify {}",
    "before the next release",
];

/// Unrelated clauses mixed into some messages; several contain another class's keyword.
const DISTRACTORS: &[&str] = &[
    "fix typo in javadoc",
    "update copyright header",
    "add missing unit tests",
    "remove unused imports",
    "format code",
    "update changelog",
    "fix failing build",
    "clean up whitespace",
    "adjust logging levels",
    "improve error message",
    "move constants to the top",
    "renamed a local variable",
    "extract a constant",
    "merge branch master",
    "push the version number",
    "pull latest translations",
    "moved test fixtures",
    "inline comment fixes",
];

/// Generic non-refactoring messages for the `None` class.
const NONE_TEMPLATES: &[&str] = &[
    "Fix null pointer exception in {}",
    "Add unit tests for {}",
    "Update documentation for {}",
    "Bump dependency versions",
    "Improve performance of {}",
    "Add support for a new option in {}",
    "Handle empty input in {}",
    "Fix typo in readme",
    "Update build configuration",
    "Add logging to {}",
    "Configure continuous integration",
    "Prepare release notes",
    "Fix race condition in {}",
    "Add license file",
    "Upgrade to the new client api",
    "Correct error message in {}",
    "Support unicode paths in {}",
    "Fix broken link in docs",
    "Add integration test for {}",
    "Make {} thread safe",
    "Reduce memory usage of {}",
    "Fix off by one error in {}",
    "Allow configuring timeout for {}",
    "Disable flaky test in {}",
    "Translate user interface strings",
    "Validate arguments of {}",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub per_class: usize,
    /// Fraction of messages that get a distractor clause.
    pub distractor_rate: f64,
    pub seed: u64,
    /// Also generate `None` messages.
    pub include_none: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            per_class: 100,
            distractor_rate: 0.3,
            seed: 0,
            include_none: false,
        }
    }
}

fn identifier(rng: &mut ChaCha8Rng) -> String {
    let noun = NOUNS.choose(rng).expect("nonempty");
    if rng.gen_bool(0.5) {
        format!("{}{}", VERBS.choose(rng).expect("nonempty"), noun)
    } else {
        format!("{}{}", noun, TYPE_SUFFIXES.choose(rng).expect("nonempty"))
    }
}

fn realize_word(word: &str, rng: &mut ChaCha8Rng) -> String {
    if word == "[]" {
        return identifier(rng);
    }
    let Some(star) = word.find('*') else {
        return word.to_string();
    };
    let (lead, stem) = split_leading_punct(&word[..star]);
    let rest = &word[star + 1..];
    let lower = stem.to_lowercase();
    let form = STEM_FORMS
        .iter()
        .find(|(s, _)| *s == lower)
        .map(|(_, forms)| forms.choose(rng).expect("nonempty").to_string())
        .unwrap_or_else(|| format!("{lower}ed"));
    let form = if stem.chars().next().is_some_and(char::is_uppercase) {
        capitalize(&form)
    } else {
        form
    };
    format!("{lead}{form}{rest}")
}

fn split_leading_punct(s: &str) -> (&str, &str) {
    let i = s.find(|c: char| c.is_alphanumeric()).unwrap_or(s.len());
    s.split_at(i)
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// One concrete message for a catalog pattern.
pub fn realize(pattern: &str, rng: &mut ChaCha8Rng) -> String {
    pattern
        .split_whitespace()
        .map(|w| realize_word(w, rng))
        .collect::<Vec<_>>()
        .join(" ")
}

fn fill(template: &str, rng: &mut ChaCha8Rng) -> String {
    if template.contains("{}") {
        template.replace("{}", &identifier(rng))
    } else {
        template.to_string()
    }
}

fn decorate(core: String, distractor_rate: f64, rng: &mut ChaCha8Rng) -> String {
    let mut message = core;
    if rng.gen_bool(0.4) {
        message = format!("{message} {}", fill(CONTEXTS.choose(rng).expect("nonempty"), rng));
    }
    if rng.gen_bool(distractor_rate) {
        let clause = DISTRACTORS.choose(rng).expect("nonempty");
        message = match rng.gen_range(0..3) {
            0 => format!("{message}; also {clause}"),
            1 => format!("{message} and {clause}"),
            _ => format!("{message}. {}", capitalize(clause)),
        };
    }
    let mut message = capitalize(&message);
    if rng.gen_bool(0.3) {
        message.push('.');
    }
    message
}

fn class_slug(class: RefactoringType) -> &'static str {
    match class {
        RefactoringType::ExtractMethod => "extract",
        RefactoringType::InlineMethod => "inline",
        RefactoringType::MoveMethod => "move",
        RefactoringType::None => "none",
        RefactoringType::PullUpMethod => "pullup",
        RefactoringType::PushDownMethod => "pushdown",
        RefactoringType::RenameMethod => "rename",
    }
}

/// A message documenting `class`; patterns are visited in shuffled passes so
/// every pattern is used before any repeats.
struct MessageSource<'a> {
    catalog: &'a PatternCatalog,
    queues: std::collections::BTreeMap<RefactoringType, Vec<String>>,
}

impl<'a> MessageSource<'a> {
    fn new(catalog: &'a PatternCatalog) -> Self {
        MessageSource {
            catalog,
            queues: Default::default(),
        }
    }

    fn next(&mut self, class: RefactoringType, distractor_rate: f64, rng: &mut ChaCha8Rng) -> String {
        if class.is_none() {
            let t = NONE_TEMPLATES.choose(rng).expect("nonempty");
            return decorate(fill(t, rng), distractor_rate, rng);
        }
        let queue = self.queues.entry(class).or_default();
        if queue.is_empty() {
            let mut pass: Vec<String> = self.catalog.patterns(class).iter().map(|p| p.text.clone()).collect();
            pass.shuffle(rng);
            pass.reverse();
            *queue = pass;
        }
        let pattern = queue.pop().expect("catalog has patterns for every method-level class");
        let core = realize(&pattern, rng);
        decorate(core, distractor_rate, rng)
    }
}

fn classes(include_none: bool) -> Vec<RefactoringType> {
    RefactoringType::ALL
        .into_iter()
        .filter(|c| include_none || !c.is_none())
        .collect()
}

pub fn synthetic_corpus(config: &SynthConfig) -> Dataset {
    synthetic_corpus_from(config, PatternCatalog::bundled())
}

pub fn synthetic_corpus_from(config: &SynthConfig, catalog: &PatternCatalog) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut source = MessageSource::new(catalog);
    let mut records = Vec::new();
    for class in classes(config.include_none) {
        for i in 0..config.per_class {
            let message = source.next(class, config.distractor_rate, &mut rng);
            records.push(CommitRecord {
                id: format!("syn-{}-{:04}", class_slug(class), i + 1),
                project: PROJECTS.choose(&mut rng).expect("nonempty").to_string(),
                message,
                label: Some(class),
            });
        }
    }
    Dataset::new(records).expect("generated ids are unique and messages nonempty")
}

/// Records whose label is a detector verdict that may disagree with the
/// message. About 70% agree; the rest split between code-only, doc-only and
/// mismatched-type pairs.
pub fn synthetic_detector_corpus(per_class: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut source = MessageSource::new(PatternCatalog::bundled());
    let mut records = Vec::new();
    for class in classes(true) {
        for i in 0..per_class {
            let message = source.next(class, 0.3, &mut rng);
            let detector = if rng.gen_bool(0.7) {
                class
            } else if class.is_none() {
                *RefactoringType::METHOD_LEVEL.choose(&mut rng).expect("nonempty")
            } else if rng.gen_bool(0.5) {
                RefactoringType::None
            } else {
                let others: Vec<_> = RefactoringType::METHOD_LEVEL.into_iter().filter(|&c| c != class).collect();
                *others.choose(&mut rng).expect("nonempty")
            };
            records.push(CommitRecord {
                id: format!("det-{}-{:04}", class_slug(class), i + 1),
                project: PROJECTS.choose(&mut rng).expect("nonempty").to_string(),
                message,
                label: Some(detector),
            });
        }
    }
    Dataset::new(records).expect("generated ids are unique and messages nonempty")
}

fn parse_bundled(text: &str) -> Result<Dataset> {
    crate::corpus::read_jsonl(text.as_bytes())
}

/// The bundled 600-message corpus (100 per method-level class).
pub fn bundled_synthetic() -> Result<Dataset> {
    parse_bundled(BUNDLED_SYNTHETIC)
}

/// The bundled corpus with an extra 100 `None` messages.
pub fn bundled_synthetic_with_none() -> Result<Dataset> {
    parse_bundled(BUNDLED_SYNTHETIC_NONE)
}

/// The bundled detector-labeled corpus.
pub fn bundled_detector_corpus() -> Result<Dataset> {
    parse_bundled(BUNDLED_SYNTHETIC_DETECTOR)
}

/// Generator settings behind the bundled files.
pub const BUNDLED_SEED: u64 = 2020;
pub const BUNDLED_DETECTOR_SEED: u64 = 4;
pub const BUNDLED_DETECTOR_PER_CLASS: usize = 60;
