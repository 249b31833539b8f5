//! Labeled commit-message corpora: loading, validation and stratified sampling.
//!
//! Records are read from JSONL (`{"id", "project", "message", "label"}` per
//! line) or from CSV with the header `id,project,message,label`. Labels use
//! the canonical names returned by [`RefactoringType::name`]; an absent or
//! empty label marks a record for prediction only.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Name of the PRNG behind every seeded operation in this crate.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha, seed_from_u64)";

/// Method-level refactoring types plus the `None` category.
///
/// Variants are declared in alphabetical order of their canonical names, so
/// the derived `Ord` is the class order used by trained models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RefactoringType {
    ExtractMethod,
    InlineMethod,
    MoveMethod,
    None,
    PullUpMethod,
    PushDownMethod,
    RenameMethod,
}

impl RefactoringType {
    /// All members in presentation order (the six method-level types, then `None`).
    pub const ALL: [RefactoringType; 7] = [
        RefactoringType::ExtractMethod,
        RefactoringType::InlineMethod,
        RefactoringType::MoveMethod,
        RefactoringType::PullUpMethod,
        RefactoringType::PushDownMethod,
        RefactoringType::RenameMethod,
        RefactoringType::None,
    ];

    /// The six method-level refactoring types.
    pub const METHOD_LEVEL: [RefactoringType; 6] = [
        RefactoringType::ExtractMethod,
        RefactoringType::InlineMethod,
        RefactoringType::MoveMethod,
        RefactoringType::PullUpMethod,
        RefactoringType::PushDownMethod,
        RefactoringType::RenameMethod,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::ExtractMethod => "ExtractMethod",
            Self::InlineMethod => "InlineMethod",
            Self::MoveMethod => "MoveMethod",
            Self::None => "None",
            Self::PullUpMethod => "PullUpMethod",
            Self::PushDownMethod => "PushDownMethod",
            Self::RenameMethod => "RenameMethod",
        }
    }

    /// Human-readable name, e.g. "Pull Up Method".
    pub fn display_name(self) -> &'static str {
        match self {
            Self::ExtractMethod => "Extract Method",
            Self::InlineMethod => "Inline Method",
            Self::MoveMethod => "Move Method",
            Self::None => "None",
            Self::PullUpMethod => "Pull Up Method",
            Self::PushDownMethod => "Push Down Method",
            Self::RenameMethod => "Rename Method",
        }
    }

    pub fn is_none(self) -> bool {
        self == Self::None
    }
}

impl fmt::Display for RefactoringType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RefactoringType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RefactoringType::ALL
            .iter()
            .copied()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::UnknownLabel {
                label: s.to_string(),
                line: None,
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub id: String,
    pub project: String,
    pub message: String,
    pub label: Option<RefactoringType>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    /// Guess the format from a file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(Error::InvalidConfig(format!("unknown corpus format {other:?}"))),
        }
    }
}

/// An ordered, validated collection of commit records.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    records: Vec<CommitRecord>,
    class_counts: BTreeMap<RefactoringType, usize>,
}

impl Dataset {
    /// Validates ids and messages, then builds the label histogram.
    pub fn new(records: Vec<CommitRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for (i, record) in records.iter().enumerate() {
            let line = i + 1;
            if record.id.is_empty() {
                return Err(Error::Parse {
                    line,
                    message: "empty id".into(),
                });
            }
            if record.message.is_empty() {
                return Err(Error::Parse {
                    line,
                    message: format!("record {:?} has an empty message", record.id),
                });
            }
            if !seen.insert(record.id.as_str()) {
                return Err(Error::DuplicateId {
                    id: record.id.clone(),
                    line,
                });
            }
        }
        let class_counts = histogram(&records);
        Ok(Dataset {
            records,
            class_counts,
        })
    }

    pub fn records(&self) -> &[CommitRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn class_counts(&self) -> &BTreeMap<RefactoringType, usize> {
        &self.class_counts
    }

    /// Records with a label, paired with it.
    pub fn labeled(&self) -> impl Iterator<Item = (&CommitRecord, RefactoringType)> {
        self.records
            .iter()
            .filter_map(|r| r.label.map(|label| (r, label)))
    }

    /// The labels of every record, failing on the first unlabeled one.
    pub fn require_labels(&self) -> Result<Vec<RefactoringType>> {
        self.records
            .iter()
            .map(|r| {
                r.label.ok_or_else(|| Error::Unlabeled { id: r.id.clone() })
            })
            .collect()
    }

    /// Subset by record position, keeping the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let records: Vec<_> = indices.iter().map(|&i| self.records[i].clone()).collect();
        let class_counts = histogram(&records);
        Dataset {
            records,
            class_counts,
        }
    }

    /// Hex SHA-256 over the canonical JSONL encoding of the records.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for record in &self.records {
            // serialization of these plain structs cannot fail
            let line = serde_json::to_string(&JsonRecord::from(record)).unwrap_or_default();
            hasher.update(line.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        for record in &self.records {
            serde_json::to_writer(&mut out, &JsonRecord::from(record))?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut writer = std::io::BufWriter::new(file);
        self.write_jsonl(&mut writer)
            .and_then(|_| writer.flush())
            .map_err(|e| Error::io(path, e))
    }
}

fn histogram(records: &[CommitRecord]) -> BTreeMap<RefactoringType, usize> {
    let mut counts = BTreeMap::new();
    for label in records.iter().filter_map(|r| r.label) {
        *counts.entry(label).or_insert(0) += 1;
    }
    counts
}

#[derive(Serialize, Deserialize)]
struct JsonRecord {
    id: String,
    #[serde(default)]
    project: String,
    message: String,
    #[serde(default)]
    label: Option<String>,
}

impl From<&CommitRecord> for JsonRecord {
    fn from(r: &CommitRecord) -> Self {
        JsonRecord {
            id: r.id.clone(),
            project: r.project.clone(),
            message: r.message.clone(),
            label: r.label.map(|l| l.name().to_string()),
        }
    }
}

fn parse_label(raw: Option<&str>, line: usize) -> Result<Option<RefactoringType>> {
    match raw {
        None | Some("") => Ok(None),
        Some(s) => s
            .parse()
            .map(Some)
            .map_err(|_| Error::UnknownLabel {
                label: s.to_string(),
                line: Some(line),
            }),
    }
}

/// Line-aware validation; `Dataset::new` repeats the checks without line context.
fn push_record(
    records: &mut Vec<CommitRecord>,
    seen: &mut HashSet<String>,
    record: CommitRecord,
    line: usize,
) -> Result<()> {
    if record.id.is_empty() {
        return Err(Error::Parse {
            line,
            message: "empty id".into(),
        });
    }
    if record.message.is_empty() {
        return Err(Error::Parse {
            line,
            message: "empty message".into(),
        });
    }
    if !seen.insert(record.id.clone()) {
        return Err(Error::DuplicateId {
            id: record.id,
            line,
        });
    }
    records.push(record);
    Ok(())
}

pub fn read_jsonl(reader: impl BufRead) -> Result<Dataset> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: JsonRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let label = parse_label(raw.label.as_deref(), line_no)?;
        let record = CommitRecord {
            id: raw.id,
            project: raw.project,
            message: raw.message,
            label,
        };
        push_record(&mut records, &mut seen, record, line_no)?;
    }
    finish(records)
}

pub fn read_csv(reader: impl std::io::Read) -> Result<Dataset> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = csv
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("missing column {name:?}"),
        })
    };
    let (id_col, project_col, message_col) = (column("id")?, column("project")?, column("message")?);
    let label_col = headers.iter().position(|h| h == "label");

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for row in csv.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line_no = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |col: usize| row.get(col).unwrap_or("").to_string();
        let label = parse_label(label_col.and_then(|c| row.get(c)), line_no)?;
        let record = CommitRecord {
            id: field(id_col),
            project: field(project_col),
            message: field(message_col),
            label,
        };
        push_record(&mut records, &mut seen, record, line_no)?;
    }
    finish(records)
}

fn finish(records: Vec<CommitRecord>) -> Result<Dataset> {
    if records.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no records".into(),
        });
    }
    Dataset::new(records)
}

pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    match format {
        CorpusFormat::Jsonl => read_jsonl(BufReader::new(file)),
        CorpusFormat::Csv => read_csv(BufReader::new(file)),
    }
}

/// Draws exactly `per_class` labeled records from every class present in `d`.
///
/// Unlabeled records are never selected. The output keeps the input order.
pub fn stratified_sample(d: &Dataset, per_class: usize, seed: u64) -> Result<Dataset> {
    let mut by_class: BTreeMap<RefactoringType, Vec<usize>> = BTreeMap::new();
    for (i, record) in d.records.iter().enumerate() {
        if let Some(label) = record.label {
            by_class.entry(label).or_default().push(i);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::with_capacity(per_class * by_class.len());
    for (class, mut indices) in by_class {
        if indices.len() < per_class {
            return Err(Error::InsufficientClass {
                class,
                available: indices.len(),
                requested: per_class,
            });
        }
        indices.shuffle(&mut rng);
        chosen.extend_from_slice(&indices[..per_class]);
    }
    chosen.sort_unstable();
    Ok(d.select(&chosen))
}

pub fn class_distribution(d: &Dataset) -> BTreeMap<RefactoringType, usize> {
    d.class_counts.clone()
}
