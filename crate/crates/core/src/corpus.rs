//! Parallel AI/human corpus records, their validation, line-delimited JSON
//! persistence and document-disjoint train/validation/test splits.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::segment::tokenize_words;

/// Minimum word count for either side of a chunk pair.
pub const MIN_WORDS: usize = 10;

/// Identity of a chunk within a corpus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RecordKey {
    pub doc_id: String,
    pub chunk_idx: u64,
}

impl fmt::Display for RecordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.doc_id, self.chunk_idx)
    }
}

/// One aligned AI/human chunk pair with its provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub doc_id: String,
    pub chunk_idx: u64,
    pub ai: String,
    pub human: String,
    pub style: String,
    pub model: String,
    pub prompt_id: String,
}

impl CorpusRecord {
    pub fn key(&self) -> RecordKey {
        RecordKey {
            doc_id: self.doc_id.clone(),
            chunk_idx: self.chunk_idx,
        }
    }
}

/// A model's rewrite of one corpus chunk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationRecord {
    pub doc_id: String,
    pub chunk_idx: u64,
    pub output: String,
}

impl EvaluationRecord {
    pub fn key(&self) -> RecordKey {
        RecordKey {
            doc_id: self.doc_id.clone(),
            chunk_idx: self.chunk_idx,
        }
    }
}

/// Wire form with every field optional so that a missing field surfaces as
/// a named violation instead of a decoder message.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCorpusRecord {
    doc_id: Option<String>,
    chunk_idx: Option<u64>,
    ai: Option<String>,
    human: Option<String>,
    style: Option<String>,
    model: Option<String>,
    prompt_id: Option<String>,
}

impl RawCorpusRecord {
    fn into_record(self) -> std::result::Result<CorpusRecord, (String, Vec<Violation>)> {
        let mut missing = Vec::new();
        let mut take = |name: &'static str, value: Option<String>| {
            value.unwrap_or_else(|| {
                missing.push(Violation::MissingField(name));
                String::new()
            })
        };
        let doc_id = take("doc_id", self.doc_id);
        let ai = take("ai", self.ai);
        let human = take("human", self.human);
        let style = take("style", self.style);
        let model = take("model", self.model);
        let prompt_id = take("prompt_id", self.prompt_id);
        if self.chunk_idx.is_none() {
            missing.push(Violation::MissingField("chunk_idx"));
        }
        if missing.is_empty() {
            Ok(CorpusRecord {
                doc_id,
                chunk_idx: self.chunk_idx.unwrap_or_default(),
                ai,
                human,
                style,
                model,
                prompt_id,
            })
        } else {
            let key = match self.chunk_idx {
                Some(idx) => format!("{doc_id}#{idx}"),
                None => format!("{doc_id}#?"),
            };
            Err((key, missing))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Violation {
    MissingField(&'static str),
    EmptyText {
        field: &'static str,
    },
    TooFewWords {
        field: &'static str,
        words: usize,
        minimum: usize,
    },
    DuplicateKey,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingField(field) => write!(f, "missing field \"{field}\""),
            Violation::EmptyText { field } => write!(f, "field \"{field}\" is empty"),
            Violation::TooFewWords {
                field,
                words,
                minimum,
            } => write!(
                f,
                "field \"{field}\" has {words} words, below the {minimum}-word minimum"
            ),
            Violation::DuplicateKey => write!(f, "duplicate (doc_id, chunk_idx)"),
        }
    }
}

/// Checks the per-record invariants and returns every violation found.
pub fn validate_record(record: &CorpusRecord) -> Vec<Violation> {
    let mut violations = Vec::new();
    for (field, text) in [("ai", &record.ai), ("human", &record.human)] {
        if text.trim().is_empty() {
            violations.push(Violation::EmptyText { field });
        }
        let words = tokenize_words(text).len();
        if words < MIN_WORDS {
            violations.push(Violation::TooFewWords {
                field,
                words,
                minimum: MIN_WORDS,
            });
        }
    }
    violations
}

/// Validates a batch, including key uniqueness. Only records with at least
/// one violation are returned, paired with their position in `records`.
pub fn validate_batch(records: &[CorpusRecord]) -> Vec<(usize, Vec<Violation>)> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (pos, record) in records.iter().enumerate() {
        let mut violations = validate_record(record);
        if !seen.insert((record.doc_id.as_str(), record.chunk_idx)) {
            violations.push(Violation::DuplicateKey);
        }
        if !violations.is_empty() {
            out.push((pos, violations));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadMode {
    /// Any invalid record is an error.
    #[default]
    Strict,
    /// Invalid records are dropped and reported.
    Permissive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedRecord {
    pub line: usize,
    pub key: String,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LoadOutcome {
    pub records: Vec<CorpusRecord>,
    pub dropped: Vec<DroppedRecord>,
}

/// Reads a corpus strictly: the first invalid record is an error.
pub fn load_corpus<R: BufRead>(reader: R) -> Result<Vec<CorpusRecord>> {
    load_corpus_with(reader, LoadMode::Strict).map(|outcome| outcome.records)
}

pub fn load_corpus_with<R: BufRead>(reader: R, mode: LoadMode) -> Result<LoadOutcome> {
    let mut outcome = LoadOutcome::default();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(format!("reading corpus line {line_no}"), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawCorpusRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let (key, violations, record) = match raw.into_record() {
            Ok(record) => {
                let mut violations = validate_record(&record);
                if !seen.insert(record.key()) {
                    violations.push(Violation::DuplicateKey);
                }
                (record.key().to_string(), violations, Some(record))
            }
            Err((key, violations)) => (key, violations, None),
        };
        match (violations.is_empty(), mode) {
            (true, _) => outcome.records.extend(record),
            (false, LoadMode::Strict) => {
                return Err(Error::Validation {
                    line: Some(line_no),
                    key,
                    violations,
                })
            }
            (false, LoadMode::Permissive) => outcome.dropped.push(DroppedRecord {
                line: line_no,
                key,
                violations,
            }),
        }
    }
    Ok(outcome)
}

pub fn load_corpus_path(path: &Path) -> Result<Vec<CorpusRecord>> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    load_corpus(BufReader::new(file))
}

struct CountingWriter<W> {
    inner: W,
    written: u64,
}

impl<W: Write> Write for CountingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.written += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

fn write_lines<T: Serialize, W: Write>(items: &[T], writer: W, what: &str) -> Result<u64> {
    let mut out = CountingWriter {
        inner: writer,
        written: 0,
    };
    for (idx, item) in items.iter().enumerate() {
        serde_json::to_writer(&mut out, item)
            .map_err(|e| Error::io(format!("writing {what} record {}", idx + 1), e.into()))?;
        out.write_all(b"\n")
            .map_err(|e| Error::io(format!("writing {what} record {}", idx + 1), e))?;
    }
    out.flush()
        .map_err(|e| Error::io(format!("flushing {what}"), e))?;
    Ok(out.written)
}

/// Writes one JSON object per line and returns the number of bytes written.
/// Records are validated first; nothing is written if any is invalid.
pub fn write_corpus<W: Write>(records: &[CorpusRecord], writer: W) -> Result<u64> {
    if let Some((pos, violations)) = validate_batch(records).into_iter().next() {
        return Err(Error::Validation {
            line: None,
            key: records[pos].key().to_string(),
            violations,
        });
    }
    write_lines(records, writer, "corpus")
}

pub fn load_evaluations<R: BufRead>(reader: R) -> Result<Vec<EvaluationRecord>> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(format!("reading evaluation line {line_no}"), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: EvaluationRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let mut violations = Vec::new();
        if record.output.trim().is_empty() {
            violations.push(Violation::EmptyText { field: "output" });
        }
        if !seen.insert(record.key()) {
            violations.push(Violation::DuplicateKey);
        }
        if !violations.is_empty() {
            return Err(Error::Validation {
                line: Some(line_no),
                key: record.key().to_string(),
                violations,
            });
        }
        records.push(record);
    }
    Ok(records)
}

pub fn load_evaluations_path(path: &Path) -> Result<Vec<EvaluationRecord>> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    load_evaluations(BufReader::new(file))
}

pub fn write_evaluations<W: Write>(records: &[EvaluationRecord], writer: W) -> Result<u64> {
    write_lines(records, writer, "evaluation")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Train/validation/test fractions; non-negative and summing to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl SplitRatios {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self> {
        let parts = [train, validation, test];
        if parts.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::argument(format!(
                "split ratios must be finite and non-negative, got {train}, {validation}, {test}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::argument(format!(
                "split ratios must sum to 1, got {sum}"
            )));
        }
        Ok(SplitRatios {
            train,
            validation,
            test,
        })
    }

    fn bucket(&self, point: f64) -> Split {
        if point < self.train {
            Split::Train
        } else if point < self.train + self.validation || self.test == 0.0 {
            Split::Validation
        } else {
            Split::Test
        }
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.9,
            validation: 0.05,
            test: 0.05,
        }
    }
}

impl FromStr for SplitRatios {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::argument(format!("bad split ratios {s:?}: {e}")))?;
        match parts[..] {
            [train, validation, test] => SplitRatios::new(train, validation, test),
            _ => Err(Error::argument(format!(
                "expected three comma-separated ratios, got {s:?}"
            ))),
        }
    }
}

/// Position of a document on [0, 1), a function of `(doc_id, seed)` only.
pub fn split_point(doc_id: &str, seed: u64) -> f64 {
    let digest = Sha256::new()
        .chain_update(seed.to_le_bytes())
        .chain_update(doc_id.as_bytes())
        .finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    // 53 high bits give an exactly representable value below 1.
    (u64::from_be_bytes(head) >> 11) as f64 / (1u64 << 53) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub ratios: SplitRatios,
    pub seed: u64,
    pub assignments: BTreeMap<String, Split>,
}

impl SplitAssignment {
    pub fn split_of(&self, doc_id: &str) -> Option<Split> {
        self.assignments.get(doc_id).copied()
    }

    pub fn doc_ids(&self, split: Split) -> impl Iterator<Item = &str> {
        self.assignments
            .iter()
            .filter(move |(_, s)| **s == split)
            .map(|(d, _)| d.as_str())
    }

    /// Document counts per split, in `Split::ALL` order.
    pub fn document_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for split in self.assignments.values() {
            counts[*split as usize] += 1;
        }
        counts
    }

    /// Partitions records by their document's split, preserving order.
    pub fn partition<'a>(&self, records: &'a [CorpusRecord]) -> [Vec<&'a CorpusRecord>; 3] {
        let mut parts: [Vec<&CorpusRecord>; 3] = Default::default();
        for record in records {
            if let Some(split) = self.split_of(&record.doc_id) {
                parts[split as usize].push(record);
            }
        }
        parts
    }
}

/// Assigns every document to one split by hashing its id with the seed.
pub fn split_by_document(
    records: &[CorpusRecord],
    ratios: SplitRatios,
    seed: u64,
) -> SplitAssignment {
    let assignments = records
        .iter()
        .map(|r| {
            (
                r.doc_id.clone(),
                ratios.bucket(split_point(&r.doc_id, seed)),
            )
        })
        .collect();
    SplitAssignment {
        ratios,
        seed,
        assignments,
    }
}
