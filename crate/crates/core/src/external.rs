//! Externally computed neural metrics (BERTScore, GPT-2 perplexity).
//!
//! These are read from a sidecar file and rendered next to the computed
//! columns; nothing here computes them.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model label of the row holding the human reference baseline.
pub const HUMAN_REFERENCE: &str = "human_ref";

/// Rendered next to every external column.
pub const PROVENANCE_NOTE: &str = "externally computed, provenance unspecified";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalEntry {
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bertscore_precision: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bertscore_recall: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bertscore_f1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gpt2_perplexity: Option<f64>,
}

impl ExternalEntry {
    pub fn validate(&self) -> Result<()> {
        let bert = [
            ("bertscore_precision", self.bertscore_precision),
            ("bertscore_recall", self.bertscore_recall),
            ("bertscore_f1", self.bertscore_f1),
        ];
        for (name, value) in bert {
            if let Some(v) = value {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::argument(format!(
                        "{} for model {:?} must lie in [0, 1], got {v}",
                        name, self.model
                    )));
                }
            }
        }
        if let Some(ppl) = self.gpt2_perplexity {
            if !(ppl.is_finite() && ppl > 0.0) {
                return Err(Error::argument(format!(
                    "gpt2_perplexity for model {:?} must be positive, got {ppl}",
                    self.model
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExternalMetrics {
    entries: BTreeMap<String, ExternalEntry>,
}

impl ExternalMetrics {
    pub fn new(entries: impl IntoIterator<Item = ExternalEntry>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for entry in entries {
            entry.validate()?;
            let model = entry.model.clone();
            if map.insert(model.clone(), entry).is_some() {
                return Err(Error::argument(format!(
                    "external metrics list model {model:?} twice"
                )));
            }
        }
        Ok(ExternalMetrics { entries: map })
    }

    pub fn get(&self, model: &str) -> Option<&ExternalEntry> {
        self.entries.get(model)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Reads one entry per line.
pub fn load_external<R: BufRead>(reader: R) -> Result<ExternalMetrics> {
    let mut entries = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line =
            line.map_err(|e| Error::io(format!("reading external metrics line {line_no}"), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: ExternalEntry = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        entries.push(entry);
    }
    ExternalMetrics::new(entries)
}

pub fn load_external_path(path: &Path) -> Result<ExternalMetrics> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    load_external(BufReader::new(file))
}
