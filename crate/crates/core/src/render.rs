//! Table rendering for reports: Markdown, CSV and pretty-printed JSON.
//!
//! Output is a pure function of the report. Shifts print with 4 decimals,
//! profile means with 2.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::external::{ExternalEntry, PROVENANCE_NOTE};
use crate::markers::{percent_change, Marker, MarkerProfile};
use crate::pipeline::{Analysis, EvaluationReport};
use crate::shift::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Markdown,
    Csv,
    StructuredText,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markdown" | "md" => Ok(Format::Markdown),
            "csv" => Ok(Format::Csv),
            "structured-text" | "json" => Ok(Format::StructuredText),
            other => Err(Error::argument(format!(
                "unknown format {other:?} (expected markdown, csv or structured-text)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    /// Reference similarity, external metrics and mean shift per model.
    Overlap,
    /// Per-marker averages: AI input, each model, human reference.
    Profiles,
    /// Per-marker directional shift per model.
    Shifts,
    /// Per-marker absolute and normalized deviation from the human mean.
    Deviation,
}

impl TableKind {
    pub const ALL: [TableKind; 4] = [
        TableKind::Overlap,
        TableKind::Profiles,
        TableKind::Shifts,
        TableKind::Deviation,
    ];
}

impl FromStr for TableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "overlap" => Ok(TableKind::Overlap),
            "profiles" => Ok(TableKind::Profiles),
            "shifts" => Ok(TableKind::Shifts),
            "deviation" => Ok(TableKind::Deviation),
            other => Err(Error::argument(format!(
                "unknown table {other:?} (expected overlap, profiles, shifts or deviation)"
            ))),
        }
    }
}

/// A rendered-ready table of strings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub footnotes: Vec<String>,
}

impl Table {
    fn new(title: impl Into<String>, header: Vec<String>) -> Self {
        Table {
            title: title.into(),
            header,
            rows: Vec::new(),
            footnotes: Vec::new(),
        }
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!("### {}\n\n", self.title);
        out.push_str(&format!("| {} |\n", self.header.join(" | ")));
        let align: Vec<&str> = (0..self.header.len())
            .map(|i| if i == 0 { "---" } else { "---:" })
            .collect();
        out.push_str(&format!("|{}|\n", align.join("|")));
        for row in &self.rows {
            out.push_str(&format!("| {} |\n", row.join(" | ")));
        }
        if !self.footnotes.is_empty() {
            out.push('\n');
            for note in &self.footnotes {
                out.push_str(&format!("{note}\n"));
            }
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::argument(format!("csv encoding failed: {e}"));
        writer.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            writer.write_record(row).map_err(csv_err)?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| Error::argument(format!("csv encoding failed: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::argument(e.to_string()))
    }
}

/// Fixed-point formatting that never prints a negative zero.
pub fn fixed(value: f64, decimals: usize) -> String {
    let s = format!("{value:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn opt(value: Option<f64>, decimals: usize) -> String {
    value.map_or_else(|| "---".to_string(), |v| fixed(v, decimals))
}

const EXTERNAL_MARK: &str = "*";

fn has_external(report: &EvaluationReport) -> bool {
    report.human_reference_external.is_some() || report.models.iter().any(|m| m.external.is_some())
}

fn external_cells(entry: Option<&ExternalEntry>) -> [String; 4] {
    let get = |f: fn(&ExternalEntry) -> Option<f64>| entry.and_then(f);
    [
        opt(get(|e| e.bertscore_precision), 4),
        opt(get(|e| e.bertscore_recall), 4),
        opt(get(|e| e.bertscore_f1), 4),
        opt(get(|e| e.gpt2_perplexity), 2),
    ]
}

pub fn overlap_table(report: &EvaluationReport) -> Table {
    let external = has_external(report);
    let mut header = vec!["Model".to_string(), "n".to_string()];
    if external {
        for name in ["BERTScore P", "BERTScore R", "BERTScore F1"] {
            header.push(format!("{name}{EXTERNAL_MARK}"));
        }
    }
    header.extend(["ROUGE-L", "chrF++", "Vocab Jaccard"].map(String::from));
    if external {
        header.push(format!("PPL{EXTERNAL_MARK}"));
    }
    header.push("Mean Shift".to_string());

    let mut table = Table::new("Reference similarity and mean shift", header);
    for model in &report.models {
        let ext = external_cells(model.external.as_ref());
        let mut row = vec![model.model.clone(), model.n.to_string()];
        if external {
            row.extend(ext[..3].iter().cloned());
        }
        row.push(fixed(model.overlap.rouge_l_f1, 4));
        row.push(fixed(model.overlap.chrf_pp, 2));
        row.push(fixed(model.overlap.vocab_jaccard, 4));
        if external {
            row.push(ext[3].clone());
        }
        row.push(opt(model.shift.mean_shift, 4));
        table.rows.push(row);
    }
    if let Some(human) = &report.human_reference_external {
        let ext = external_cells(Some(human));
        let mut row = vec!["Human ref".to_string(), report.corpus_n.to_string()];
        row.extend(ext[..3].iter().cloned());
        row.extend(["---", "---", "---"].map(String::from));
        row.push(ext[3].clone());
        row.push("---".to_string());
        table.rows.push(row);
    }
    if external {
        table
            .footnotes
            .push(format!("{EXTERNAL_MARK} {PROVENANCE_NOTE}"));
    }
    table
}

fn profile_row(label: &str, values: impl Iterator<Item = f64>) -> Vec<String> {
    std::iter::once(label.to_string())
        .chain(values.map(|v| fixed(v, 2)))
        .collect()
}

pub fn profile_table(report: &EvaluationReport) -> Table {
    let mut header = vec!["Marker".to_string(), "AI Input".to_string()];
    header.extend(report.models.iter().map(|m| m.model.clone()));
    header.push("Human Ref".to_string());
    let mut table = Table::new(
        format!("Per-marker averages (corpus n = {})", report.corpus_n),
        header,
    );
    for marker in Marker::ALL {
        let values = std::iter::once(report.reference.ai.get(marker))
            .chain(report.models.iter().map(|m| m.output_profile.get(marker)))
            .chain(std::iter::once(report.reference.human.get(marker)));
        table.rows.push(profile_row(marker.label(), values));
    }
    table
}

pub fn shift_table(report: &EvaluationReport) -> Table {
    let mut header = vec!["Marker".to_string()];
    header.extend(report.models.iter().map(|m| m.model.clone()));
    header.push("Note".to_string());
    let mut table = Table::new("Directional marker shift", header);
    for marker in Marker::ALL {
        let mut row = vec![marker.label().to_string()];
        let mut notes = Vec::new();
        for model in &report.models {
            let score = model.shift.score(marker);
            row.push(opt(score.shift, 4));
            match score.classification {
                None => notes.push(format!("{} degenerate", model.model)),
                Some(c) if c.direction != Direction::Undershoot || c.capped => {
                    notes.push(format!("{} {c}", model.model))
                }
                Some(_) => {}
            }
        }
        row.push(notes.join("; "));
        table.rows.push(row);
    }
    table
}

pub fn deviation_table(report: &EvaluationReport) -> Table {
    let mut header = vec!["Marker".to_string()];
    for model in &report.models {
        header.push(format!("{} |out-human|", model.model));
        header.push(format!("{} normalized", model.model));
    }
    let mut table = Table::new("Distance from the human reference", header);
    for (idx, marker) in Marker::ALL.iter().enumerate() {
        let mut row = vec![marker.label().to_string()];
        for model in &report.models {
            let dev = &model.shift.deviation.markers[idx];
            row.push(fixed(dev.absolute, 2));
            row.push(opt(dev.normalized, 4));
        }
        table.rows.push(row);
    }
    let mut mean = vec!["Mean normalized".to_string()];
    for model in &report.models {
        mean.push(String::new());
        mean.push(opt(model.shift.deviation.mean_normalized, 4));
    }
    table.rows.push(mean);
    table
}

pub fn report_table(report: &EvaluationReport, kind: TableKind) -> Table {
    match kind {
        TableKind::Overlap => overlap_table(report),
        TableKind::Profiles => profile_table(report),
        TableKind::Shifts => shift_table(report),
        TableKind::Deviation => deviation_table(report),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::argument(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Renders an evaluation report.
///
/// Markdown without a table selection prints every table; CSV defaults to
/// the shift table; structured text without a selection is the full report.
pub fn render_report(
    report: &EvaluationReport,
    format: Format,
    table: Option<TableKind>,
) -> Result<String> {
    match (format, table) {
        (Format::StructuredText, None) => to_json(report),
        (Format::StructuredText, Some(kind)) => to_json(&report_table(report, kind)),
        (Format::Csv, kind) => report_table(report, kind.unwrap_or(TableKind::Shifts)).to_csv(),
        (Format::Markdown, Some(kind)) => Ok(report_table(report, kind).to_markdown()),
        (Format::Markdown, None) => Ok(TableKind::ALL
            .iter()
            .map(|&k| report_table(report, k).to_markdown())
            .collect::<Vec<_>>()
            .join("\n")),
    }
}

pub fn analysis_table(analysis: &Analysis) -> Table {
    let single = |label: &str, p: &MarkerProfile| {
        let mut t = Table::new(
            format!("Marker profile: {label} (n = {})", p.n),
            vec!["Marker".to_string(), "Mean".to_string()],
        );
        for marker in Marker::ALL {
            t.rows
                .push(profile_row(marker.label(), std::iter::once(p.get(marker))));
        }
        t
    };
    match (&analysis.ai, &analysis.human) {
        (Some(ai), Some(human)) => {
            let mut t = Table::new(
                format!("Marker comparison (n = {})", analysis.n),
                ["Marker", "Human", "AI", "Change"]
                    .map(String::from)
                    .to_vec(),
            );
            for marker in Marker::ALL {
                let mut row = profile_row(
                    marker.label(),
                    [human.get(marker), ai.get(marker)].into_iter(),
                );
                row.push(
                    percent_change(ai.get(marker), human.get(marker))
                        .map_or_else(|| "---".to_string(), |c| format!("{}%", fixed(c, 1))),
                );
                t.rows.push(row);
            }
            t
        }
        (Some(ai), None) => single("ai", ai),
        (None, Some(human)) => single("human", human),
        (None, None) => Table::new("Marker profile (empty)", vec!["Marker".to_string()]),
    }
}

pub fn render_analysis(analysis: &Analysis, format: Format) -> Result<String> {
    match format {
        Format::StructuredText => to_json(analysis),
        Format::Csv => analysis_table(analysis).to_csv(),
        Format::Markdown => Ok(analysis_table(analysis).to_markdown()),
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_markdown())
    }
}
