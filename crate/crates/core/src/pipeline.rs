//! End-to-end operations behind the CLI: building a chunk-aligned corpus
//! from full documents, profiling a corpus, and evaluating model outputs.
//!
//! Per-item work may run on a thread pool; every reduction happens in
//! `(doc_id, chunk_idx)` order, so results do not depend on the number of
//! workers.

use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    split_by_document, CorpusRecord, EvaluationRecord, RecordKey, Split, SplitAssignment,
    SplitRatios, MIN_WORDS,
};
use crate::error::{Error, Result};
use crate::external::{ExternalEntry, ExternalMetrics, HUMAN_REFERENCE};
use crate::markers::{
    aggregate_profile, compute_markers, percent_change, Marker, MarkerProfile, MarkerVector,
};
use crate::overlap::{aggregate_overlap, pair_overlap, ChrfMode, OverlapScores};
use crate::segment::{align_chunks, chunk_text, TokenCounter, DEFAULT_BUDGET};
use crate::shift::{
    per_example_shift_report, shift_report, ExampleMarkers, ShiftMode, ShiftParams, ShiftReport,
};

/// Runs `f` on a pool of `jobs` workers (at least one).
pub fn with_jobs<T, F>(jobs: usize, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::argument(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(f))
}

/// A full document in both versions, the input to corpus construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDocument {
    pub doc_id: String,
    pub ai: String,
    pub human: String,
    #[serde(default)]
    pub style: String,
    #[serde(default)]
    pub model: String,
    #[serde(default)]
    pub prompt_id: String,
}

pub fn load_documents<R: BufRead>(reader: R) -> Result<Vec<RawDocument>> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(format!("reading document line {line_no}"), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: RawDocument = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if !seen.insert(doc.doc_id.clone()) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("duplicate doc_id {:?}", doc.doc_id),
            });
        }
        docs.push(doc);
    }
    Ok(docs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub budget: usize,
    pub ratios: SplitRatios,
    pub seed: u64,
    #[serde(skip)]
    pub jobs: usize,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            budget: DEFAULT_BUDGET,
            ratios: SplitRatios::default(),
            seed: 0,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MismatchEntry {
    pub doc_id: String,
    pub ai_chunks: usize,
    pub human_chunks: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShortPair {
    pub doc_id: String,
    pub chunk_idx: u64,
    pub ai_words: usize,
    pub human_words: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitCount {
    pub documents: usize,
    pub records: usize,
}

/// Accounting for one corpus build. Chunk counts are in chunk positions:
/// position `i` of a document exists when either side has an `i`-th chunk,
/// so `chunks_in = chunks_paired + chunks_dropped_short +
/// chunks_unpaired_mismatch`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub config: BuildConfig,
    pub documents: usize,
    pub chunks_in: usize,
    pub chunks_paired: usize,
    pub chunks_dropped_short: usize,
    pub chunks_unpaired_mismatch: usize,
    pub mismatches: Vec<MismatchEntry>,
    pub dropped_short: Vec<ShortPair>,
    pub splits: BTreeMap<Split, SplitCount>,
}

impl BuildReport {
    pub fn is_conserved(&self) -> bool {
        self.chunks_in
            == self.chunks_paired + self.chunks_dropped_short + self.chunks_unpaired_mismatch
    }
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub records: Vec<CorpusRecord>,
    pub assignment: SplitAssignment,
    pub report: BuildReport,
}

impl BuildOutput {
    /// Records of one split, in build order.
    pub fn split_records(&self, split: Split) -> Vec<CorpusRecord> {
        self.records
            .iter()
            .filter(|r| self.assignment.split_of(&r.doc_id) == Some(split))
            .cloned()
            .collect()
    }
}

struct DocumentBuild {
    records: Vec<CorpusRecord>,
    positions: usize,
    mismatch: Option<MismatchEntry>,
    short: Vec<ShortPair>,
}

fn build_document<C>(doc: &RawDocument, budget: usize, counter: &C) -> Result<DocumentBuild>
where
    C: TokenCounter + ?Sized,
{
    let ai = chunk_text(&doc.ai, budget, counter)?;
    let human = chunk_text(&doc.human, budget, counter)?;
    let positions = ai.len().max(human.len());
    let (ai_chunks, human_chunks) = (ai.len(), human.len());
    let alignment = align_chunks(ai, human);
    let mismatch = alignment.is_mismatch().then(|| MismatchEntry {
        doc_id: doc.doc_id.clone(),
        ai_chunks,
        human_chunks,
    });
    let mut records = Vec::new();
    let mut short = Vec::new();
    for pair in alignment.pairs {
        let chunk_idx = pair.index as u64;
        if pair.ai.word_count < MIN_WORDS || pair.human.word_count < MIN_WORDS {
            short.push(ShortPair {
                doc_id: doc.doc_id.clone(),
                chunk_idx,
                ai_words: pair.ai.word_count,
                human_words: pair.human.word_count,
            });
            continue;
        }
        records.push(CorpusRecord {
            doc_id: doc.doc_id.clone(),
            chunk_idx,
            ai: pair.ai.text,
            human: pair.human.text,
            style: doc.style.clone(),
            model: doc.model.clone(),
            prompt_id: doc.prompt_id.clone(),
        });
    }
    Ok(DocumentBuild {
        records,
        positions,
        mismatch,
        short,
    })
}

/// Sentence-splits, chunks, aligns and filters every document, then
/// assigns documents to splits.
pub fn build_corpus<C>(
    docs: &[RawDocument],
    config: BuildConfig,
    counter: &C,
) -> Result<BuildOutput>
where
    C: TokenCounter + Sync + ?Sized,
{
    let built: Vec<DocumentBuild> = with_jobs(config.jobs, || {
        docs.par_iter()
            .map(|doc| build_document(doc, config.budget, counter))
            .collect::<Result<Vec<_>>>()
    })??;

    let mut records = Vec::new();
    let mut mismatches = Vec::new();
    let mut dropped_short = Vec::new();
    let mut chunks_in = 0;
    let mut chunks_unpaired_mismatch = 0;
    for doc in built {
        chunks_in += doc.positions;
        if let Some(m) = doc.mismatch {
            chunks_unpaired_mismatch += m.ai_chunks.abs_diff(m.human_chunks);
            mismatches.push(m);
        }
        dropped_short.extend(doc.short);
        records.extend(doc.records);
    }

    let assignment = split_by_document(&records, config.ratios, config.seed);
    let mut splits: BTreeMap<Split, SplitCount> = Split::ALL
        .iter()
        .map(|&s| (s, SplitCount::default()))
        .collect();
    for (split, docs) in Split::ALL.iter().zip(assignment.document_counts()) {
        splits.entry(*split).or_default().documents = docs;
    }
    for record in &records {
        if let Some(split) = assignment.split_of(&record.doc_id) {
            splits.entry(split).or_default().records += 1;
        }
    }

    let report = BuildReport {
        config,
        documents: docs.len(),
        chunks_in,
        chunks_paired: records.len(),
        chunks_dropped_short: dropped_short.len(),
        chunks_unpaired_mismatch,
        mismatches,
        dropped_short,
        splits,
    };
    Ok(BuildOutput {
        records,
        assignment,
        report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Population {
    Ai,
    Human,
}

fn sorted_refs(records: &[CorpusRecord]) -> Vec<&CorpusRecord> {
    let mut sorted: Vec<&CorpusRecord> = records.iter().collect();
    sorted.sort_by(|a, b| (&a.doc_id, a.chunk_idx).cmp(&(&b.doc_id, b.chunk_idx)));
    sorted
}

fn markers_of<'a, I>(texts: I) -> Result<Vec<MarkerVector>>
where
    I: IndexedParallelIterator<Item = &'a str>,
{
    texts.map(compute_markers).collect()
}

/// Marker vectors of one population, in key order.
pub fn population_vectors(
    records: &[CorpusRecord],
    population: Population,
    jobs: usize,
) -> Result<Vec<MarkerVector>> {
    let sorted = sorted_refs(records);
    with_jobs(jobs, || {
        markers_of(sorted.par_iter().map(|r| match population {
            Population::Ai => r.ai.as_str(),
            Population::Human => r.human.as_str(),
        }))
    })?
}

pub fn population_profile(
    records: &[CorpusRecord],
    population: Population,
    jobs: usize,
) -> Result<MarkerProfile> {
    if records.is_empty() {
        return Err(Error::argument("cannot profile an empty corpus"));
    }
    aggregate_profile(&population_vectors(records, population, jobs)?)
}

/// AI and human profiles of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceProfiles {
    pub ai: MarkerProfile,
    pub human: MarkerProfile,
}

pub fn reference_profiles(records: &[CorpusRecord], jobs: usize) -> Result<ReferenceProfiles> {
    Ok(ReferenceProfiles {
        ai: population_profile(records, Population::Ai, jobs)?,
        human: population_profile(records, Population::Human, jobs)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PopulationSelector {
    Ai,
    Human,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerChange {
    pub marker: Marker,
    /// `(ai - human) / human * 100`; `None` when the human mean is 0.
    pub percent: Option<f64>,
}

/// Marker profiles of a corpus, with the AI-vs-human change when both
/// populations are selected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ai: Option<MarkerProfile>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub human: Option<MarkerProfile>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub change: Vec<MarkerChange>,
}

pub fn analyze(
    records: &[CorpusRecord],
    selector: PopulationSelector,
    jobs: usize,
) -> Result<Analysis> {
    let want = |p: Population| -> Result<Option<MarkerProfile>> {
        let selected = matches!(
            (selector, p),
            (PopulationSelector::Both, _)
                | (PopulationSelector::Ai, Population::Ai)
                | (PopulationSelector::Human, Population::Human)
        );
        selected
            .then(|| population_profile(records, p, jobs))
            .transpose()
    };
    let ai = want(Population::Ai)?;
    let human = want(Population::Human)?;
    let change = match (&ai, &human) {
        (Some(ai), Some(human)) => Marker::ALL
            .iter()
            .map(|&marker| MarkerChange {
                marker,
                percent: percent_change(ai.get(marker), human.get(marker)),
            })
            .collect(),
        _ => Vec::new(),
    };
    Ok(Analysis {
        n: records.len(),
        ai,
        human,
        change,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluateConfig {
    pub params: ShiftParams,
    pub chrf_mode: ChrfMode,
    pub shift_mode: ShiftMode,
    #[serde(skip)]
    pub jobs: usize,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        EvaluateConfig {
            params: ShiftParams::default(),
            chrf_mode: ChrfMode::default(),
            shift_mode: ShiftMode::default(),
            jobs: 1,
        }
    }
}

/// Everything computed for one model's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEvaluation {
    pub model: String,
    pub n: usize,
    /// Outputs scored against the human reference chunks.
    pub overlap: OverlapScores,
    pub output_profile: MarkerProfile,
    /// AI-input and human profiles over exactly the chunks this model
    /// rewrote.
    pub ai_profile: MarkerProfile,
    pub human_profile: MarkerProfile,
    pub shift: ShiftReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub external: Option<ExternalEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub config: EvaluateConfig,
    pub corpus_n: usize,
    /// Profiles over the whole corpus.
    pub reference: ReferenceProfiles,
    pub models: Vec<ModelEvaluation>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub human_reference_external: Option<ExternalEntry>,
}

/// A named set of model outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelOutputs {
    pub model: String,
    pub records: Vec<EvaluationRecord>,
}

struct ExampleScore {
    output: MarkerVector,
    overlap: crate::overlap::PairOverlap,
}

fn evaluate_model(
    run: &ModelOutputs,
    corpus: &BTreeMap<RecordKey, (&CorpusRecord, &MarkerVector, &MarkerVector)>,
    config: &EvaluateConfig,
) -> Result<ModelEvaluation> {
    if run.records.is_empty() {
        return Err(Error::argument(format!(
            "model {:?} has no outputs",
            run.model
        )));
    }
    let mut outputs: Vec<&EvaluationRecord> = run.records.iter().collect();
    outputs.sort_by(|a, b| (&a.doc_id, a.chunk_idx).cmp(&(&b.doc_id, b.chunk_idx)));
    let unmatched: Vec<RecordKey> = outputs
        .iter()
        .map(|r| r.key())
        .filter(|k| !corpus.contains_key(k))
        .collect();
    if !unmatched.is_empty() {
        return Err(Error::UnmatchedKeys { keys: unmatched });
    }
    let matched: Vec<_> = outputs.iter().map(|r| corpus[&r.key()]).collect();

    let scored: Vec<ExampleScore> = outputs
        .par_iter()
        .zip(matched.par_iter())
        .map(|(out, (record, _, _))| {
            Ok(ExampleScore {
                output: compute_markers(&out.output)?,
                overlap: pair_overlap(&record.human, &out.output),
            })
        })
        .collect::<Result<_>>()?;

    let pairs: Vec<_> = scored.iter().map(|s| s.overlap).collect();
    let overlap = aggregate_overlap(&pairs, config.chrf_mode)?;
    let output_vectors: Vec<MarkerVector> = scored.iter().map(|s| s.output.clone()).collect();
    let ai_vectors: Vec<MarkerVector> = matched.iter().map(|(_, ai, _)| (*ai).clone()).collect();
    let human_vectors: Vec<MarkerVector> = matched.iter().map(|(_, _, h)| (*h).clone()).collect();
    let output_profile = aggregate_profile(&output_vectors)?;
    let ai_profile = aggregate_profile(&ai_vectors)?;
    let human_profile = aggregate_profile(&human_vectors)?;

    let shift = match config.shift_mode {
        ShiftMode::ProfileMeans => {
            shift_report(&output_profile, &ai_profile, &human_profile, config.params)?
        }
        ShiftMode::PerExample => {
            let examples: Vec<ExampleMarkers> = output_vectors
                .into_iter()
                .zip(ai_vectors)
                .zip(human_vectors)
                .map(|((output, ai), human)| ExampleMarkers { output, ai, human })
                .collect();
            per_example_shift_report(
                &examples,
                &output_profile,
                &ai_profile,
                &human_profile,
                config.params,
            )?
        }
    };

    Ok(ModelEvaluation {
        model: run.model.clone(),
        n: outputs.len(),
        overlap,
        output_profile,
        ai_profile,
        human_profile,
        shift,
        external: None,
    })
}

/// Scores each model's outputs against the corpus.
pub fn evaluate(
    corpus: &[CorpusRecord],
    runs: &[ModelOutputs],
    config: EvaluateConfig,
) -> Result<EvaluationReport> {
    if corpus.is_empty() {
        return Err(Error::argument("cannot evaluate against an empty corpus"));
    }
    let mut names = HashSet::new();
    for run in runs {
        if run.model == HUMAN_REFERENCE || !names.insert(run.model.as_str()) {
            return Err(Error::argument(format!(
                "model name {:?} is reserved or repeated",
                run.model
            )));
        }
    }
    let sorted = sorted_refs(corpus);
    with_jobs(config.jobs, || {
        let ai = markers_of(sorted.par_iter().map(|r| r.ai.as_str()))?;
        let human = markers_of(sorted.par_iter().map(|r| r.human.as_str()))?;
        let index: BTreeMap<RecordKey, (&CorpusRecord, &MarkerVector, &MarkerVector)> = sorted
            .iter()
            .zip(ai.iter().zip(&human))
            .map(|(r, (a, h))| (r.key(), (*r, a, h)))
            .collect();
        let models = runs
            .iter()
            .map(|run| evaluate_model(run, &index, &config))
            .collect::<Result<Vec<_>>>()?;
        Ok(EvaluationReport {
            config,
            corpus_n: corpus.len(),
            reference: ReferenceProfiles {
                ai: aggregate_profile(&ai)?,
                human: aggregate_profile(&human)?,
            },
            models,
            human_reference_external: None,
        })
    })?
}

/// Attaches externally computed metrics to matching models and the human
/// reference row. Entries for models not in the report are ignored.
pub fn merge_external_metrics(
    mut report: EvaluationReport,
    external: &ExternalMetrics,
) -> EvaluationReport {
    for model in &mut report.models {
        model.external = external.get(&model.model).cloned();
    }
    report.human_reference_external = external.get(HUMAN_REFERENCE).cloned();
    report
}
