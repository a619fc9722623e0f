//! Checks shared by the integration tests and the acceptance runner. Each
//! returns a short detail line on success and the first failure otherwise.
//! Includers must also declare `mod oracles;`.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde_json::Value;

use stylshift_core::corpus::{split_by_document, CorpusRecord, Split, SplitRatios};
use stylshift_core::markers::{
    fk_grade, flesch_reading_ease, percent_change, Marker, MarkerProfile,
};
use stylshift_core::overlap::{chrf_pp, lcs_length, rouge_l, ChrfMode, OverlapScores};
use stylshift_core::pipeline::{
    build_corpus, BuildConfig, EvaluateConfig, EvaluationReport, ModelEvaluation, RawDocument,
    ReferenceProfiles,
};
use stylshift_core::segment::{
    chunk_text, split_sentences, tokenize_words, TokenCounter, WordPunctCounter,
};
use stylshift_core::shift::{shift_report, ShiftParams};

use crate::oracles;

pub type Check = Result<String, String>;

const PUBLISHED: &str = include_str!("../data/published_tables.json");

/// Half-width of the band around each published shift; the table inputs
/// carry two or three decimals.
pub const SHIFT_TOLERANCE: f64 = 0.02;
pub const MEAN_TOLERANCE: f64 = 0.0005;
pub const CHANGE_TOLERANCE_PP: f64 = 0.5;
pub const READABILITY_TOLERANCE: f64 = 1e-9;

pub struct ModelRow {
    pub model: String,
    pub values: [f64; 11],
}

pub struct ResultRow {
    pub model: String,
    pub bertscore_f1: Option<f64>,
    pub rouge_l: Option<f64>,
    pub chrf_pp: Option<f64>,
    pub gpt2_perplexity: Option<f64>,
    pub mean_shift: Option<f64>,
}

pub struct Published {
    pub n: usize,
    pub change_ai: [f64; 11],
    pub change_human: [f64; 11],
    pub change_percent: [f64; 11],
    pub ai_input: [f64; 11],
    pub human_ref: [f64; 11],
    pub outputs: Vec<ModelRow>,
    pub shifts: Vec<(ModelRow, f64)>,
    pub results: Vec<ResultRow>,
}

fn eleven(v: &Value) -> [f64; 11] {
    let list: Vec<f64> = v
        .as_array()
        .expect("array of numbers")
        .iter()
        .map(|x| x.as_f64().expect("number"))
        .collect();
    list.try_into().expect("eleven values")
}

pub fn published() -> Published {
    let root: Value = serde_json::from_str(PUBLISHED).expect("published tables parse");
    let names: Vec<&str> = root["markers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m.as_str().unwrap())
        .collect();
    let canonical: Vec<&str> = Marker::ALL.iter().map(|m| m.name()).collect();
    assert_eq!(names, canonical, "published marker order");

    let row = |v: &Value| ModelRow {
        model: v["model"].as_str().unwrap().to_string(),
        values: eleven(&v["values"]),
    };
    let averages = &root["marker_averages"];
    Published {
        n: averages["n"].as_u64().unwrap() as usize,
        change_ai: eleven(&root["chunk_comparison"]["ai"]),
        change_human: eleven(&root["chunk_comparison"]["human"]),
        change_percent: eleven(&root["chunk_comparison"]["change_percent"]),
        ai_input: eleven(&averages["ai_input"]),
        human_ref: eleven(&averages["human_ref"]),
        outputs: averages["models"]
            .as_array()
            .unwrap()
            .iter()
            .map(row)
            .collect(),
        shifts: root["shift_scores"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| (row(v), v["mean"].as_f64().unwrap()))
            .collect(),
        results: root["results"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| ResultRow {
                model: v["model"].as_str().unwrap().to_string(),
                bertscore_f1: v["bertscore_f1"].as_f64(),
                rouge_l: v["rouge_l"].as_f64(),
                chrf_pp: v["chrf_pp"].as_f64(),
                gpt2_perplexity: v["gpt2_perplexity"].as_f64(),
                mean_shift: v["mean_shift"].as_f64(),
            })
            .collect(),
    }
}

fn profile(n: usize, values: [f64; 11]) -> MarkerProfile {
    MarkerProfile::from_means(n, values).expect("finite published values")
}

/// Shift scores and means from the published per-marker averages,
/// including the exact clipped cells of the third model.
pub fn shifts_from_marker_averages() -> Check {
    let start = Instant::now();
    let p = published();
    let ai = profile(p.n, p.ai_input);
    let human = profile(p.n, p.human_ref);
    let mut worst: f64 = 0.0;
    for (output, (expected, _)) in p.outputs.iter().zip(&p.shifts) {
        if output.model != expected.model {
            return Err(format!(
                "model order differs: {} vs {}",
                output.model, expected.model
            ));
        }
        let report = shift_report(
            &profile(p.n, output.values),
            &ai,
            &human,
            ShiftParams::default(),
        )
        .map_err(|e| e.to_string())?;
        for (idx, marker) in Marker::ALL.iter().enumerate() {
            let got = report.scores[idx]
                .shift
                .ok_or_else(|| format!("{} {marker}: degenerate", output.model))?;
            let want = expected.values[idx];
            let diff = (got - want).abs();
            worst = worst.max(diff);
            if diff > SHIFT_TOLERANCE {
                return Err(format!(
                    "{} {marker}: got {got:.4}, published {want:.3}",
                    output.model
                ));
            }
            // Published clipped cells must come out exactly at the bound.
            if (want == -1.0 || want == 2.0) && got != want {
                return Err(format!(
                    "{} {marker}: expected exact clip at {want}, got {got}",
                    output.model
                ));
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs_f64() >= 1.0 {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("33 cells, max |diff| {worst:.4}, {elapsed:?}"))
}

/// Column means from the 33 published cells, and end to end from the
/// published averages.
pub fn mean_shift_reproduction() -> Check {
    let p = published();
    let ai = profile(p.n, p.ai_input);
    let human = profile(p.n, p.human_ref);
    let mut details = Vec::new();
    for ((shifts, mean), output) in p.shifts.iter().zip(&p.outputs) {
        let direct = shifts.values.iter().sum::<f64>() / 11.0;
        if (direct - mean).abs() > MEAN_TOLERANCE {
            return Err(format!(
                "{}: direct mean {direct:.5}, published {mean}",
                shifts.model
            ));
        }
        let report = shift_report(
            &profile(p.n, output.values),
            &ai,
            &human,
            ShiftParams::default(),
        )
        .map_err(|e| e.to_string())?;
        let end_to_end = report.mean_shift.ok_or("no mean shift")?;
        if (end_to_end - mean).abs() > SHIFT_TOLERANCE {
            return Err(format!(
                "{}: end-to-end mean {end_to_end:.4}, published {mean}",
                shifts.model
            ));
        }
        details.push(format!("{} {direct:.4}/{end_to_end:.4}", shifts.model));
    }
    Ok(details.join(", "))
}

pub fn change_column() -> Check {
    let p = published();
    let mut worst: f64 = 0.0;
    for (idx, marker) in Marker::ALL.iter().enumerate() {
        let got = percent_change(p.change_ai[idx], p.change_human[idx])
            .ok_or_else(|| format!("{marker}: zero human value"))?;
        let diff = (got - p.change_percent[idx]).abs();
        worst = worst.max(diff);
        if diff > CHANGE_TOLERANCE_PP {
            return Err(format!(
                "{marker}: got {got:.2}%, published {}%",
                p.change_percent[idx]
            ));
        }
    }
    Ok(format!("11 markers, max |diff| {worst:.2} pp"))
}

/// Every pair of sequences of length <= `max_len` over `alphabet` symbols.
pub fn lcs_exhaustive(alphabet: usize, max_len: usize) -> Check {
    let oracle = oracles::SubsequenceOracle::new(alphabet, max_len);
    let n = oracle.len();
    for a in 0..n {
        let sa = &oracle.sequences[a];
        for b in 0..n {
            let sb = &oracle.sequences[b];
            let want = oracle.lcs(a, b);
            let got = lcs_length(sa, sb);
            if got != want {
                return Err(format!("lcs({sa:?}, {sb:?}) = {got}, oracle {want}"));
            }
        }
    }
    Ok(format!("{n} sequences, {} pairs", n * n))
}

/// ROUGE-L against the plain recursive LCS on random token lists.
pub fn rouge_against_recursive(cases: usize, seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let vocab = ["a", "b", "c", "d", "the"];
    for _ in 0..cases {
        let draw = |rng: &mut StdRng| -> Vec<&str> {
            let len = rng.gen_range(0..=10);
            (0..len).map(|_| *vocab.choose(rng).unwrap()).collect()
        };
        let (r, h) = (draw(&mut rng), draw(&mut rng));
        let lcs = oracles::lcs_recursive(&r, &h) as f64;
        let got = rouge_l(&r, &h);
        let precision = if h.is_empty() {
            0.0
        } else {
            lcs / h.len() as f64
        };
        let recall = if r.is_empty() {
            0.0
        } else {
            lcs / r.len() as f64
        };
        let f1 = if lcs == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        if (got.precision - precision).abs() > 1e-12
            || (got.recall - recall).abs() > 1e-12
            || (got.f1 - f1).abs() > 1e-12
        {
            return Err(format!("rouge_l({r:?}, {h:?}) = {got:?}, oracle lcs {lcs}"));
        }
    }
    Ok(format!("{cases} random pairs"))
}

pub fn random_chrf_text(rng: &mut StdRng) -> String {
    const ALPHABET: &[char] = &['a', 'b', 'c', 'a', 'b', ' ', ' ', '.', ',', '!', 'A'];
    let len = rng.gen_range(0..=12);
    (0..len).map(|_| *ALPHABET.choose(rng).unwrap()).collect()
}

pub fn chrf_against_enumeration(cases: usize, seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    for _ in 0..cases {
        let r = random_chrf_text(&mut rng);
        let h = random_chrf_text(&mut rng);
        let got = chrf_pp(&r, &h);
        let want = oracles::chrf_oracle(&r, &h);
        if got != want {
            return Err(format!("chrf_pp({r:?}, {h:?}) = {got}, oracle {want}"));
        }
    }
    Ok(format!("{cases} random pairs, exact"))
}

const WORDS: &[&str] = &[
    "the",
    "model",
    "writes",
    "plain",
    "text",
    "while",
    "people",
    "don't",
    "always",
    "agree",
    "on",
    "style",
    "a",
    "longer",
    "sentence",
    "follows",
    "here",
    "and",
    "it",
    "well-known",
    "data",
    "shows",
    "3",
    "results",
    "we",
    "can't",
    "say",
    "more",
];
const TERMINATORS: &[&str] = &[".", ".", ".", "?", "!", "..."];

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// A random sentence of `len` words, possibly with a comma or an
/// abbreviation in the middle.
pub fn random_sentence(rng: &mut StdRng, len: usize) -> String {
    let mut words: Vec<String> = (0..len)
        .map(|_| WORDS.choose(rng).unwrap().to_string())
        .collect();
    words[0] = capitalize(&words[0]);
    if len > 3 && rng.gen_bool(0.2) {
        words[1].push(',');
    }
    if len > 4 && rng.gen_bool(0.1) {
        words[2] = "Dr. Smith".to_string();
    }
    let mut s = words.join(" ");
    s.push_str(TERMINATORS.choose(rng).unwrap());
    s
}

pub fn random_document(rng: &mut StdRng) -> String {
    let sentences = rng.gen_range(1..=25);
    (0..sentences)
        .map(|_| {
            let len = if rng.gen_bool(0.05) {
                rng.gen_range(60..=120)
            } else {
                rng.gen_range(1..=30)
            };
            random_sentence(rng, len)
        })
        .collect::<Vec<_>>()
        .join(if rng.gen_bool(0.5) { " " } else { "\n" })
}

fn non_whitespace(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

/// Chunker invariants on one document; `Err` names the first violation.
fn check_chunking(doc: &str, budget: usize) -> Result<(), String> {
    let counter = WordPunctCounter;
    let sentences = split_sentences(doc);
    let chunks = chunk_text(doc, budget, &counter).map_err(|e| e.to_string())?;
    for (i, chunk) in chunks.iter().enumerate() {
        let recount = counter.count(&chunk.text);
        if chunk.sentences.len() > 1 && recount > budget {
            return Err(format!(
                "chunk {i} has {recount} tokens over budget {budget}"
            ));
        }
        if let Some(next) = chunks.get(i + 1) {
            let joined = format!("{} {}", chunk.text, next.sentences[0].text);
            if counter.count(&joined) <= budget {
                return Err(format!("chunk {i} could have taken the next sentence"));
            }
        }
    }
    let rejoined: Vec<_> = chunks
        .iter()
        .flat_map(|c| c.sentences.iter().cloned())
        .collect();
    if rejoined != sentences {
        return Err("sentence sequence not conserved".to_string());
    }
    let text: String = chunks.iter().map(|c| c.text.as_str()).collect();
    if non_whitespace(&text) != non_whitespace(doc) {
        return Err("characters not conserved".to_string());
    }
    Ok(())
}

pub fn chunker_suite(documents: usize, seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut docs = Vec::with_capacity(documents);
    for idx in 0..documents {
        let text = random_document(&mut rng);
        let budget = rng.gen_range(8..=150);
        check_chunking(&text, budget)
            .map_err(|e| format!("document {idx}, budget {budget}: {e}"))?;
        docs.push(text);
    }
    // Pair the documents up and push them through corpus construction.
    let raw: Vec<RawDocument> = docs
        .chunks(2)
        .enumerate()
        .map(|(i, pair)| RawDocument {
            doc_id: format!("doc-{i:04}"),
            ai: pair[0].clone(),
            human: pair.get(1).unwrap_or(&pair[0]).clone(),
            style: "formal".to_string(),
            model: "m".to_string(),
            prompt_id: format!("p{}", i % 7),
        })
        .collect();
    let config = BuildConfig {
        budget: 60,
        ..BuildConfig::default()
    };
    let built = build_corpus(&raw, config, &WordPunctCounter).map_err(|e| e.to_string())?;
    for record in &built.records {
        for (side, text) in [("ai", &record.ai), ("human", &record.human)] {
            let words = tokenize_words(text).len();
            if words < 10 {
                return Err(format!("{} {side} has {words} words", record.key()));
            }
        }
    }
    if !built.report.is_conserved() {
        return Err(format!("build report not conserved: {:?}", built.report));
    }
    Ok(format!(
        "{documents} documents, {} records emitted, {} short pairs dropped",
        built.records.len(),
        built.report.chunks_dropped_short
    ))
}

fn random_records(rng: &mut StdRng, documents: usize) -> Vec<CorpusRecord> {
    let mut records = Vec::new();
    for d in 0..documents {
        let doc_id = format!("d{}-{d}", rng.gen_range(0..1_000_000));
        for chunk_idx in 0..rng.gen_range(1..=4) {
            records.push(CorpusRecord {
                doc_id: doc_id.clone(),
                chunk_idx,
                ai: "one two three four five six seven eight nine ten".to_string(),
                human: "one two three four five six seven eight nine ten".to_string(),
                style: String::new(),
                model: String::new(),
                prompt_id: String::new(),
            });
        }
    }
    records
}

fn random_ratios(rng: &mut StdRng) -> SplitRatios {
    if rng.gen_bool(0.3) {
        return SplitRatios::default();
    }
    let a: f64 = rng.gen_range(0.0..1.0);
    let b: f64 = rng.gen_range(0.0..(1.0 - a));
    SplitRatios::new(a, b, 1.0 - a - b).expect("ratios sum to one")
}

pub fn split_disjointness(corpora: usize, seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut total_docs = 0;
    for trial in 0..corpora {
        let docs = rng.gen_range(1..=300);
        let records = random_records(&mut rng, docs);
        let ratios = random_ratios(&mut rng);
        let split_seed: u64 = rng.gen();
        let assignment = split_by_document(&records, ratios, split_seed);

        let ids: BTreeSet<&str> = records.iter().map(|r| r.doc_id.as_str()).collect();
        total_docs += ids.len();
        let parts = assignment.partition(&records);
        let sets: Vec<BTreeSet<&str>> = parts
            .iter()
            .map(|p| p.iter().map(|r| r.doc_id.as_str()).collect())
            .collect();
        for i in 0..3 {
            for j in (i + 1)..3 {
                if let Some(shared) = sets[i].intersection(&sets[j]).next() {
                    return Err(format!("trial {trial}: {shared} in two splits"));
                }
            }
        }
        let union: BTreeSet<&str> = sets.iter().flatten().copied().collect();
        if union != ids || parts.iter().map(Vec::len).sum::<usize>() != records.len() {
            return Err(format!("trial {trial}: union is not the whole corpus"));
        }
        for (split, part) in Split::ALL.iter().zip(&parts) {
            if part
                .iter()
                .any(|r| assignment.split_of(&r.doc_id) != Some(*split))
            {
                return Err(format!("trial {trial}: record in the wrong split"));
            }
        }
        if split_by_document(&records, ratios, split_seed) != assignment {
            return Err(format!("trial {trial}: repeated run differs"));
        }
        let mut shuffled = records.clone();
        shuffled.shuffle(&mut rng);
        if split_by_document(&shuffled, ratios, split_seed) != assignment {
            return Err(format!("trial {trial}: permuted input changes assignment"));
        }
    }
    Ok(format!("{corpora} corpora, {total_docs} documents"))
}

/// Fixed (words, sentences, syllables) triples for the readability check.
pub const READABILITY_TRIPLES: [(u64, u64, u64); 20] = [
    (1, 1, 1),
    (1, 1, 3),
    (5, 2, 7),
    (10, 1, 10),
    (10, 3, 14),
    (17, 2, 25),
    (42, 3, 61),
    (50, 4, 66),
    (100, 5, 140),
    (100, 1, 180),
    (120, 8, 150),
    (200, 10, 310),
    (250, 13, 377),
    (333, 7, 501),
    (500, 20, 720),
    (750, 30, 1100),
    (999, 41, 1523),
    (1000, 1, 1000),
    (1234, 56, 1789),
    (100_000, 4_321, 151_234),
];

pub fn readability_triples() -> Check {
    let mut worst: f64 = 0.0;
    for (w, s, y) in READABILITY_TRIPLES {
        let fre =
            flesch_reading_ease(w as usize, s as usize, y as usize).map_err(|e| e.to_string())?;
        let fk = fk_grade(w as usize, s as usize, y as usize).map_err(|e| e.to_string())?;
        let (fre_want, fk_want) = (oracles::flesch_exact(w, s, y), oracles::fk_exact(w, s, y));
        let diff = (fre - fre_want).abs().max((fk - fk_want).abs());
        worst = worst.max(diff);
        if diff > READABILITY_TOLERANCE {
            return Err(format!(
                "({w}, {s}, {y}): FRE {fre} vs {fre_want}, FK {fk} vs {fk_want}"
            ));
        }
    }
    Ok(format!("20 triples, max |diff| {worst:.1e}"))
}

/// An evaluation report carrying the published averages and overlap
/// scores, ready for the published external metrics to be merged in.
pub fn published_report() -> EvaluationReport {
    let p = published();
    let ai = profile(p.n, p.ai_input);
    let human = profile(p.n, p.human_ref);
    let results: BTreeMap<&str, &ResultRow> =
        p.results.iter().map(|r| (r.model.as_str(), r)).collect();
    let models = p
        .outputs
        .iter()
        .map(|output| {
            let row = results[output.model.as_str()];
            let out = profile(p.n, output.values);
            ModelEvaluation {
                model: output.model.clone(),
                n: p.n,
                overlap: OverlapScores {
                    n: p.n,
                    rouge_l_precision: row.rouge_l.unwrap(),
                    rouge_l_recall: row.rouge_l.unwrap(),
                    rouge_l_f1: row.rouge_l.unwrap(),
                    chrf_pp: row.chrf_pp.unwrap(),
                    chrf_mode: ChrfMode::SegmentMean,
                    vocab_jaccard: 0.5,
                    jaccard_degenerate: 0,
                },
                shift: shift_report(&out, &ai, &human, ShiftParams::default()).unwrap(),
                output_profile: out,
                ai_profile: ai.clone(),
                human_profile: human.clone(),
                external: None,
            }
        })
        .collect();
    EvaluationReport {
        config: EvaluateConfig::default(),
        corpus_n: p.n,
        reference: ReferenceProfiles { ai, human },
        models,
        human_reference_external: None,
    }
}
