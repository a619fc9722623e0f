//! The eleven chunk-level stylistic markers and their corpus-level profiles.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segment::{count_syllables, split_sentences, tokenize_words};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marker {
    WordCount,
    SentenceCount,
    AvgWordLength,
    LexicalDiversity,
    Contractions,
    QuestionMarks,
    Exclamations,
    Commas,
    SentenceLengthVariance,
    FleschReadingEase,
    FkGrade,
}

impl Marker {
    /// Canonical order, used for every table and serialized profile.
    pub const ALL: [Marker; 11] = [
        Marker::WordCount,
        Marker::SentenceCount,
        Marker::AvgWordLength,
        Marker::LexicalDiversity,
        Marker::Contractions,
        Marker::QuestionMarks,
        Marker::Exclamations,
        Marker::Commas,
        Marker::SentenceLengthVariance,
        Marker::FleschReadingEase,
        Marker::FkGrade,
    ];

    /// Field name used in serialized vectors and profiles.
    pub fn name(self) -> &'static str {
        match self {
            Marker::WordCount => "word_count",
            Marker::SentenceCount => "sentence_count",
            Marker::AvgWordLength => "avg_word_length",
            Marker::LexicalDiversity => "lexical_diversity",
            Marker::Contractions => "contractions",
            Marker::QuestionMarks => "question_marks",
            Marker::Exclamations => "exclamations",
            Marker::Commas => "commas",
            Marker::SentenceLengthVariance => "sentence_length_variance",
            Marker::FleschReadingEase => "flesch_reading_ease",
            Marker::FkGrade => "fk_grade",
        }
    }

    /// Human-readable row label for rendered tables.
    pub fn label(self) -> &'static str {
        match self {
            Marker::WordCount => "Word count",
            Marker::SentenceCount => "Sentence count",
            Marker::AvgWordLength => "Avg word length",
            Marker::LexicalDiversity => "Lexical diversity",
            Marker::Contractions => "Contractions",
            Marker::QuestionMarks => "Question marks",
            Marker::Exclamations => "Exclamations",
            Marker::Commas => "Commas per chunk",
            Marker::SentenceLengthVariance => "Sent. length var.",
            Marker::FleschReadingEase => "Flesch Reading Ease",
            Marker::FkGrade => "F-K Grade Level",
        }
    }

    pub fn from_name(name: &str) -> Option<Marker> {
        Marker::ALL.into_iter().find(|m| m.name() == name)
    }
}

impl fmt::Display for Marker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Marker values for a single chunk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerVector {
    pub word_count: usize,
    pub sentence_count: usize,
    pub avg_word_length: f64,
    pub lexical_diversity: f64,
    pub contractions: usize,
    pub question_marks: usize,
    pub exclamations: usize,
    pub commas: usize,
    pub sentence_length_variance: f64,
    pub flesch_reading_ease: f64,
    pub fk_grade: f64,
}

impl MarkerVector {
    pub fn get(&self, marker: Marker) -> f64 {
        match marker {
            Marker::WordCount => self.word_count as f64,
            Marker::SentenceCount => self.sentence_count as f64,
            Marker::AvgWordLength => self.avg_word_length,
            Marker::LexicalDiversity => self.lexical_diversity,
            Marker::Contractions => self.contractions as f64,
            Marker::QuestionMarks => self.question_marks as f64,
            Marker::Exclamations => self.exclamations as f64,
            Marker::Commas => self.commas as f64,
            Marker::SentenceLengthVariance => self.sentence_length_variance,
            Marker::FleschReadingEase => self.flesch_reading_ease,
            Marker::FkGrade => self.fk_grade,
        }
    }

    pub fn values(&self) -> [f64; 11] {
        Marker::ALL.map(|m| self.get(m))
    }
}

/// Component-wise means of a population of marker vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerProfile {
    pub n: usize,
    pub word_count: f64,
    pub sentence_count: f64,
    pub avg_word_length: f64,
    pub lexical_diversity: f64,
    pub contractions: f64,
    pub question_marks: f64,
    pub exclamations: f64,
    pub commas: f64,
    pub sentence_length_variance: f64,
    pub flesch_reading_ease: f64,
    pub fk_grade: f64,
}

impl MarkerProfile {
    /// Builds a profile from means listed in [`Marker::ALL`] order.
    pub fn from_means(n: usize, means: [f64; 11]) -> Result<Self> {
        if n == 0 {
            return Err(Error::argument("a marker profile needs n >= 1"));
        }
        let [word_count, sentence_count, avg_word_length, lexical_diversity, contractions, question_marks, exclamations, commas, sentence_length_variance, flesch_reading_ease, fk_grade] =
            means;
        Ok(MarkerProfile {
            n,
            word_count,
            sentence_count,
            avg_word_length,
            lexical_diversity,
            contractions,
            question_marks,
            exclamations,
            commas,
            sentence_length_variance,
            flesch_reading_ease,
            fk_grade,
        })
    }

    /// Builds a profile from a name → mean map; every marker must be present.
    pub fn from_map(n: usize, means: &BTreeMap<String, f64>) -> Result<Self> {
        let mut values = [0.0; 11];
        for (slot, marker) in values.iter_mut().zip(Marker::ALL) {
            *slot = *means
                .get(marker.name())
                .ok_or_else(|| Error::argument(format!("profile is missing marker {marker}")))?;
        }
        MarkerProfile::from_means(n, values)
    }

    pub fn get(&self, marker: Marker) -> f64 {
        match marker {
            Marker::WordCount => self.word_count,
            Marker::SentenceCount => self.sentence_count,
            Marker::AvgWordLength => self.avg_word_length,
            Marker::LexicalDiversity => self.lexical_diversity,
            Marker::Contractions => self.contractions,
            Marker::QuestionMarks => self.question_marks,
            Marker::Exclamations => self.exclamations,
            Marker::Commas => self.commas,
            Marker::SentenceLengthVariance => self.sentence_length_variance,
            Marker::FleschReadingEase => self.flesch_reading_ease,
            Marker::FkGrade => self.fk_grade,
        }
    }

    pub fn values(&self) -> [f64; 11] {
        Marker::ALL.map(|m| self.get(m))
    }
}

const CONTRACTION_SUFFIXES: [&str; 6] = ["n't", "'re", "'ve", "'ll", "'d", "'m"];

/// Counts contractions among word tokens.
///
/// Tokens ending in `'s` are never counted, since they are usually
/// possessives. `y'all` counts; `o'clock` does not.
pub fn count_contractions<S: AsRef<str>>(tokens: &[S]) -> usize {
    tokens
        .iter()
        .filter(|t| {
            let token = t.as_ref().to_lowercase().replace('\u{2019}', "'");
            match token.as_str() {
                "y'all" => true,
                "o'clock" => false,
                t => CONTRACTION_SUFFIXES
                    .iter()
                    .any(|suffix| t.len() > suffix.len() && t.ends_with(suffix)),
            }
        })
        .count()
}

fn check_counts(words: usize, sentences: usize, syllables: usize) -> Result<()> {
    if words == 0 || sentences == 0 || syllables == 0 {
        return Err(Error::argument(format!(
            "readability needs positive counts, got words={words} sentences={sentences} syllables={syllables}"
        )));
    }
    Ok(())
}

/// Flesch Reading Ease, unclamped.
pub fn flesch_reading_ease(words: usize, sentences: usize, syllables: usize) -> Result<f64> {
    check_counts(words, sentences, syllables)?;
    let words_per_sentence = words as f64 / sentences as f64;
    let syllables_per_word = syllables as f64 / words as f64;
    Ok(206.835 - 1.015 * words_per_sentence - 84.6 * syllables_per_word)
}

/// Flesch-Kincaid grade level, unclamped.
pub fn fk_grade(words: usize, sentences: usize, syllables: usize) -> Result<f64> {
    check_counts(words, sentences, syllables)?;
    let words_per_sentence = words as f64 / sentences as f64;
    let syllables_per_word = syllables as f64 / words as f64;
    Ok(0.39 * words_per_sentence + 11.8 * syllables_per_word - 15.59)
}

/// Population variance of per-sentence word counts.
pub fn length_variance(sentence_word_counts: &[usize]) -> Result<f64> {
    if sentence_word_counts.is_empty() {
        return Err(Error::argument("length variance of an empty list"));
    }
    let n = sentence_word_counts.len() as f64;
    let mean = sentence_word_counts.iter().sum::<usize>() as f64 / n;
    let squared: f64 = sentence_word_counts
        .iter()
        .map(|&c| (c as f64 - mean).powi(2))
        .sum();
    Ok(squared / n)
}

/// Computes all eleven markers for one chunk of text.
pub fn compute_markers(chunk_text: &str) -> Result<MarkerVector> {
    let words = tokenize_words(chunk_text);
    if words.is_empty() {
        return Err(Error::argument(
            "cannot compute markers for text without words",
        ));
    }
    let sentences = split_sentences(chunk_text);
    let lengths: Vec<usize> = sentences.iter().map(|s| s.word_count).collect();

    let word_count = words.len();
    let sentence_count = sentences.len();
    let total_chars: usize = words.iter().map(|w| w.chars().count()).sum();
    let types: std::collections::HashSet<String> = words.iter().map(|w| w.to_lowercase()).collect();
    let mut syllables = 0;
    for word in &words {
        syllables += count_syllables(word)?;
    }
    let count_char = |target: char| chunk_text.chars().filter(|&c| c == target).count();

    Ok(MarkerVector {
        word_count,
        sentence_count,
        avg_word_length: total_chars as f64 / word_count as f64,
        lexical_diversity: types.len() as f64 / word_count as f64,
        contractions: count_contractions(&words),
        question_marks: count_char('?'),
        exclamations: count_char('!'),
        commas: count_char(','),
        sentence_length_variance: length_variance(&lengths)?,
        flesch_reading_ease: flesch_reading_ease(word_count, sentence_count, syllables)?,
        fk_grade: fk_grade(word_count, sentence_count, syllables)?,
    })
}

/// Pairwise summation; the result depends only on the order of `values`.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        values.iter().sum()
    } else {
        let (left, right) = values.split_at(values.len() / 2);
        pairwise_sum(left) + pairwise_sum(right)
    }
}

/// Component-wise mean over a population of chunk vectors.
///
/// Each mean is clamped into the population's observed range so rounding
/// can never place it outside.
pub fn aggregate_profile(vectors: &[MarkerVector]) -> Result<MarkerProfile> {
    if vectors.is_empty() {
        return Err(Error::argument("cannot aggregate an empty population"));
    }
    let n = vectors.len();
    let mut means = [0.0; 11];
    let mut column = Vec::with_capacity(n);
    for (slot, marker) in means.iter_mut().zip(Marker::ALL) {
        column.clear();
        column.extend(vectors.iter().map(|v| v.get(marker)));
        let (lo, hi) = column
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        *slot = (pairwise_sum(&column) / n as f64).clamp(lo, hi);
    }
    MarkerProfile::from_means(n, means)
}

/// Relative change from `human` to `ai`, in percent.
pub fn percent_change(ai: f64, human: f64) -> Option<f64> {
    (human != 0.0).then(|| (ai - human) / human * 100.0)
}
