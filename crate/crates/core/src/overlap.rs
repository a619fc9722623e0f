//! Reference-overlap metrics that need no neural model: ROUGE-L over word
//! tokens, chrF++ over character and word n-grams, and type-level
//! vocabulary Jaccard.

use std::collections::{HashMap, HashSet};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markers::pairwise_sum;
use crate::segment::tokenize_words;

pub const CHAR_ORDER: usize = 6;
pub const WORD_ORDER: usize = 2;
pub const CHRF_BETA: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeL {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Length of the longest common subsequence, in O(|a|·|b|) time and one
/// row of extra space.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    // row[j] holds the LCS of the prefix of `long` seen so far and short[..j].
    let mut row = vec![0usize; short.len() + 1];
    for x in long {
        let mut diagonal = 0;
        let mut left = 0;
        for (y, cell) in short.iter().zip(row[1..].iter_mut()) {
            let up = *cell;
            left = if x == y { diagonal + 1 } else { left.max(up) };
            *cell = left;
            diagonal = up;
        }
    }
    row[short.len()]
}

pub fn rouge_l<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> RougeL {
    let lcs = lcs_length(reference, hypothesis) as f64;
    let precision = if hypothesis.is_empty() {
        0.0
    } else {
        lcs / hypothesis.len() as f64
    };
    let recall = if reference.is_empty() {
        0.0
    } else {
        lcs / reference.len() as f64
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    RougeL {
        precision,
        recall,
        f1,
    }
}

/// N-gram totals for one order: hypothesis n-grams, reference n-grams and
/// clipped matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OrderStats {
    pub hypothesis: u64,
    pub reference: u64,
    pub matches: u64,
}

/// Sufficient statistics for chrF++: character orders 1..=6 followed by
/// word orders 1..=2. Summing stats across segments gives the pooled score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChrfStats {
    pub orders: [OrderStats; CHAR_ORDER + WORD_ORDER],
}

impl ChrfStats {
    pub fn add(&mut self, other: &ChrfStats) {
        for (mine, theirs) in self.orders.iter_mut().zip(&other.orders) {
            mine.hypothesis += theirs.hypothesis;
            mine.reference += theirs.reference;
            mine.matches += theirs.matches;
        }
    }

    /// F-beta averaged over every order where both sides have n-grams, on a
    /// 0–100 scale. With no n-grams on either side the strings agree (100);
    /// with n-grams on one side only they do not (0).
    pub fn score(&self) -> f64 {
        let effective: Vec<&OrderStats> = self
            .orders
            .iter()
            .filter(|o| o.hypothesis > 0 && o.reference > 0)
            .collect();
        if effective.is_empty() {
            let nothing = self
                .orders
                .iter()
                .all(|o| o.hypothesis == 0 && o.reference == 0);
            return if nothing { 100.0 } else { 0.0 };
        }
        let beta2 = CHRF_BETA * CHRF_BETA;
        let total: f64 = effective
            .iter()
            .map(|o| {
                if o.matches == 0 {
                    return 0.0;
                }
                let precision = o.matches as f64 / o.hypothesis as f64;
                let recall = o.matches as f64 / o.reference as f64;
                (1.0 + beta2) * precision * recall / (beta2 * precision + recall)
            })
            .sum();
        100.0 * total / effective.len() as f64
    }
}

fn ngram_counts<T: Hash + Eq>(items: &[T], n: usize) -> HashMap<&[T], u64> {
    let mut counts = HashMap::new();
    if n > 0 {
        for gram in items.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

fn order_stats<T: Hash + Eq>(reference: &[T], hypothesis: &[T], n: usize) -> OrderStats {
    let reference = ngram_counts(reference, n);
    let hypothesis = ngram_counts(hypothesis, n);
    let matches = hypothesis
        .iter()
        .map(|(gram, &count)| count.min(reference.get(gram).copied().unwrap_or(0)))
        .sum();
    OrderStats {
        hypothesis: hypothesis.values().sum(),
        reference: reference.values().sum(),
        matches,
    }
}

/// Whitespace tokens for the word n-gram part of chrF++. A token longer
/// than one character has a trailing punctuation mark split off, or failing
/// that a leading one.
pub fn chrf_words(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for token in text.split_whitespace() {
        let mut chars = token.chars();
        let first = chars.next();
        let last = token.chars().next_back();
        match (first, last) {
            (Some(_), Some(l)) if token.chars().count() > 1 && l.is_ascii_punctuation() => {
                let cut = token.len() - l.len_utf8();
                out.push(&token[..cut]);
                out.push(&token[cut..]);
            }
            (Some(f), Some(_)) if token.chars().count() > 1 && f.is_ascii_punctuation() => {
                let cut = f.len_utf8();
                out.push(&token[..cut]);
                out.push(&token[cut..]);
            }
            _ => out.push(token),
        }
    }
    out
}

pub fn chrf_stats(reference: &str, hypothesis: &str) -> ChrfStats {
    let chars = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<Vec<_>>();
    let (ref_chars, hyp_chars) = (chars(reference), chars(hypothesis));
    let (ref_words, hyp_words) = (chrf_words(reference), chrf_words(hypothesis));
    let mut stats = ChrfStats::default();
    for n in 1..=CHAR_ORDER {
        stats.orders[n - 1] = order_stats(&ref_chars, &hyp_chars, n);
    }
    for n in 1..=WORD_ORDER {
        stats.orders[CHAR_ORDER + n - 1] = order_stats(&ref_words, &hyp_words, n);
    }
    stats
}

/// chrF++ of one hypothesis against one reference, in [0, 100].
pub fn chrf_pp(reference: &str, hypothesis: &str) -> f64 {
    chrf_stats(reference, hypothesis).score()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jaccard {
    pub score: f64,
    /// Both sides were empty; the score is 1 by convention.
    pub degenerate: bool,
}

/// Jaccard similarity of lowercased word types.
pub fn vocab_jaccard<S: AsRef<str>>(a: &[S], b: &[S]) -> Jaccard {
    let types = |tokens: &[S]| -> HashSet<String> {
        tokens.iter().map(|t| t.as_ref().to_lowercase()).collect()
    };
    let (a, b) = (types(a), types(b));
    let union = a.union(&b).count();
    if union == 0 {
        return Jaccard {
            score: 1.0,
            degenerate: true,
        };
    }
    Jaccard {
        score: a.intersection(&b).count() as f64 / union as f64,
        degenerate: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChrfMode {
    /// Mean of per-pair scores.
    #[default]
    SegmentMean,
    /// One score from n-gram statistics summed over all pairs.
    Pooled,
}

/// Scores for a single reference/hypothesis pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairOverlap {
    pub rouge: RougeL,
    pub chrf: ChrfStats,
    pub jaccard: Jaccard,
}

/// Scores one pair. ROUGE-L runs over lowercased word tokens.
pub fn pair_overlap(reference: &str, hypothesis: &str) -> PairOverlap {
    let lower = |s: &str| -> Vec<String> {
        tokenize_words(s)
            .into_iter()
            .map(str::to_lowercase)
            .collect()
    };
    let (ref_tokens, hyp_tokens) = (lower(reference), lower(hypothesis));
    PairOverlap {
        rouge: rouge_l(&ref_tokens, &hyp_tokens),
        chrf: chrf_stats(reference, hypothesis),
        jaccard: vocab_jaccard(&ref_tokens, &hyp_tokens),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapScores {
    pub n: usize,
    pub rouge_l_precision: f64,
    pub rouge_l_recall: f64,
    pub rouge_l_f1: f64,
    pub chrf_pp: f64,
    pub chrf_mode: ChrfMode,
    pub vocab_jaccard: f64,
    pub jaccard_degenerate: usize,
}

/// Averages per-pair scores in the given order.
pub fn aggregate_overlap(pairs: &[PairOverlap], mode: ChrfMode) -> Result<OverlapScores> {
    if pairs.is_empty() {
        return Err(Error::argument("overlap needs at least one pair"));
    }
    let n = pairs.len() as f64;
    let mean = |f: &dyn Fn(&PairOverlap) -> f64| {
        pairwise_sum(&pairs.iter().map(f).collect::<Vec<_>>()) / n
    };
    let chrf_pp = match mode {
        ChrfMode::SegmentMean => mean(&|p| p.chrf.score()),
        ChrfMode::Pooled => {
            let mut pooled = ChrfStats::default();
            for pair in pairs {
                pooled.add(&pair.chrf);
            }
            pooled.score()
        }
    };
    Ok(OverlapScores {
        n: pairs.len(),
        rouge_l_precision: mean(&|p| p.rouge.precision),
        rouge_l_recall: mean(&|p| p.rouge.recall),
        rouge_l_f1: mean(&|p| p.rouge.f1),
        chrf_pp,
        chrf_mode: mode,
        vocab_jaccard: mean(&|p| p.jaccard.score),
        jaccard_degenerate: pairs.iter().filter(|p| p.jaccard.degenerate).count(),
    })
}

/// Corpus-level overlap of `(reference, hypothesis)` pairs.
pub fn corpus_overlap<R, H>(pairs: &[(R, H)], mode: ChrfMode) -> Result<OverlapScores>
where
    R: AsRef<str>,
    H: AsRef<str>,
{
    let scored: Vec<PairOverlap> = pairs
        .iter()
        .map(|(r, h)| pair_overlap(r.as_ref(), h.as_ref()))
        .collect();
    aggregate_overlap(&scored, mode)
}
