//! Deterministic sample text for the benchmarks.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

const VOCABULARY: &[&str] = &[
    "the",
    "report",
    "suggests",
    "that",
    "writers",
    "often",
    "prefer",
    "short",
    "clear",
    "sentences",
    "but",
    "we",
    "don't",
    "always",
    "follow",
    "advice",
    "and",
    "results",
    "vary",
    "considerably",
    "across",
    "well-known",
    "genres",
    "it's",
    "hard",
    "to",
    "say",
    "why",
];

/// `sentences` sentences of 5 to 30 words, with occasional commas and
/// varied terminators.
pub fn sample_text(sentences: usize, seed: u64) -> String {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(sentences);
    for _ in 0..sentences {
        let len = rng.gen_range(5..=30);
        let mut words: Vec<String> = (0..len)
            .map(|_| VOCABULARY.choose(&mut rng).unwrap().to_string())
            .collect();
        words[0] = capitalize(&words[0]);
        if rng.gen_bool(0.3) {
            words[len / 2].push(',');
        }
        let mut sentence = words.join(" ");
        sentence.push(*['.', '.', '.', '?', '!'].choose(&mut rng).unwrap());
        out.push(sentence);
    }
    out.join(" ")
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    chars
        .next()
        .map(|c| c.to_uppercase().chain(chars).collect())
        .unwrap_or_default()
}
