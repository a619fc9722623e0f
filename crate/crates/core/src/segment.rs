//! Sentence splitting, word tokenization, syllable estimation and
//! sentence-aware chunking.
//!
//! Everything that counts words anywhere in the crate goes through
//! [`tokenize_words`], so corpus filtering, markers and overlap metrics agree
//! on what a word is.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default chunk budget, in tokens of the active [`TokenCounter`].
pub const DEFAULT_BUDGET: usize = 200;

/// Abbreviations whose trailing period never ends a sentence. Compared
/// case-insensitively against the whitespace-delimited token that carries
/// the period.
pub const ABBREVIATIONS: &[&str] = &[
    "dr.", "mr.", "mrs.", "ms.", "prof.", "e.g.", "i.e.", "etc.", "vs.", "fig.", "eq.", "no.",
    "st.",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub word_count: usize,
}

impl Sentence {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let word_count = tokenize_words(&text).len();
        Sentence { text, word_count }
    }
}

/// A run of whole sentences. `text` is the sentences joined by single spaces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub text: String,
    pub sentences: Vec<Sentence>,
    pub token_count: usize,
    pub word_count: usize,
}

impl Chunk {
    fn from_sentences(sentences: Vec<Sentence>, token_count: usize) -> Self {
        let text = sentences
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        let word_count = sentences.iter().map(|s| s.word_count).sum();
        Chunk {
            text,
            sentences,
            token_count,
            word_count,
        }
    }
}

/// Counts tokens in a piece of text for the chunk budget.
///
/// Implementations must return 0 for empty text, and counting two pieces
/// joined by a space must never give less than counting either piece alone.
pub trait TokenCounter {
    fn count(&self, text: &str) -> usize;
}

impl<F> TokenCounter for F
where
    F: Fn(&str) -> usize,
{
    fn count(&self, text: &str) -> usize {
        self(text)
    }
}

/// Word tokens plus one token per punctuation character outside words.
///
/// This approximates a subword tokenizer's count without shipping a
/// vocabulary. It is additive over space-joined text.
#[derive(Debug, Clone, Copy, Default)]
pub struct WordPunctCounter;

impl TokenCounter for WordPunctCounter {
    fn count(&self, text: &str) -> usize {
        let mut words = 0;
        let mut covered = 0;
        for (start, end) in word_spans(text) {
            words += 1;
            covered += text[start..end].chars().count();
        }
        let non_space = text.chars().filter(|c| !c.is_whitespace()).count();
        words + (non_space - covered)
    }
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-')
}

/// Byte spans of word tokens: maximal alphanumeric runs, continued across a
/// single internal apostrophe or hyphen.
fn word_spans(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let end_of = |i: usize| chars.get(i).map_or(text.len(), |&(b, _)| b);
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].1.is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = chars[i].0;
        loop {
            while i < chars.len() && chars[i].1.is_alphanumeric() {
                i += 1;
            }
            let joined =
                i + 1 < chars.len() && is_joiner(chars[i].1) && chars[i + 1].1.is_alphanumeric();
            if !joined {
                break;
            }
            i += 1;
        }
        spans.push((start, end_of(i)));
    }
    spans
}

/// Splits text into word tokens.
///
/// ```
/// use stylshift_core::segment::tokenize_words;
/// assert_eq!(tokenize_words("well-known fact."), vec!["well-known", "fact"]);
/// ```
pub fn tokenize_words(text: &str) -> Vec<&str> {
    word_spans(text)
        .into_iter()
        .map(|(start, end)| &text[start..end])
        .collect()
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201D}' | '\u{2019}')
}

fn is_opener(c: char) -> bool {
    c.is_uppercase()
        || c.is_ascii_digit()
        || matches!(c, '"' | '\'' | '(' | '[' | '\u{201C}' | '\u{2018}')
}

fn is_abbreviation(text: &str, period_end: usize) -> bool {
    let head = &text[..period_end];
    let token = head
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or(head)
        .trim_start_matches(|c: char| !c.is_alphanumeric());
    let token = token.to_lowercase();
    ABBREVIATIONS.contains(&token.as_str())
}

/// Rule-based sentence splitter.
///
/// A boundary is a run of `.`, `!` or `?` (optionally followed by closing
/// quotes or brackets), then whitespace, then an uppercase letter, digit or
/// opening quote. A lone period closing a known abbreviation is not a
/// boundary. Fragments without any word token are merged into a neighbour;
/// text with no word tokens at all yields no sentences.
pub fn split_sentences(text: &str) -> Vec<Sentence> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let byte_at = |i: usize| chars.get(i).map_or(text.len(), |&(b, _)| b);
    let mut pieces: Vec<&str> = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        if !is_terminator(chars[i].1) {
            i += 1;
            continue;
        }
        let run_start = i;
        while i < chars.len() && is_terminator(chars[i].1) {
            i += 1;
        }
        let single_period = i - run_start == 1 && chars[run_start].1 == '.';
        let period_end = byte_at(i);
        while i < chars.len() && is_closer(chars[i].1) {
            i += 1;
        }
        let end = byte_at(i);
        let mut k = i;
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        let boundary = k > i
            && k < chars.len()
            && is_opener(chars[k].1)
            && !(single_period && is_abbreviation(text, period_end));
        if boundary {
            pieces.push(&text[byte_at(start)..end]);
            start = k;
            i = k;
        }
    }
    if start < chars.len() {
        pieces.push(&text[byte_at(start)..]);
    }

    let mut sentences: Vec<Sentence> = Vec::new();
    let mut pending = String::new();
    for piece in pieces {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        let words = tokenize_words(piece).len();
        if words == 0 {
            match sentences.last_mut() {
                Some(last) => {
                    last.text.push(' ');
                    last.text.push_str(piece);
                }
                None => {
                    pending.push_str(piece);
                    pending.push(' ');
                }
            }
            continue;
        }
        let text = if pending.is_empty() {
            piece.to_string()
        } else {
            let mut joined = std::mem::take(&mut pending);
            joined.push_str(piece);
            joined
        };
        sentences.push(Sentence {
            text,
            word_count: words,
        });
    }
    sentences
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel-group syllable estimate.
///
/// Terminal silent `e` after a consonant is dropped, except in `-le`
/// endings. The result is floored at 1.
pub fn count_syllables(word: &str) -> Result<usize> {
    if word.trim().is_empty() {
        return Err(Error::argument("count_syllables requires a non-empty word"));
    }
    let lower: Vec<char> = word.to_lowercase().chars().collect();
    let mut groups = 0usize;
    let mut in_group = false;
    for &c in &lower {
        let vowel = is_vowel(c);
        if vowel && !in_group {
            groups += 1;
        }
        in_group = vowel;
    }
    let letters: Vec<char> = lower
        .iter()
        .copied()
        .filter(|c| c.is_alphabetic())
        .collect();
    if let [.., before, 'e'] = letters[..] {
        if !is_vowel(before) && before != 'l' {
            groups = groups.saturating_sub(1);
        }
    }
    Ok(groups.max(1))
}

/// Greedily packs sentences into chunks of at most `budget` tokens.
///
/// A sentence joins the open chunk when the combined count stays within
/// budget; otherwise it opens a new chunk. A sentence that alone exceeds the
/// budget becomes a chunk by itself.
pub fn chunk_document<C>(sentences: &[Sentence], budget: usize, counter: &C) -> Result<Vec<Chunk>>
where
    C: TokenCounter + ?Sized,
{
    if budget == 0 {
        return Err(Error::argument("chunk budget must be at least 1"));
    }
    let mut chunks = Vec::new();
    let mut open: Vec<Sentence> = Vec::new();
    let mut open_tokens = 0usize;
    for sentence in sentences {
        let tokens = counter.count(&sentence.text);
        if !open.is_empty() && open_tokens + tokens > budget {
            chunks.push(Chunk::from_sentences(
                std::mem::take(&mut open),
                open_tokens,
            ));
            open_tokens = 0;
        }
        open.push(sentence.clone());
        open_tokens += tokens;
    }
    if !open.is_empty() {
        chunks.push(Chunk::from_sentences(open, open_tokens));
    }
    Ok(chunks)
}

/// Splits and chunks a whole document with the given counter.
pub fn chunk_text<C>(text: &str, budget: usize, counter: &C) -> Result<Vec<Chunk>>
where
    C: TokenCounter + ?Sized,
{
    chunk_document(&split_sentences(text), budget, counter)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedPair {
    pub index: usize,
    pub ai: Chunk,
    pub human: Chunk,
}

/// Positional pairing of one document's AI and human chunks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub pairs: Vec<AlignedPair>,
    /// AI chunks past the end of the human side.
    pub surplus_ai: usize,
    /// Human chunks past the end of the AI side.
    pub surplus_human: usize,
}

impl Alignment {
    pub fn is_mismatch(&self) -> bool {
        self.surplus_ai + self.surplus_human > 0
    }
}

pub fn align_chunks(ai_chunks: Vec<Chunk>, human_chunks: Vec<Chunk>) -> Alignment {
    let surplus_ai = ai_chunks.len().saturating_sub(human_chunks.len());
    let surplus_human = human_chunks.len().saturating_sub(ai_chunks.len());
    let pairs = ai_chunks
        .into_iter()
        .zip(human_chunks)
        .enumerate()
        .map(|(index, (ai, human))| AlignedPair { index, ai, human })
        .collect();
    Alignment {
        pairs,
        surplus_ai,
        surplus_human,
    }
}
