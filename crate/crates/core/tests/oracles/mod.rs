//! Independent reference implementations used to check the library.
//! Nothing in here calls into `stylshift_core`.
#![allow(dead_code)]

/// Plain exponential recursion. Only for short inputs.
pub fn lcs_recursive<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    match (a.split_first(), b.split_first()) {
        (Some((x, rest_a)), Some((y, rest_b))) => {
            if x == y {
                1 + lcs_recursive(rest_a, rest_b)
            } else {
                lcs_recursive(rest_a, b).max(lcs_recursive(a, rest_b))
            }
        }
        _ => 0,
    }
}

/// Every sequence over `{0, .., alphabet-1}` of length `0..=max_len`,
/// with LCS answered by intersecting recursively enumerated subsequence
/// sets.
///
/// Sequences are indexed by length first, so among common subsequences the
/// largest index is a longest one.
pub struct SubsequenceOracle {
    pub sequences: Vec<Vec<u8>>,
    alphabet: usize,
    offsets: Vec<usize>,
    /// Distinct subsequence indices of each sequence, descending.
    subsequences: Vec<Vec<u32>>,
    /// Per sequence, where subsequences of each length start in the
    /// descending list.
    length_starts: Vec<Vec<usize>>,
    /// Membership bitset over all sequence indices, per sequence.
    bits: Vec<Vec<u64>>,
}

impl SubsequenceOracle {
    pub fn new(alphabet: usize, max_len: usize) -> Self {
        let mut offsets = vec![0usize];
        for len in 0..=max_len {
            offsets.push(offsets[len] + alphabet.pow(len as u32));
        }
        let total = offsets[max_len + 1];
        let mut sequences = Vec::with_capacity(total);
        for len in 0..=max_len {
            for value in 0..alphabet.pow(len as u32) {
                let mut seq = vec![0u8; len];
                let mut v = value;
                for slot in seq.iter_mut().rev() {
                    *slot = (v % alphabet) as u8;
                    v /= alphabet;
                }
                sequences.push(seq);
            }
        }
        let mut oracle = SubsequenceOracle {
            sequences,
            alphabet,
            offsets,
            subsequences: Vec::new(),
            length_starts: Vec::new(),
            bits: Vec::new(),
        };
        let words = total.div_ceil(64);
        for idx in 0..total {
            let mut found = Vec::new();
            let seq = oracle.sequences[idx].clone();
            oracle.enumerate(&seq, 0, &mut Vec::new(), &mut found);
            found.sort_unstable_by(|a, b| b.cmp(a));
            found.dedup();
            let mut bits = vec![0u64; words];
            for &s in &found {
                bits[s as usize / 64] |= 1 << (s % 64);
            }
            let starts = (0..=max_len)
                .map(|len| {
                    found
                        .iter()
                        .position(|&s| oracle.sequences[s as usize].len() <= len)
                        .unwrap_or(found.len())
                })
                .collect();
            oracle.length_starts.push(starts);
            oracle.subsequences.push(found);
            oracle.bits.push(bits);
        }
        oracle
    }

    fn index_of(&self, seq: &[u8]) -> u32 {
        let value = seq
            .iter()
            .fold(0usize, |acc, &s| acc * self.alphabet + s as usize);
        (self.offsets[seq.len()] + value) as u32
    }

    fn enumerate(&self, seq: &[u8], pos: usize, current: &mut Vec<u8>, out: &mut Vec<u32>) {
        if pos == seq.len() {
            out.push(self.index_of(current));
            return;
        }
        self.enumerate(seq, pos + 1, current, out);
        current.push(seq[pos]);
        self.enumerate(seq, pos + 1, current, out);
        current.pop();
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn lcs(&self, a: usize, b: usize) -> usize {
        let bits = &self.bits[b];
        // Nothing longer than `b` can be common.
        let start = self.length_starts[a][self.sequences[b].len()];
        for &s in &self.subsequences[a][start..] {
            if bits[s as usize / 64] >> (s % 64) & 1 == 1 {
                return self.sequences[s as usize].len();
            }
        }
        unreachable!("the empty sequence is common to every pair")
    }
}

fn chrf_oracle_words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for token in text.split_whitespace() {
        let chars: Vec<char> = token.chars().collect();
        let n = chars.len();
        if n > 1 && chars[n - 1].is_ascii_punctuation() {
            out.push(chars[..n - 1].iter().collect());
            out.push(chars[n - 1].to_string());
        } else if n > 1 && chars[0].is_ascii_punctuation() {
            out.push(chars[0].to_string());
            out.push(chars[1..].iter().collect());
        } else {
            out.push(token.to_string());
        }
    }
    out
}

fn grams<T: Clone>(items: &[T], n: usize) -> Vec<Vec<T>> {
    if n == 0 || items.len() < n {
        return Vec::new();
    }
    (0..=items.len() - n)
        .map(|i| items[i..i + n].to_vec())
        .collect()
}

/// (hypothesis total, reference total, clipped matches) by linear scans.
fn enumerate_order<T: Clone + Ord>(reference: &[T], hypothesis: &[T], n: usize) -> (u64, u64, u64) {
    let ref_grams = grams(reference, n);
    let hyp_grams = grams(hypothesis, n);
    let mut distinct = hyp_grams.clone();
    distinct.sort();
    distinct.dedup();
    let mut matches = 0u64;
    for g in &distinct {
        let in_hyp = hyp_grams.iter().filter(|x| *x == g).count() as u64;
        let in_ref = ref_grams.iter().filter(|x| *x == g).count() as u64;
        matches += in_hyp.min(in_ref);
    }
    (hyp_grams.len() as u64, ref_grams.len() as u64, matches)
}

/// chrF++ (char orders 1-6, word orders 1-2, beta 2) by n-gram enumeration.
pub fn chrf_oracle(reference: &str, hypothesis: &str) -> f64 {
    let strip = |s: &str| {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .collect::<Vec<char>>()
    };
    let (rc, hc) = (strip(reference), strip(hypothesis));
    let (rw, hw) = (chrf_oracle_words(reference), chrf_oracle_words(hypothesis));
    let mut orders = Vec::new();
    for n in 1..=6 {
        orders.push(enumerate_order(&rc, &hc, n));
    }
    for n in 1..=2 {
        orders.push(enumerate_order(&rw, &hw, n));
    }
    let beta2 = 4.0;
    let mut total = 0.0;
    let mut effective = 0usize;
    for &(hyp, refs, matches) in &orders {
        if hyp == 0 || refs == 0 {
            continue;
        }
        effective += 1;
        if matches > 0 {
            let p = matches as f64 / hyp as f64;
            let r = matches as f64 / refs as f64;
            total += (1.0 + beta2) * p * r / (beta2 * p + r);
        }
    }
    if effective == 0 {
        let nothing = orders.iter().all(|&(h, r, _)| h == 0 && r == 0);
        return if nothing { 100.0 } else { 0.0 };
    }
    100.0 * total / effective as f64
}

/// Flesch Reading Ease with integer arithmetic up to one final division:
/// `(206835·s·w − 1015·w² − 84600·syl·s) / (1000·s·w)`.
pub fn flesch_exact(words: u64, sentences: u64, syllables: u64) -> f64 {
    let (w, s, y) = (words as i128, sentences as i128, syllables as i128);
    let numerator = 206_835 * s * w - 1_015 * w * w - 84_600 * y * s;
    numerator as f64 / (1_000 * s * w) as f64
}

/// Flesch-Kincaid grade: `(39·w² + 1180·syl·s − 1559·s·w) / (100·s·w)`.
pub fn fk_exact(words: u64, sentences: u64, syllables: u64) -> f64 {
    let (w, s, y) = (words as i128, sentences as i128, syllables as i128);
    let numerator = 39 * w * w + 1_180 * y * s - 1_559 * s * w;
    numerator as f64 / (100 * s * w) as f64
}
