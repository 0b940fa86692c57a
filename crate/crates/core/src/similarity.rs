//! String-overlap similarity between two unigrams.
//!
//! The overlap is the longest common contiguous substring, measured in
//! characters. Exact matches always score 1. Partial overlaps shorter than
//! `min_substring` characters, or whose ratio to the longer word falls below
//! `threshold`, score 0, so that incidental overlaps like a shared letter or
//! two never link unrelated words.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub const DEFAULT_MIN_SUBSTRING: usize = 3;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub min_substring: usize,
    pub threshold: f64,
}

impl Default for Similarity {
    fn default() -> Self {
        Similarity {
            min_substring: DEFAULT_MIN_SUBSTRING,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl Similarity {
    pub fn sim(&self, a: &str, b: &str) -> f64 {
        if a.is_empty() || b.is_empty() {
            return 0.0;
        }
        if a == b {
            return 1.0;
        }
        let (overlap, longest) = if a.is_ascii() && b.is_ascii() {
            (
                longest_common_substring(a.as_bytes(), b.as_bytes()),
                a.len().max(b.len()),
            )
        } else {
            let a: Vec<char> = a.chars().collect();
            let b: Vec<char> = b.chars().collect();
            (longest_common_substring(&a, &b), a.len().max(b.len()))
        };
        self.score(overlap, longest)
    }

    fn score(&self, overlap: usize, longest: usize) -> f64 {
        if overlap < self.min_substring.max(1) {
            return 0.0;
        }
        let value = overlap as f64 / longest as f64;
        if value < self.threshold {
            0.0
        } else {
            value
        }
    }

    /// Shortest overlap that scores nonzero against a longer word of
    /// `longest` characters, if any does.
    pub fn min_partial_overlap(&self, longest: usize) -> Option<usize> {
        (self.min_substring.max(1)..=longest).find(|&l| self.score(l, longest) > 0.0)
    }

    /// Character n-gram length that every nonzero partial match must share.
    pub fn probe_width(&self) -> usize {
        self.min_substring.clamp(1, 3)
    }
}

/// Length of the longest common contiguous run of `a` and `b`.
pub fn longest_common_substring<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    let mut best = 0;
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { 0 };
            best = best.max(cur[j + 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}

/// Index over a fixed token list that returns, for a probe word, a superset of
/// the tokens with nonzero [`Similarity::sim`] to it.
///
/// Any partial match shares a run of at least `min_substring` characters, so
/// an index of width `w` is sound for every similarity with
/// `min_substring >= w`.
#[derive(Debug, Clone)]
pub struct OverlapIndex {
    width: usize,
    tokens: Vec<String>,
    /// length of each token in characters
    lengths: Vec<usize>,
    exact: HashMap<String, usize>,
    grams: HashMap<String, Vec<usize>>,
}

impl OverlapIndex {
    pub fn new<'a>(tokens: impl IntoIterator<Item = &'a str>, width: usize) -> Self {
        let width = width.max(1);
        let mut exact = HashMap::new();
        let mut grams: HashMap<String, Vec<usize>> = HashMap::new();
        let mut all = Vec::new();
        let mut lengths = Vec::new();
        for (idx, token) in tokens.into_iter().enumerate() {
            all.push(token.to_string());
            lengths.push(token.chars().count());
            exact.entry(token.to_string()).or_insert(idx);
            for gram in char_ngrams(token, width) {
                let list = grams.entry(gram).or_default();
                if list.last() != Some(&idx) {
                    list.push(idx);
                }
            }
        }
        OverlapIndex {
            width,
            tokens: all,
            lengths,
            exact,
            grams,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Candidate token indices, sorted and de-duplicated.
    pub fn candidates(&self, probe: &str) -> Vec<usize> {
        let mut out = Vec::new();
        if let Some(&idx) = self.exact.get(probe) {
            out.push(idx);
        }
        for gram in char_ngrams(probe, self.width) {
            if let Some(list) = self.grams.get(&gram) {
                out.extend_from_slice(list);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Every token with nonzero similarity to `probe`, with that similarity,
    /// in index order.
    ///
    /// A partial match of length `L` covers `L - width + 1` probe positions
    /// whose n-gram also occurs in the token, so tokens covering fewer
    /// positions than the shortest admissible overlap needs are skipped
    /// without computing their similarity.
    pub fn matches(&self, probe: &str, similarity: &Similarity) -> Vec<(usize, f64)> {
        if similarity.min_substring < self.width {
            return (0..self.tokens.len())
                .filter_map(|idx| {
                    let s = similarity.sim(probe, &self.tokens[idx]);
                    (s > 0.0).then_some((idx, s))
                })
                .collect();
        }
        let mut covered: HashMap<usize, usize> = HashMap::new();
        for gram in char_ngrams(probe, self.width) {
            if let Some(list) = self.grams.get(&gram) {
                for &idx in list {
                    *covered.entry(idx).or_default() += 1;
                }
            }
        }
        let probe_len = probe.chars().count();
        let mut out: Vec<(usize, f64)> = covered
            .into_iter()
            .filter(|&(idx, positions)| {
                let longest = probe_len.max(self.lengths[idx]);
                similarity
                    .min_partial_overlap(longest)
                    .is_some_and(|l| positions + self.width > l)
            })
            .filter_map(|(idx, _)| {
                let s = similarity.sim(probe, &self.tokens[idx]);
                (s > 0.0).then_some((idx, s))
            })
            .collect();
        if let Some(&idx) = self.exact.get(probe) {
            if !out.iter().any(|(i, _)| *i == idx) {
                out.push((idx, 1.0));
            }
        }
        out.sort_unstable_by_key(|(idx, _)| *idx);
        out
    }
}

fn char_ngrams(token: &str, width: usize) -> Vec<String> {
    let chars: Vec<char> = token.chars().collect();
    if chars.len() < width {
        return Vec::new();
    }
    chars.windows(width).map(|w| w.iter().collect()).collect()
}
