//! Weighted Jaccard pruning of a crawled document set against a seed
//! document.

use std::collections::BTreeMap;

use crate::text::normalize;

/// Word frequencies of one document.
pub type TermFrequencies = BTreeMap<String, u64>;

pub fn term_frequencies(text: &str) -> TermFrequencies {
    let mut freq = TermFrequencies::new();
    for token in normalize(text) {
        *freq.entry(token).or_default() += 1;
    }
    freq
}

/// `Σ min(f(d,w), f(D,w)) / Σ max(f(d,w), f(D,w))` over the union vocabulary.
/// Two empty maps are identical and score 1.
pub fn weighted_jaccard(d: &TermFrequencies, seed: &TermFrequencies) -> f64 {
    let mut min_sum: u64 = 0;
    let mut max_sum: u64 = 0;
    for (word, &f) in d {
        let g = seed.get(word).copied().unwrap_or(0);
        min_sum += f.min(g);
        max_sum += f.max(g);
    }
    for (word, &g) in seed {
        if !d.contains_key(word) {
            max_sum += g;
        }
    }
    if max_sum == 0 {
        return 1.0;
    }
    min_sum as f64 / max_sum as f64
}

pub fn jaccard_distance(d: &TermFrequencies, seed: &TermFrequencies) -> f64 {
    1.0 - weighted_jaccard(d, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneOutcome {
    /// Indices of the kept documents, in input order.
    pub kept: Vec<usize>,
    /// Jaccard distance of every input document from the seed.
    pub distances: Vec<f64>,
}

/// Drops every document whose distance from the seed reaches `max_distance`.
/// With the default of 1 only documents sharing no word with the seed go.
pub fn prune_corpus(docs: &[TermFrequencies], seed: &TermFrequencies, max_distance: f64) -> PruneOutcome {
    let distances: Vec<f64> = docs.iter().map(|d| jaccard_distance(d, seed)).collect();
    let kept = distances
        .iter()
        .enumerate()
        .filter(|(_, &dist)| dist < max_distance)
        .map(|(i, _)| i)
        .collect();
    PruneOutcome { kept, distances }
}

pub const DEFAULT_MAX_DISTANCE: f64 = 1.0;
