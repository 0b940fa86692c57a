//! Commonsense triple store: loading, bridging-triple lookup and the
//! seed-vocabulary filter used when building the knowledge base.

use std::collections::BTreeSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::background::BackgroundCorpus;
use crate::config::{Hyperparameters, Model};
use crate::corpus::{Document, Query};
use crate::similarity::{OverlapIndex, Similarity};
use crate::text::normalize;
use crate::weighting::{self, DocView, FeatureWeightTable, TripleView};
use crate::{Error, Result};

/// Width of the character n-gram index built over triple tokens.
const INDEX_WIDTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Position {
    Subject,
    Predicate,
    Object,
}

/// A subject-predicate-object assertion with normalized token lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CskTriple {
    pub id: String,
    pub subject_tokens: Vec<String>,
    pub predicate_tokens: Vec<String>,
    pub object_tokens: Vec<String>,
    /// Extractor confidence, kept for provenance only.
    pub confidence: Option<f64>,
    /// The original tab-separated columns.
    pub raw: Vec<String>,
}

impl CskTriple {
    /// Returns `None` when the subject or object has no tokens left after
    /// normalization.
    pub fn new(id: &str, subject: &str, predicate: &str, object: &str) -> Option<CskTriple> {
        let subject_tokens = normalize(subject);
        let object_tokens = normalize(object);
        if subject_tokens.is_empty() || object_tokens.is_empty() {
            return None;
        }
        Some(CskTriple {
            id: id.to_string(),
            subject_tokens,
            predicate_tokens: normalize(predicate),
            object_tokens,
            confidence: None,
            raw: vec![subject.to_string(), predicate.to_string(), object.to_string()],
        })
    }

    fn components(&self) -> [(&[String], Position); 3] {
        [
            (&self.subject_tokens, Position::Subject),
            (&self.predicate_tokens, Position::Predicate),
            (&self.object_tokens, Position::Object),
        ]
    }

    /// All tokens with their positions, subject first.
    pub fn tokens(&self) -> impl Iterator<Item = (&str, Position)> + '_ {
        self.components()
            .into_iter()
            .flat_map(|(tokens, pos)| tokens.iter().map(move |t| (t.as_str(), pos)))
    }

    pub fn token_count(&self) -> usize {
        self.subject_tokens.len() + self.predicate_tokens.len() + self.object_tokens.len()
    }

    /// n-grams formed within each component (never across components).
    pub fn grams(&self, n: usize) -> Vec<(Vec<&str>, Position)> {
        let mut out = Vec::new();
        for (tokens, pos) in self.components() {
            if tokens.len() >= n {
                for window in tokens.windows(n) {
                    out.push((window.iter().map(String::as_str).collect(), pos));
                }
            }
        }
        out
    }

    pub fn to_tsv_line(&self) -> String {
        self.raw.join("\t")
    }
}

/// Immutable triple collection with a token index for candidate lookup.
#[derive(Debug, Clone)]
pub struct TripleStore {
    triples: Vec<CskTriple>,
    /// token index → indices of triples containing it, ascending
    postings: Vec<Vec<usize>>,
    overlap: OverlapIndex,
}

impl Default for TripleStore {
    fn default() -> Self {
        TripleStore::new(Vec::new())
    }
}

impl TripleStore {
    pub fn new(triples: Vec<CskTriple>) -> Self {
        let mut token_ids: std::collections::HashMap<String, usize> = Default::default();
        let mut tokens: Vec<String> = Vec::new();
        let mut postings: Vec<Vec<usize>> = Vec::new();
        for (idx, triple) in triples.iter().enumerate() {
            for (token, _) in triple.tokens() {
                let id = *token_ids.entry(token.to_string()).or_insert_with(|| {
                    tokens.push(token.to_string());
                    postings.push(Vec::new());
                    tokens.len() - 1
                });
                if postings[id].last() != Some(&idx) {
                    postings[id].push(idx);
                }
            }
        }
        let overlap = OverlapIndex::new(tokens.iter().map(String::as_str), INDEX_WIDTH);
        TripleStore {
            triples,
            postings,
            overlap,
        }
    }

    pub fn triples(&self) -> &[CskTriple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Indices of triples that may contain a token with nonzero similarity to
    /// `probe`. Never misses such a triple; may return extras.
    pub fn candidates(&self, probe: &str, similarity: &Similarity) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .overlap
            .matches(probe, similarity)
            .into_iter()
            .flat_map(|(t, _)| self.postings[t].iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Serializes the store back to the triple TSV format.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            out.push_str(&t.to_tsv_line());
            out.push('\n');
        }
        out
    }
}

/// Result of reading a triple file.
#[derive(Debug, Clone)]
pub struct TripleLoad {
    pub store: TripleStore,
    /// Records dropped because the subject or object normalized to nothing.
    pub dropped: usize,
}

/// Reads `subject<TAB>predicate<TAB>object[<TAB>confidence]` lines. Triple ids
/// are `t<line number>`.
pub fn load_triples<R: BufRead>(reader: R, source: &str) -> Result<TripleLoad> {
    let mut triples = Vec::new();
    let mut dropped = 0;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(source, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if !(3..=4).contains(&cols.len()) {
            return Err(Error::parse(
                source,
                lineno,
                format!("expected 3 or 4 tab-separated columns, found {}", cols.len()),
            ));
        }
        let confidence = match cols.get(3) {
            Some(c) => Some(c.trim().parse::<f64>().map_err(|_| {
                Error::parse(source, lineno, format!("confidence {c:?} is not a number"))
            })?),
            None => None,
        };
        match CskTriple::new(&format!("t{lineno}"), cols[0], cols[1], cols[2]) {
            Some(mut triple) => {
                triple.confidence = confidence;
                triple.raw = cols.iter().map(|c| c.to_string()).collect();
                triples.push(triple);
            }
            None => dropped += 1,
        }
    }
    if dropped > 0 {
        log::warn!("{source}: dropped {dropped} triples with an empty subject or object");
    }
    Ok(TripleLoad {
        store: TripleStore::new(triples),
        dropped,
    })
}

/// A triple that connects a query term to a document, with both of its
/// probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Bridge {
    pub triple: usize,
    pub query_match: f64,
    pub relevance: f64,
}

/// Triples with nonzero match to `term`, in store order, with their views
/// and match values.
pub(crate) fn term_candidates<'s>(
    term: &[&str],
    store: &'s TripleStore,
    background: &BackgroundCorpus,
    h: &Hyperparameters,
    model: Model,
) -> Vec<(usize, f64, TripleView<'s>)> {
    store
        .candidates(term[0], &h.similarity)
        .into_iter()
        .filter_map(|idx| {
            let view = TripleView::new(&store.triples[idx], model, background, h);
            let query_match = weighting::query_match(term, &view, &h.similarity);
            (query_match > 0.0).then_some((idx, query_match, view))
        })
        .collect()
}

/// Bridging triples for each query term, in store order.
pub(crate) fn bridges(
    terms: &[Vec<&str>],
    doc: &DocView<'_>,
    store: &TripleStore,
    background: &BackgroundCorpus,
    h: &Hyperparameters,
    model: Model,
) -> Vec<Vec<Bridge>> {
    terms
        .iter()
        .map(|term| {
            term_candidates(term, store, background, h, model)
                .into_iter()
                .filter_map(|(idx, query_match, view)| {
                    let relevance = weighting::relevance(&view, doc, &h.similarity);
                    (relevance > 0.0).then_some(Bridge {
                        triple: idx,
                        query_match,
                        relevance,
                    })
                })
                .collect()
        })
        .collect()
}

/// For each query term, the ids of triples with nonzero match to the term and
/// nonzero relevance to the document, in store order.
pub fn bridging_triples(
    query: &Query,
    doc: &Document,
    store: &TripleStore,
    background: &BackgroundCorpus,
    h: &Hyperparameters,
) -> Vec<Vec<String>> {
    let weights = FeatureWeightTable::build(doc, background);
    let view = DocView::new(doc, &weights, Model::Unigram, h);
    let terms: Vec<Vec<&str>> = query.terms.iter().map(|t| vec![t.as_str()]).collect();
    bridges(&terms, &view, store, background, h, Model::Unigram)
        .into_iter()
        .map(|list| {
            list.into_iter()
                .map(|b| store.triples[b.triple].id.clone())
                .collect()
        })
        .collect()
}

/// Normalized nouns of a seed document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedVocabulary {
    tokens: BTreeSet<String>,
}

impl SeedVocabulary {
    pub fn new<S: AsRef<str>>(words: impl IntoIterator<Item = S>) -> Result<Self> {
        let tokens: BTreeSet<String> = words
            .into_iter()
            .flat_map(|w| normalize(w.as_ref()))
            .collect();
        if tokens.is_empty() {
            return Err(Error::EmptySeed);
        }
        Ok(SeedVocabulary { tokens })
    }

    /// One word per line.
    pub fn load<R: BufRead>(reader: R, source: &str) -> Result<Self> {
        let mut words = Vec::new();
        for line in reader.lines() {
            words.push(line.map_err(|e| Error::io(source, e))?);
        }
        Self::new(words)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.tokens.contains(token)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterStats {
    pub kept: usize,
    pub dropped: usize,
}

/// Keeps the triples with at least one subject or object token in the seed
/// vocabulary.
pub fn filter_triples(store: &TripleStore, seed: &SeedVocabulary) -> (TripleStore, FilterStats) {
    let kept: Vec<CskTriple> = store
        .triples
        .iter()
        .filter(|t| {
            t.subject_tokens
                .iter()
                .chain(&t.object_tokens)
                .any(|tok| seed.contains(tok))
        })
        .cloned()
        .collect();
    let stats = FilterStats {
        kept: kept.len(),
        dropped: store.len() - kept.len(),
    };
    (TripleStore::new(kept), stats)
}
