//! Per-feature weights and the triple-side probabilities.
//!
//! Everything here is expressed over *grams*: single tokens in the unigram
//! model, adjacent token pairs in the bigram model. A unigram gram behaves
//! exactly like the plain token (sums start at 0, products at 1).

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::background::BackgroundCorpus;
use crate::config::{Hyperparameters, Model};
use crate::corpus::Document;
use crate::kb::{CskTriple, Position};
use crate::similarity::Similarity;

/// Salience of a triple token by its position.
pub fn sal(position: Position, h: &Hyperparameters) -> f64 {
    match position {
        Position::Subject => h.lambda_s,
        Position::Predicate => h.lambda_p,
        Position::Object => h.lambda_o,
    }
}

pub(crate) fn gram_sim(similarity: &Similarity, a: &[&str], b: &[&str]) -> f64 {
    if a.len() != b.len() {
        return 0.0;
    }
    a.iter()
        .zip(b)
        .fold(1.0, |acc, (x, y)| acc * similarity.sim(x, y))
}

pub(crate) fn gram_idf(gram: &[&str], background: &BackgroundCorpus) -> f64 {
    let sum = gram.iter().fold(0.0, |acc, t| acc + background.idf(t));
    sum / gram.len() as f64
}

pub(crate) fn gram_inf_norm(gram: &[&str], background: &BackgroundCorpus) -> f64 {
    let sum = gram.iter().fold(0.0, |acc, t| acc + background.inf_norm(t));
    sum / gram.len() as f64
}

pub(crate) fn gram_bg_prob(gram: &[&str], background: &BackgroundCorpus) -> f64 {
    gram.iter().fold(1.0, |acc, t| acc * background.bg_prob(t))
}

/// Distinct n-grams of `tokens` in first-occurrence order.
pub(crate) fn distinct_grams<S: AsRef<str>>(tokens: &[S], n: usize) -> Vec<Vec<&str>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    if tokens.len() < n {
        return out;
    }
    for window in tokens.windows(n) {
        let gram: Vec<&str> = window.iter().map(AsRef::as_ref).collect();
        if seen.insert(gram.clone()) {
            out.push(gram);
        }
    }
    out
}

fn normalize_weights(raw: Vec<f64>) -> Vec<f64> {
    let sum: f64 = raw.iter().sum();
    if sum > 0.0 {
        raw.iter().map(|w| w / sum).collect()
    } else {
        let n = raw.len() as f64;
        raw.iter().map(|_| 1.0 / n).collect()
    }
}

fn idf_distribution(grams: &[Vec<&str>], background: &BackgroundCorpus) -> Vec<f64> {
    normalize_weights(grams.iter().map(|g| gram_idf(g, background)).collect())
}

/// `P[xx_j|x]`: idf of each distinct caption token over the document's idf
/// mass. Uniform when every token has zero idf.
pub fn textual_weight(doc: &Document, background: &BackgroundCorpus) -> Vec<(String, f64)> {
    let grams = distinct_grams(&doc.text_tokens, 1);
    let weights = idf_distribution(&grams, background);
    grams
        .into_iter()
        .map(|g| g[0].to_string())
        .zip(weights)
        .collect()
}

/// Textual weights over distinct adjacent caption token pairs, with a pair's
/// idf taken as the mean idf of its tokens.
pub fn textual_bigram_weight(
    doc: &Document,
    background: &BackgroundCorpus,
) -> Vec<([String; 2], f64)> {
    let grams = distinct_grams(&doc.text_tokens, 2);
    let weights = idf_distribution(&grams, background);
    grams
        .into_iter()
        .map(|g| [g[0].to_string(), g[1].to_string()])
        .zip(weights)
        .collect()
}

/// `P[xv_j|x]`: confidence share times idf share, renormalized to sum to 1.
///
/// A multiword label's idf is the mean idf of its tokens. Results follow the
/// document's label order and are keyed by [`VisualLabel::key`].
///
/// [`VisualLabel::key`]: crate::corpus::VisualLabel::key
pub fn visual_weight(doc: &Document, background: &BackgroundCorpus) -> Vec<(String, f64)> {
    let labels = &doc.visual_labels;
    if labels.is_empty() {
        return Vec::new();
    }
    let conf_sum: f64 = labels.iter().map(|l| l.confidence).sum();
    let idfs: Vec<f64> = labels
        .iter()
        .map(|l| {
            let tokens: Vec<&str> = l.label_tokens.iter().map(String::as_str).collect();
            gram_idf(&tokens, background)
        })
        .collect();
    let idf_shares = normalize_weights(idfs);
    let raw: Vec<f64> = labels
        .iter()
        .zip(&idf_shares)
        .map(|(l, idf_share)| (l.confidence / conf_sum) * idf_share)
        .collect();
    labels
        .iter()
        .map(|l| l.key())
        .zip(normalize_weights(raw))
        .collect()
}

/// Precomputed document-side weights, built once at index time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureWeightTable {
    pub text: Vec<(String, f64)>,
    pub text_bigrams: Vec<([String; 2], f64)>,
    pub visual: Vec<(String, f64)>,
}

impl FeatureWeightTable {
    pub fn build(doc: &Document, background: &BackgroundCorpus) -> Self {
        FeatureWeightTable {
            text: textual_weight(doc, background),
            text_bigrams: textual_bigram_weight(doc, background),
            visual: visual_weight(doc, background),
        }
    }
}

/// A document seen through one term model: weighted text grams, weighted
/// visual labels (each as its list of grams) and the feature grams a triple
/// is matched against.
#[derive(Debug, Clone)]
pub(crate) struct DocView<'a> {
    pub text: Vec<(Vec<&'a str>, f64)>,
    pub visual: Vec<(Vec<Vec<&'a str>>, f64)>,
    pub csk_features: Vec<Vec<&'a str>>,
}

impl<'a> DocView<'a> {
    /// Visual labels feed the triple features only when `alpha_v > 0`, so a
    /// zero visual weight removes visual evidence from every model.
    pub fn new(
        doc: &'a Document,
        weights: &'a FeatureWeightTable,
        model: Model,
        h: &Hyperparameters,
    ) -> Self {
        let text: Vec<(Vec<&str>, f64)> = match model {
            Model::Unigram => weights
                .text
                .iter()
                .map(|(t, w)| (vec![t.as_str()], *w))
                .collect(),
            Model::Bigram => weights
                .text_bigrams
                .iter()
                .map(|(g, w)| (vec![g[0].as_str(), g[1].as_str()], *w))
                .collect(),
        };
        let n = model.order();
        let visual: Vec<(Vec<Vec<&str>>, f64)> = doc
            .visual_labels
            .iter()
            .zip(&weights.visual)
            .map(|(label, (_, w))| (distinct_grams(&label.label_tokens, n), *w))
            .collect();

        let mut csk_features: Vec<Vec<&str>> = text.iter().map(|(g, _)| g.clone()).collect();
        if h.alpha_v > 0.0 {
            let mut seen = HashSet::new();
            for (grams, _) in &visual {
                for g in grams {
                    if seen.insert(g.clone()) {
                        csk_features.push(g.clone());
                    }
                }
            }
        }
        DocView {
            text,
            visual,
            csk_features,
        }
    }
}

/// A triple seen through one term model: its grams with the combined
/// salience-informativeness weight of each.
#[derive(Debug, Clone)]
pub(crate) struct TripleView<'a> {
    pub grams: Vec<Vec<&'a str>>,
    pub token_weights: Vec<f64>,
}

impl<'a> TripleView<'a> {
    pub fn new(
        triple: &'a CskTriple,
        model: Model,
        background: &BackgroundCorpus,
        h: &Hyperparameters,
    ) -> Self {
        let mut grams = Vec::new();
        let mut token_weights = Vec::new();
        for (gram, position) in triple.grams(model.order()) {
            token_weights.push(sal(position, h) * gram_inf_norm(&gram, background));
            grams.push(gram);
        }
        TripleView {
            grams,
            token_weights,
        }
    }
}

pub(crate) fn relevance(view: &TripleView<'_>, doc: &DocView<'_>, similarity: &Similarity) -> f64 {
    let ni = doc.csk_features.len();
    let nj = view.grams.len();
    if ni == 0 || nj == 0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for feature in &doc.csk_features {
        for (gram, weight) in view.grams.iter().zip(&view.token_weights) {
            let s = gram_sim(similarity, gram, feature);
            if s > 0.0 {
                acc += s * weight;
            }
        }
    }
    acc / (ni as f64 * nj as f64)
}

pub(crate) fn query_match(term: &[&str], view: &TripleView<'_>, similarity: &Similarity) -> f64 {
    let nj = view.grams.len();
    if nj == 0 {
        return 0.0;
    }
    let sum = view
        .grams
        .iter()
        .fold(0.0, |acc, g| acc + gram_sim(similarity, term, g));
    sum / nj as f64
}

/// `P[y_k|x]`: overlap of the triple's tokens with the document features,
/// weighted by salience and informativeness and divided by the number of
/// (feature, token) pairs.
pub fn triple_doc_relevance(
    triple: &CskTriple,
    doc: &Document,
    background: &BackgroundCorpus,
    h: &Hyperparameters,
) -> f64 {
    let weights = FeatureWeightTable::build(doc, background);
    let doc_view = DocView::new(doc, &weights, Model::Unigram, h);
    let triple_view = TripleView::new(triple, Model::Unigram, background, h);
    relevance(&triple_view, &doc_view, &h.similarity)
}

/// `P[q_i|y_k]`: mean similarity of the query word to the triple's tokens.
pub fn triple_query_match(term: &str, triple: &CskTriple, similarity: &Similarity) -> f64 {
    let nj = triple.token_count();
    if nj == 0 {
        return 0.0;
    }
    let sum = triple
        .tokens()
        .fold(0.0, |acc, (t, _)| acc + similarity.sim(term, t));
    sum / nj as f64
}
