//! Query-likelihood models for one document: basic, smoothed, commonsense
//! translation and the final mixture.
//!
//! Products over query terms are accumulated as sums of logarithms and only
//! exponentiated when a score is reported. Mixtures are combined in log space
//! with the boundary weights 0 and 1 handled exactly, so that `beta_cs = 0`
//! reproduces the smoothed score bit for bit and `alpha = 1` the basic one.

use crate::background::BackgroundCorpus;
use crate::config::{Hyperparameters, Model};
use crate::corpus::{Document, Query};
use crate::kb::{self, Bridge, TripleStore};
use crate::weighting::{gram_bg_prob, gram_sim, DocView, FeatureWeightTable};

/// `ln(w·e^a + (1-w)·e^b)`.
pub(crate) fn log_mix(w: f64, a: f64, b: f64) -> f64 {
    if w >= 1.0 {
        return a;
    }
    if w <= 0.0 {
        return b;
    }
    log_add_exp(w.ln() + a, (1.0 - w).ln() + b)
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub(crate) fn to_prob(log: f64) -> f64 {
    log.min(0.0).exp()
}

pub(crate) fn sum_logs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |acc, p| acc + p.ln())
}

/// Query terms as grams of the effective model. A bigram request on a
/// single-term query falls back to unigrams.
pub(crate) fn query_grams(query: &Query, model: Model) -> (Vec<Vec<&str>>, Model) {
    let terms: Vec<&str> = query.terms.iter().map(String::as_str).collect();
    match model {
        Model::Bigram if terms.len() >= 2 => (
            terms.windows(2).map(|w| w.to_vec()).collect(),
            Model::Bigram,
        ),
        Model::Bigram => {
            log::warn!(
                "query {:?} has a single term; using the unigram model",
                query.id
            );
            (terms.iter().map(|t| vec![*t]).collect(), Model::Unigram)
        }
        Model::Unigram => (terms.iter().map(|t| vec![*t]).collect(), Model::Unigram),
    }
}

/// `P[q_i|x]` for one query gram.
pub(crate) fn term_probability(term: &[&str], doc: &DocView<'_>, h: &Hyperparameters) -> f64 {
    let mut text_sum = 0.0;
    let mut text_matches = 0usize;
    for (gram, weight) in &doc.text {
        let s = gram_sim(&h.similarity, term, gram);
        if s > 0.0 {
            text_sum += s * weight;
            text_matches += 1;
        }
    }
    let mut visual_sum = 0.0;
    let mut visual_matches = 0usize;
    for (grams, weight) in &doc.visual {
        let s = grams
            .iter()
            .fold(0.0, |m: f64, g| m.max(gram_sim(&h.similarity, term, g)));
        if s > 0.0 {
            visual_sum += s * weight;
            visual_matches += 1;
        }
    }
    combine_sides(h, text_sum, text_matches, visual_sum, visual_matches)
}

pub(crate) fn combine_sides(
    h: &Hyperparameters,
    text_sum: f64,
    text_matches: usize,
    visual_sum: f64,
    visual_matches: usize,
) -> f64 {
    let text = if text_matches > 0 {
        h.alpha_x / text_matches as f64 * text_sum
    } else {
        0.0
    };
    let visual = if visual_matches > 0 {
        h.alpha_v / visual_matches as f64 * visual_sum
    } else {
        0.0
    };
    text + visual
}

pub(crate) fn csk_term_value(bridges: &[Bridge]) -> f64 {
    if bridges.is_empty() {
        return 0.0;
    }
    let sum = bridges
        .iter()
        .fold(0.0, |acc, b| acc + b.query_match * b.relevance);
    sum / bridges.len() as f64
}

/// Per-term and total model values for one document.
#[derive(Debug, Clone)]
pub(crate) struct DocScore {
    pub term_basic: Vec<f64>,
    pub term_background: Vec<f64>,
    pub term_csk: Vec<f64>,
    pub bridges: Vec<Vec<Bridge>>,
    pub log_basic: f64,
    pub log_smoothed: f64,
    pub log_csk: f64,
    pub log_mixture: f64,
}

/// Scores one document under every model. The translation model is only
/// evaluated when `beta_cs > 0` or `force_csk` is set.
#[allow(clippy::too_many_arguments)]
pub(crate) fn score_document(
    query: &Query,
    doc: &Document,
    weights: &FeatureWeightTable,
    store: &TripleStore,
    background: &BackgroundCorpus,
    h: &Hyperparameters,
    model: Model,
    force_csk: bool,
) -> DocScore {
    let (terms, model) = query_grams(query, model);
    let view = DocView::new(doc, weights, model, h);

    let term_basic: Vec<f64> = terms.iter().map(|t| term_probability(t, &view, h)).collect();
    let term_background: Vec<f64> = terms.iter().map(|t| gram_bg_prob(t, background)).collect();
    let log_basic = sum_logs(term_basic.iter().copied());
    let log_bg = sum_logs(term_background.iter().copied());
    let log_smoothed = log_mix(h.alpha, log_basic, log_bg);

    let (bridges, term_csk, log_csk) = if h.beta_cs > 0.0 || force_csk {
        let bridges = kb::bridges(&terms, &view, store, background, h, model);
        let term_csk: Vec<f64> = bridges.iter().map(|b| csk_term_value(b)).collect();
        let log_csk = sum_logs(term_csk.iter().copied());
        (bridges, term_csk, log_csk)
    } else {
        (vec![Vec::new(); terms.len()], vec![0.0; terms.len()], f64::NEG_INFINITY)
    };
    let log_mixture = log_mix(h.beta_cs, log_csk, log_smoothed);

    DocScore {
        term_basic,
        term_background,
        term_csk,
        bridges,
        log_basic,
        log_smoothed,
        log_csk,
        log_mixture,
    }
}

/// Conjunctive product of `P[q_i|x]` over the query terms.
pub fn basic_lm(
    query: &Query,
    doc: &Document,
    weights: &FeatureWeightTable,
    h: &Hyperparameters,
    model: Model,
) -> f64 {
    let (terms, model) = query_grams(query, model);
    let view = DocView::new(doc, weights, model, h);
    to_prob(sum_logs(terms.iter().map(|t| term_probability(t, &view, h))))
}

/// Basic model interpolated with the background model by `alpha`.
pub fn smoothed_lm(
    query: &Query,
    doc: &Document,
    weights: &FeatureWeightTable,
    background: &BackgroundCorpus,
    h: &Hyperparameters,
    model: Model,
) -> f64 {
    let empty = TripleStore::default();
    let h0 = Hyperparameters { beta_cs: 0.0, ..*h };
    to_prob(score_document(query, doc, weights, &empty, background, &h0, model, false).log_smoothed)
}

/// Commonsense translation model: per term, the mean over bridging triples of
/// `P[q_i|y_k]·P[y_k|x]`; a term without bridges zeroes the product.
pub fn csk_lm(
    query: &Query,
    doc: &Document,
    weights: &FeatureWeightTable,
    store: &TripleStore,
    background: &BackgroundCorpus,
    h: &Hyperparameters,
    model: Model,
) -> f64 {
    to_prob(score_document(query, doc, weights, store, background, h, model, true).log_csk)
}

/// `beta_cs · P_CS + (1 - beta_cs) · P_smoothed`.
pub fn mixture_lm(
    query: &Query,
    doc: &Document,
    weights: &FeatureWeightTable,
    store: &TripleStore,
    background: &BackgroundCorpus,
    h: &Hyperparameters,
    model: Model,
) -> f64 {
    to_prob(score_document(query, doc, weights, store, background, h, model, false).log_mixture)
}
