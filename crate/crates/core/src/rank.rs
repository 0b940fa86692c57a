//! Top-k ranking over a whole collection.
//!
//! [`Ranker`] interns the collection vocabulary once and scores every
//! document per query with memoized similarities. It evaluates the same sums
//! in the same order as the per-document models in [`crate::lm`], skipping
//! only terms that are exactly zero, so its scores are identical to naive
//! rescoring.

use std::collections::HashMap;

use serde::Serialize;

use crate::collection::Collection;
use crate::config::{Hyperparameters, Model};
use crate::corpus::Query;
use crate::kb::{self, TripleStore};
use crate::lm::{self, combine_sides, log_mix, sum_logs, to_prob};
use crate::similarity::{OverlapIndex, Similarity};
use crate::weighting::{distinct_grams, gram_bg_prob};
use crate::{Error, Result};

const NO_TOKEN: u32 = u32::MAX;
/// n-gram width of the vocabulary index; partial matches need three shared
/// characters by default.
const VOCAB_INDEX_WIDTH: usize = 3;

type Gram = [u32; 2];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeDetail {
    pub triple_id: String,
    pub triple: String,
    pub query_match: f64,
    pub relevance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermBreakdown {
    pub term: String,
    pub basic: f64,
    pub background: f64,
    pub csk: f64,
    pub bridges: Vec<BridgeDetail>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Breakdown {
    pub basic: f64,
    pub smoothed: f64,
    pub csk: f64,
    pub terms: Vec<TermBreakdown>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedResult {
    pub doc_id: String,
    pub score: f64,
    pub breakdown: Breakdown,
}

struct CompiledDoc {
    /// weighted text grams for unigram (0) and bigram (1) models
    text: [Vec<(Gram, f64)>; 2],
    /// per label: unigram grams, bigram grams, weight
    visual: Vec<([Vec<Gram>; 2], f64)>,
    /// distinct visual grams across labels, per model
    visual_features: [Vec<Gram>; 2],
}

pub struct Ranker<'a> {
    collection: &'a Collection,
    store: &'a TripleStore,
    vocab: Vec<&'a str>,
    vocab_index: OverlapIndex,
    docs: Vec<CompiledDoc>,
}

fn unigram(id: u32) -> Gram {
    [id, NO_TOKEN]
}

impl<'a> Ranker<'a> {
    pub fn new(collection: &'a Collection, store: &'a TripleStore) -> Self {
        let mut ids: HashMap<&'a str, u32> = HashMap::new();
        let mut vocab: Vec<&'a str> = Vec::new();
        let mut intern = |token: &'a str| -> u32 {
            *ids.entry(token).or_insert_with(|| {
                vocab.push(token);
                (vocab.len() - 1) as u32
            })
        };

        let mut docs = Vec::with_capacity(collection.len());
        for (doc, weights) in collection.docs().iter().zip(collection.weights()) {
            let text1 = weights
                .text
                .iter()
                .map(|(t, w)| (unigram(intern(t)), *w))
                .collect();
            let text2 = weights
                .text_bigrams
                .iter()
                .map(|(g, w)| ([intern(&g[0]), intern(&g[1])], *w))
                .collect();
            let mut visual = Vec::with_capacity(doc.visual_labels.len());
            let mut features: [Vec<Gram>; 2] = [Vec::new(), Vec::new()];
            for (label, (_, w)) in doc.visual_labels.iter().zip(&weights.visual) {
                let uni: Vec<Gram> = distinct_grams(&label.label_tokens, 1)
                    .into_iter()
                    .map(|g| unigram(intern(g[0])))
                    .collect();
                let bi: Vec<Gram> = distinct_grams(&label.label_tokens, 2)
                    .into_iter()
                    .map(|g| [intern(g[0]), intern(g[1])])
                    .collect();
                for (slot, grams) in features.iter_mut().zip([&uni, &bi]) {
                    for g in grams {
                        if !slot.contains(g) {
                            slot.push(*g);
                        }
                    }
                }
                visual.push(([uni, bi], *w));
            }
            docs.push(CompiledDoc {
                text: [text1, text2],
                visual,
                visual_features: features,
            });
        }
        let vocab_index = OverlapIndex::new(vocab.iter().copied(), VOCAB_INDEX_WIDTH);
        Ranker {
            collection,
            store,
            vocab,
            vocab_index,
            docs,
        }
    }

    /// Dense similarity row of `probe` against the vocabulary.
    fn similarity_row(&self, probe: &str, similarity: &Similarity) -> Vec<f64> {
        let mut row = vec![0.0; self.vocab.len()];
        for (v, s) in self.vocab_index.matches(probe, similarity) {
            row[v] = s;
        }
        row
    }

    /// Log mixture score of every document, in collection order.
    pub fn log_scores(&self, query: &Query, h: &Hyperparameters, model: Model) -> Vec<f64> {
        let plan = QueryPlan::new(self, query, h, model);
        let mut scratch = Scratch::default();
        self.docs
            .iter()
            .map(|doc| plan.log_score(doc, h, &mut scratch))
            .collect()
    }

    /// Top `k` documents by mixture score, ties broken by ascending id.
    pub fn rank(
        &self,
        query: &Query,
        h: &Hyperparameters,
        model: Model,
        k: usize,
    ) -> Result<Vec<RankedResult>> {
        let docs = self.collection.docs();
        Ok(self
            .top_k(query, h, model, k)?
            .into_iter()
            .map(|(idx, score)| RankedResult {
                doc_id: docs[idx].id.clone(),
                score,
                breakdown: self.breakdown(idx, query, h, model),
            })
            .collect())
    }

    /// Positions and scores of the top `k` documents, without breakdowns.
    pub fn top_k(
        &self,
        query: &Query,
        h: &Hyperparameters,
        model: Model,
        k: usize,
    ) -> Result<Vec<(usize, f64)>> {
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        let scores = self.log_scores(query, h, model);
        let docs = self.collection.docs();
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .total_cmp(&scores[a])
                .then_with(|| docs[a].id.cmp(&docs[b].id))
        });
        order.truncate(k);
        Ok(order.into_iter().map(|idx| (idx, to_prob(scores[idx]))).collect())
    }

    fn breakdown(&self, idx: usize, query: &Query, h: &Hyperparameters, model: Model) -> Breakdown {
        let (doc, weights) = self.collection.entry(idx);
        let score = lm::score_document(
            query,
            doc,
            weights,
            self.store,
            self.collection.background(),
            h,
            model,
            false,
        );
        let (terms, _) = lm::query_grams(query, model);
        let triples = self.store.triples();
        Breakdown {
            basic: to_prob(score.log_basic),
            smoothed: to_prob(score.log_smoothed),
            csk: to_prob(score.log_csk),
            terms: terms
                .iter()
                .enumerate()
                .map(|(i, t)| TermBreakdown {
                    term: t.join(" "),
                    basic: score.term_basic[i],
                    background: score.term_background[i],
                    csk: score.term_csk[i],
                    bridges: score.bridges[i]
                        .iter()
                        .map(|b| {
                            let triple = &triples[b.triple];
                            BridgeDetail {
                                triple_id: triple.id.clone(),
                                triple: format!(
                                    "({}, {}, {})",
                                    triple.raw[0], triple.raw[1], triple.raw[2]
                                ),
                                query_match: b.query_match,
                                relevance: b.relevance,
                            }
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

/// Convenience wrapper building a [`Ranker`] for a single query.
pub fn rank(
    query: &Query,
    collection: &Collection,
    store: &TripleStore,
    h: &Hyperparameters,
    model: Model,
    k: usize,
) -> Result<Vec<RankedResult>> {
    Ranker::new(collection, store).rank(query, h, model, k)
}

#[derive(Default)]
struct Scratch {
    relevance: Vec<f64>,
    touched: Vec<bool>,
    touched_list: Vec<u32>,
    probs: Vec<f64>,
}

/// A triple gram reachable from one vocabulary token through its first token.
#[derive(Debug, Clone, Copy)]
struct GramHit {
    triple: u32,
    gram: u32,
    /// similarity of the gram's first token to the vocabulary token
    first_sim: f64,
    /// triple-token id of the gram's second token, for bigrams
    second: u32,
}

/// Triple-side data for one query: the candidate triples of every term and,
/// per vocabulary token, the triple grams it overlaps.
struct CskPlan {
    /// per term: (local triple, match) in store order
    term_candidates: Vec<Vec<(u32, f64)>>,
    /// per local triple: gram count
    gram_counts: Vec<usize>,
    /// per local triple and gram: salience × informativeness
    gram_weights: Vec<Vec<f64>>,
    /// vocabulary id → grams whose first token overlaps it, by (triple, gram)
    hits: Vec<Vec<GramHit>>,
    /// vocabulary id → (triple-token id, similarity), by triple-token id
    overlaps: Vec<Vec<(u32, f64)>>,
}

impl CskPlan {
    fn new(ranker: &Ranker<'_>, terms: &[Vec<&str>], h: &Hyperparameters, model: Model) -> Self {
        let background = ranker.collection.background();
        let mut views = HashMap::new();
        let mut per_term: Vec<Vec<(usize, f64)>> = Vec::new();
        for term in terms {
            let cands = kb::term_candidates(term, ranker.store, background, h, model);
            per_term.push(cands.iter().map(|(idx, m, _)| (*idx, *m)).collect());
            for (idx, _, view) in cands {
                views.entry(idx).or_insert(view);
            }
        }
        let mut all: Vec<usize> = views.keys().copied().collect();
        all.sort_unstable();
        let local_of: HashMap<usize, u32> =
            all.iter().enumerate().map(|(k, idx)| (*idx, k as u32)).collect();

        let mut token_ids: HashMap<&str, u32> = HashMap::new();
        let mut tokens: Vec<&str> = Vec::new();
        let mut gram_counts = Vec::with_capacity(all.len());
        let mut gram_weights = Vec::with_capacity(all.len());
        let mut gram_tokens: Vec<Vec<Gram>> = Vec::with_capacity(all.len());
        for idx in &all {
            let view = &views[idx];
            let grams = view
                .grams
                .iter()
                .map(|g| {
                    let mut ids = [NO_TOKEN; 2];
                    for (slot, tok) in ids.iter_mut().zip(g) {
                        *slot = *token_ids.entry(tok).or_insert_with(|| {
                            tokens.push(tok);
                            (tokens.len() - 1) as u32
                        });
                    }
                    ids
                })
                .collect();
            gram_counts.push(view.grams.len());
            gram_weights.push(view.token_weights.clone());
            gram_tokens.push(grams);
        }

        let mut by_first: Vec<Vec<(u32, u32)>> = vec![Vec::new(); tokens.len()];
        for (k, grams) in gram_tokens.iter().enumerate() {
            for (j, g) in grams.iter().enumerate() {
                by_first[g[0] as usize].push((k as u32, j as u32));
            }
        }
        let mut overlaps: Vec<Vec<(u32, f64)>> = vec![Vec::new(); ranker.vocab.len()];
        for (u, tok) in tokens.iter().enumerate() {
            for (v, s) in ranker.vocab_index.matches(tok, &h.similarity) {
                overlaps[v].push((u as u32, s));
            }
        }
        let hits = overlaps
            .iter()
            .map(|list| {
                let mut out: Vec<GramHit> = list
                    .iter()
                    .flat_map(|&(u, s)| {
                        by_first[u as usize].iter().map(move |&(k, j)| (k, j, s))
                    })
                    .map(|(k, j, first_sim)| GramHit {
                        triple: k,
                        gram: j,
                        first_sim,
                        second: gram_tokens[k as usize][j as usize][1],
                    })
                    .collect();
                out.sort_unstable_by_key(|h| (h.triple, h.gram));
                out
            })
            .collect();

        CskPlan {
            term_candidates: per_term
                .into_iter()
                .map(|list| list.into_iter().map(|(idx, m)| (local_of[&idx], m)).collect())
                .collect(),
            gram_counts,
            gram_weights,
            hits,
            overlaps,
        }
    }

    fn second_sim(&self, vocab: u32, token: u32) -> f64 {
        let list = &self.overlaps[vocab as usize];
        list.binary_search_by_key(&token, |(u, _)| *u)
            .map_or(0.0, |i| list[i].1)
    }
}

struct QueryPlan {
    order: usize,
    /// per term: similarity rows of its tokens against the vocabulary
    rows: Vec<Vec<usize>>,
    sim_rows: Vec<Vec<f64>>,
    log_background: f64,
    alpha: f64,
    beta_cs: f64,
    use_visual_features: bool,
    csk: Option<CskPlan>,
}

impl QueryPlan {
    fn new(ranker: &Ranker<'_>, query: &Query, h: &Hyperparameters, model: Model) -> Self {
        let (terms, model) = lm::query_grams(query, model);
        let background = ranker.collection.background();

        let mut token_rows: HashMap<&str, usize> = HashMap::new();
        let mut sim_rows = Vec::new();
        let rows: Vec<Vec<usize>> = terms
            .iter()
            .map(|term| {
                term.iter()
                    .map(|&tok| {
                        *token_rows.entry(tok).or_insert_with(|| {
                            sim_rows.push(ranker.similarity_row(tok, &h.similarity));
                            sim_rows.len() - 1
                        })
                    })
                    .collect()
            })
            .collect();
        let log_background = sum_logs(terms.iter().map(|t| gram_bg_prob(t, background)));
        let csk = (h.beta_cs > 0.0).then(|| CskPlan::new(ranker, &terms, h, model));

        QueryPlan {
            order: model.order(),
            rows,
            sim_rows,
            log_background,
            alpha: h.alpha,
            beta_cs: h.beta_cs,
            use_visual_features: h.alpha_v > 0.0,
            csk,
        }
    }

    fn gram_sim(&self, rows: &[usize], gram: &Gram) -> f64 {
        let mut acc = 1.0;
        for (t, row) in rows.iter().enumerate() {
            acc *= self.sim_rows[*row][gram[t] as usize];
        }
        acc
    }

    fn log_score(&self, doc: &CompiledDoc, h: &Hyperparameters, scratch: &mut Scratch) -> f64 {
        let slot = self.order - 1;
        scratch.probs.clear();
        for rows in &self.rows {
            let mut text_sum = 0.0;
            let mut text_matches = 0usize;
            for (gram, weight) in &doc.text[slot] {
                let s = self.gram_sim(rows, gram);
                if s > 0.0 {
                    text_sum += s * weight;
                    text_matches += 1;
                }
            }
            let mut visual_sum = 0.0;
            let mut visual_matches = 0usize;
            for (grams, weight) in &doc.visual {
                let s = grams[slot]
                    .iter()
                    .fold(0.0, |m: f64, g| m.max(self.gram_sim(rows, g)));
                if s > 0.0 {
                    visual_sum += s * weight;
                    visual_matches += 1;
                }
            }
            scratch
                .probs
                .push(combine_sides(h, text_sum, text_matches, visual_sum, visual_matches));
        }
        let log_basic = sum_logs(scratch.probs.iter().copied());
        let log_smoothed = log_mix(self.alpha, log_basic, self.log_background);

        let log_csk = match &self.csk {
            Some(plan) => self.log_csk(plan, doc, scratch),
            None => f64::NEG_INFINITY,
        };
        log_mix(self.beta_cs, log_csk, log_smoothed)
    }

    /// Accumulates every triple's relevance sum feature by feature, adding a
    /// feature's grams in (triple, gram) order, so each triple sees its terms
    /// in the same order as the per-document model.
    fn log_csk(&self, plan: &CskPlan, doc: &CompiledDoc, scratch: &mut Scratch) -> f64 {
        let slot = self.order - 1;
        let visual: &[Gram] = if self.use_visual_features {
            &doc.visual_features[slot]
        } else {
            &[]
        };
        let feature_count = doc.text[slot].len() + visual.len();

        let triples = plan.gram_counts.len();
        if scratch.relevance.len() < triples {
            scratch.relevance.resize(triples, 0.0);
            scratch.touched.resize(triples, false);
        }
        for x in doc.text[slot].iter().map(|(g, _)| g).chain(visual) {
            for hit in &plan.hits[x[0] as usize] {
                let mut s = 1.0;
                s *= hit.first_sim;
                if self.order == 2 {
                    s *= plan.second_sim(x[1], hit.second);
                }
                if s > 0.0 {
                    let k = hit.triple as usize;
                    let weight = plan.gram_weights[k][hit.gram as usize];
                    if !scratch.touched[k] {
                        scratch.touched[k] = true;
                        scratch.touched_list.push(hit.triple);
                    }
                    scratch.relevance[k] += s * weight;
                }
            }
        }

        let mut log_csk = 0.0;
        for candidates in &plan.term_candidates {
            let mut sum = 0.0;
            let mut count = 0usize;
            for &(k, m) in candidates {
                let k = k as usize;
                if !scratch.touched[k] {
                    continue;
                }
                let pairs = feature_count as f64 * plan.gram_counts[k] as f64;
                let r = scratch.relevance[k] / pairs;
                if r > 0.0 {
                    sum += m * r;
                    count += 1;
                }
            }
            let value = if count == 0 { 0.0 } else { sum / count as f64 };
            log_csk += value.ln();
        }
        for &k in &scratch.touched_list {
            scratch.relevance[k as usize] = 0.0;
            scratch.touched[k as usize] = false;
        }
        scratch.touched_list.clear();
        log_csk
    }
}

/// Ranking output lines: `query_id<TAB>rank<TAB>doc_id<TAB>score`.
pub fn format_run(query_id: &str, results: &[RankedResult]) -> String {
    let mut out = String::new();
    for (rank, r) in results.iter().enumerate() {
        out.push_str(&format!("{query_id}\t{}\t{}\t{}\n", rank + 1, r.doc_id, r.score));
    }
    out
}

/// Human-readable per-term breakdown listing the bridging triples.
pub fn format_explain(query: &Query, results: &[RankedResult]) -> String {
    let mut out = format!("query {} [{}]\n", query.id, query.terms.join(", "));
    for (rank, r) in results.iter().enumerate() {
        let b = &r.breakdown;
        out.push_str(&format!(
            "#{} {}  score={:.6e}  basic={:.6e}  smoothed={:.6e}  csk={:.6e}\n",
            rank + 1,
            r.doc_id,
            r.score,
            b.basic,
            b.smoothed,
            b.csk
        ));
        for t in &b.terms {
            out.push_str(&format!(
                "  term {:?}: P[q|x]={:.6e}  P[q|B]={:.6e}  P_CS={:.6e}  bridges={}\n",
                t.term,
                t.basic,
                t.background,
                t.csk,
                t.bridges.len()
            ));
            for br in &t.bridges {
                out.push_str(&format!(
                    "    {} {}  P[q|y]={:.6e}  P[y|x]={:.6e}\n",
                    br.triple_id, br.triple, br.query_match, br.relevance
                ));
            }
        }
    }
    out
}
