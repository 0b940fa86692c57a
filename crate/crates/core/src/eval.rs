//! Precision@k benchmarks over the three retrieval modes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::BufRead;

use serde::Serialize;

use crate::collection::Collection;
use crate::config::{Hyperparameters, Mode, Model};
use crate::corpus::Query;
use crate::kb::TripleStore;
use crate::rank::Ranker;
use crate::{Error, Result};

/// `|top-k ∩ relevant| / k`; slots beyond the returned list count as misses.
pub fn precision_at_k<S: AsRef<str>>(ranked: &[S], relevant: &BTreeSet<String>, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let hits = ranked
        .iter()
        .take(k)
        .filter(|id| relevant.contains(id.as_ref()))
        .count();
    Ok(hits as f64 / k as f64)
}

/// Queries plus binary relevance judgments, keyed by query id then doc id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Benchmark {
    pub queries: Vec<Query>,
    pub qrels: BTreeMap<String, BTreeMap<String, bool>>,
}

impl Benchmark {
    /// Queries file: `query_id<TAB>keyword keyword ...`, one per line.
    pub fn load_queries<R: BufRead>(reader: R, source: &str) -> Result<Vec<Query>> {
        let mut queries = Vec::new();
        let mut seen = BTreeSet::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(source, e))?;
            let lineno = n + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (id, text) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(source, lineno, "expected query_id<TAB>keywords"))?;
            let id = id.trim();
            if id.is_empty() {
                return Err(Error::parse(source, lineno, "empty query id"));
            }
            if !seen.insert(id.to_string()) {
                return Err(Error::parse(source, lineno, format!("duplicate query id {id:?}")));
            }
            let query = Query::parse(id, text)
                .map_err(|e| Error::parse(source, lineno, e.to_string()))?;
            queries.push(query);
        }
        if queries.is_empty() {
            return Err(Error::parse(source, 0, "no queries"));
        }
        Ok(queries)
    }

    /// Qrels file: `query_id<TAB>doc_id<TAB>relevance`, or the four-column
    /// TREC form with an ignored iteration field. Relevance is 0 or 1.
    pub fn load_qrels<R: BufRead>(
        reader: R,
        source: &str,
    ) -> Result<BTreeMap<String, BTreeMap<String, bool>>> {
        let mut qrels: BTreeMap<String, BTreeMap<String, bool>> = BTreeMap::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(source, e))?;
            let lineno = n + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            let (qid, doc, rel) = match cols.as_slice() {
                [q, d, r] => (*q, *d, *r),
                [q, _, d, r] => (*q, *d, *r),
                _ => {
                    return Err(Error::parse(
                        source,
                        lineno,
                        format!("expected 3 or 4 tab-separated columns, got {}", cols.len()),
                    ))
                }
            };
            let relevant = match rel {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::parse(
                        source,
                        lineno,
                        format!("relevance must be 0 or 1, got {other:?}"),
                    ))
                }
            };
            qrels
                .entry(qid.to_string())
                .or_default()
                .insert(doc.to_string(), relevant);
        }
        Ok(qrels)
    }

    /// Relevant doc ids for `query_id`, or `None` if it has no judgments.
    pub fn relevant(&self, query_id: &str) -> Option<BTreeSet<String>> {
        self.qrels.get(query_id).filter(|j| !j.is_empty()).map(|j| {
            j.iter()
                .filter(|(_, &rel)| rel)
                .map(|(d, _)| d.clone())
                .collect()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryPrecision {
    pub query_id: String,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub mode: Mode,
    pub k: usize,
    pub per_query: Vec<QueryPrecision>,
    /// Mean of `per_query`; 0 when every query was skipped.
    pub average: f64,
    /// Queries without judgments.
    pub skipped: Vec<String>,
}

impl EvalReport {
    /// `query_id<TAB>P@k` per query, then an `average` row. Four decimals.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("# mode={} k={}\nquery_id\tP@{}\n", self.mode, self.k, self.k);
        for q in &self.per_query {
            let _ = writeln!(out, "{}\t{:.4}", q.query_id, q.precision);
        }
        let _ = writeln!(out, "average\t{:.4}", self.average);
        out
    }
}

/// Ranks every judged query under `mode` and scores the top `k`.
pub fn run_benchmark(
    bench: &Benchmark,
    collection: &Collection,
    store: &TripleStore,
    h: &Hyperparameters,
    mode: Mode,
    model: Model,
    k: usize,
) -> Result<EvalReport> {
    let ranker = Ranker::new(collection, store);
    run_with_ranker(bench, &ranker, collection, h, mode, model, k)
}

pub(crate) fn run_with_ranker(
    bench: &Benchmark,
    ranker: &Ranker<'_>,
    collection: &Collection,
    h: &Hyperparameters,
    mode: Mode,
    model: Model,
    k: usize,
) -> Result<EvalReport> {
    let h = h.with_mode(mode);
    let docs = collection.docs();
    let mut per_query = Vec::new();
    let mut skipped = Vec::new();
    for query in &bench.queries {
        let Some(relevant) = bench.relevant(&query.id) else {
            log::warn!("query {:?} has no relevance judgments; skipped", query.id);
            skipped.push(query.id.clone());
            continue;
        };
        let ranked: Vec<&str> = ranker
            .top_k(query, &h, model, k)?
            .into_iter()
            .map(|(idx, _)| docs[idx].id.as_str())
            .collect();
        per_query.push(QueryPrecision {
            query_id: query.id.clone(),
            precision: precision_at_k(&ranked, &relevant, k)?,
        });
    }
    let average = if per_query.is_empty() {
        0.0
    } else {
        per_query.iter().map(|q| q.precision).sum::<f64>() / per_query.len() as f64
    };
    Ok(EvalReport {
        mode,
        k,
        per_query,
        average,
        skipped,
    })
}

/// One report per mode, sharing a single ranker.
pub fn run_modes(
    bench: &Benchmark,
    collection: &Collection,
    store: &TripleStore,
    h: &Hyperparameters,
    modes: &[Mode],
    model: Model,
    k: usize,
) -> Result<Vec<EvalReport>> {
    let ranker = Ranker::new(collection, store);
    modes
        .iter()
        .map(|&mode| run_with_ranker(bench, &ranker, collection, h, mode, model, k))
        .collect()
}

/// Side-by-side table of per-query and average precision, one column per
/// report. Reports are assumed to cover the same queries.
pub fn comparison_table(reports: &[EvalReport]) -> String {
    let Some(first) = reports.first() else {
        return String::new();
    };
    let mut out = String::from("query");
    for r in reports {
        let _ = write!(out, "\t{}", r.mode);
    }
    out.push('\n');
    for (i, q) in first.per_query.iter().enumerate() {
        out.push_str(&q.query_id);
        for r in reports {
            let _ = write!(out, "\t{:.4}", r.per_query[i].precision);
        }
        out.push('\n');
    }
    let _ = write!(out, "P@{}", first.k);
    for r in reports {
        let _ = write!(out, "\t{:.4}", r.average);
    }
    out.push('\n');
    out
}
