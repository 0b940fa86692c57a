//! Command implementations behind the `cskir` binary.
//!
//! Every command takes paths and options and returns a summary value; the
//! binary only parses flags, prints, and maps [`CliError`] to an exit code.

use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use cskir::corpus::{expand_hypernyms, ingest_documents, Provenance};
use cskir::eval::{comparison_table, run_modes, Benchmark, EvalReport};
use cskir::kb::{filter_triples, load_triples, FilterStats};
use cskir::prune::{prune_corpus, term_frequencies, DEFAULT_MAX_DISTANCE};
use cskir::rank::{format_explain, format_run};
use cskir::{
    BackgroundCorpus, Collection, ConfigFile, Corpus, HypernymMap, Hyperparameters, IndexBundle,
    Mode, Model, Query, Ranker, SeedVocabulary, TripleStore,
};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] cskir::Error),

    /// Flags that contradict each other or are out of range.
    #[error("{0}")]
    Usage(String),

    /// Nothing to rank or evaluate; a warning promoted to a failure.
    #[error("{0}")]
    EmptyInput(String),
}

impl CliError {
    /// 1 for escalated empty-input warnings, 2 for I/O and parse failures,
    /// 3 for invalid configuration.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::EmptyInput(_) | CliError::Core(cskir::Error::EmptyQuery(_)) => 1,
            CliError::Usage(_) | CliError::Core(cskir::Error::Config(_)) => 3,
            CliError::Core(_) => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| cskir::Error::Io { source_name: path.display().to_string(), source: e }.into())
}

fn name(path: &Path) -> String {
    path.display().to_string()
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let io_err = |e| cskir::Error::Io { source_name: name(path), source: e };
    let mut file = File::create(path).map_err(io_err)?;
    file.write_all(bytes).map_err(io_err)?;
    Ok(())
}

pub fn load_bundle(path: &Path) -> CliResult<IndexBundle> {
    Ok(IndexBundle::read(open(path)?, &name(path))?)
}

pub fn load_triple_file(path: &Path) -> CliResult<TripleStore> {
    Ok(load_triples(open(path)?, &name(path))?.store)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestSummary {
    pub documents: usize,
    pub labels: usize,
    pub hypernym_expansions: usize,
    pub triples: Option<usize>,
}

/// Reads documents, expands labels with hypernyms, computes feature weights
/// against the background corpus and writes an index bundle.
pub fn cmd_ingest(
    docs: &Path,
    hypernyms: Option<&Path>,
    background: &Path,
    triples: Option<&Path>,
    out: &Path,
) -> CliResult<IngestSummary> {
    let corpus = ingest_documents(open(docs)?, &name(docs))?;
    let background = BackgroundCorpus::load(open(background)?, &name(background))?;
    let map = match hypernyms {
        Some(path) => HypernymMap::load(open(path)?, &name(path))?,
        None => HypernymMap::default(),
    };
    let expanded: Vec<_> = corpus
        .docs()
        .iter()
        .map(|d| expand_hypernyms(d, &map))
        .collect();
    let labels = expanded.iter().map(|d| d.visual_labels.len()).sum();
    let hypernym_expansions = expanded
        .iter()
        .flat_map(|d| &d.visual_labels)
        .filter(|l| l.provenance == Provenance::Hypernym)
        .count();
    let documents = expanded.len();
    let collection = Collection::build(Corpus::new(expanded)?, background);
    let store = triples.map(load_triple_file).transpose()?;
    let summary = IngestSummary {
        documents,
        labels,
        hypernym_expansions,
        triples: store.as_ref().map(TripleStore::len),
    };
    if documents == 0 {
        log::warn!("{}: no documents", name(docs));
    }
    write_file(out, &IndexBundle::new(collection, store).to_bytes()?)?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KbSummary {
    /// Records dropped while reading because subject or object was empty.
    pub malformed: usize,
    pub kept: usize,
    pub dropped: usize,
}

/// Keeps the triples whose subject or object mentions a seed noun and writes
/// them as TSV in their original column form.
pub fn cmd_build_kb(triples: &Path, seed: &Path, out: &Path) -> CliResult<KbSummary> {
    let seed = SeedVocabulary::load(open(seed)?, &name(seed))?;
    let load = load_triples(open(triples)?, &name(triples))?;
    let (filtered, FilterStats { kept, dropped }) = filter_triples(&load.store, &seed);
    write_file(out, filtered.to_tsv().as_bytes())?;
    Ok(KbSummary {
        malformed: load.dropped,
        kept,
        dropped,
    })
}

#[derive(Deserialize)]
struct PruneRecord {
    id: String,
    #[serde(default, alias = "caption")]
    text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneLine {
    pub id: String,
    pub distance: f64,
    pub kept: bool,
}

/// Scores JSON-lines documents (`{"id":..., "text":...}`) against a plain-text
/// seed document and marks those at `max_distance` or beyond as pruned.
pub fn cmd_prune(docs: &Path, seed: &Path, max_distance: f64) -> CliResult<Vec<PruneLine>> {
    use std::io::BufRead;
    let source = name(docs);
    let mut records = Vec::new();
    for (n, line) in open(docs)?.lines().enumerate() {
        let line = line.map_err(|e| cskir::Error::Io { source_name: source.clone(), source: e })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PruneRecord = serde_json::from_str(&line).map_err(|e| cskir::Error::Parse {
            source_name: source.clone(),
            line: n + 1,
            message: e.to_string(),
        })?;
        records.push(rec);
    }
    let seed_text = fs::read_to_string(seed)
        .map_err(|e| cskir::Error::Io { source_name: name(seed), source: e })?;
    let seed_tf = term_frequencies(&seed_text);
    let tfs: Vec<_> = records.iter().map(|r| term_frequencies(&r.text)).collect();
    let outcome = prune_corpus(&tfs, &seed_tf, max_distance);
    Ok(records
        .into_iter()
        .zip(outcome.distances)
        .map(|(r, distance)| PruneLine {
            id: r.id,
            distance,
            kept: distance < max_distance,
        })
        .collect())
}

pub const DEFAULT_PRUNE_DISTANCE: f64 = DEFAULT_MAX_DISTANCE;

/// Hyper-parameter sources, lowest to highest precedence: built-in defaults,
/// config file, individual flags, then `mode`.
#[derive(Debug, Clone, Default)]
pub struct ParamOptions {
    pub config: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub alpha_x: Option<f64>,
    pub alpha_v: Option<f64>,
    pub beta_cs: Option<f64>,
    pub mode: Option<Mode>,
}

impl ParamOptions {
    /// Resolves the effective parameters for `mode` (or the `mode` flag).
    pub fn resolve(&self, mode: Option<Mode>) -> CliResult<Hyperparameters> {
        let mut h = Hyperparameters::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .map_err(|e| cskir::Error::Io { source_name: name(path), source: e })?;
            h = ConfigFile::parse(&text)
                .and_then(|c| c.apply(h))
                .map_err(|e| cskir::Error::Config(format!("{}: {e}", name(path))))?;
        }
        if let Some(a) = self.alpha {
            h.alpha = a;
        }
        match (self.alpha_x, self.alpha_v) {
            (Some(x), Some(v)) => {
                h.alpha_x = x;
                h.alpha_v = v;
            }
            (Some(x), None) => {
                h.alpha_x = x;
                h.alpha_v = 1.0 - x;
            }
            (None, Some(v)) => {
                h.alpha_v = v;
                h.alpha_x = 1.0 - v;
            }
            (None, None) => {}
        }
        if let Some(b) = self.beta_cs {
            h.beta_cs = b;
        }
        h.validate()?;

        let mode = mode.or(self.mode);
        if let Some(mode) = mode {
            let fixed: &[(&str, Option<f64>)] = match mode {
                Mode::Vanilla => &[
                    ("--alpha-x", self.alpha_x),
                    ("--alpha-v", self.alpha_v),
                    ("--beta-cs", self.beta_cs),
                ],
                Mode::Extended => &[("--beta-cs", self.beta_cs)],
                Mode::Full => &[],
            };
            if let Some((flag, _)) = fixed.iter().find(|(_, v)| v.is_some()) {
                return Err(CliError::Usage(format!("{flag} conflicts with --mode {mode}")));
            }
            h = h.with_mode(mode);
        }
        Ok(h)
    }
}

#[derive(Debug, Clone)]
pub struct QueryOptions {
    pub params: ParamOptions,
    pub k: usize,
    pub model: Model,
    pub explain: bool,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions {
            params: ParamOptions::default(),
            k: 10,
            model: Model::Unigram,
            explain: false,
        }
    }
}

fn pick_store(bundle: &mut IndexBundle, triples: Option<&Path>) -> CliResult<TripleStore> {
    match triples {
        Some(path) => load_triple_file(path),
        None => Ok(bundle.store.take().unwrap_or_else(|| {
            log::warn!("no triple store given; the commonsense model scores zero");
            TripleStore::default()
        })),
    }
}

/// Ranks the bundle's documents for `query` and returns run TSV, followed by
/// the per-term breakdown when `explain` is set.
pub fn cmd_query(
    bundle: &Path,
    triples: Option<&Path>,
    query: &str,
    opts: &QueryOptions,
) -> CliResult<String> {
    if opts.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let h = opts.params.resolve(None)?;
    let mut bundle = load_bundle(bundle)?;
    let store = pick_store(&mut bundle, triples)?;
    let query = Query::parse("q", query)?;
    if bundle.collection.is_empty() {
        return Err(CliError::EmptyInput("the index holds no documents".into()));
    }
    let results = Ranker::new(&bundle.collection, &store).rank(&query, &h, opts.model, opts.k)?;
    let mut out = format_run(&query.id, &results);
    if opts.explain {
        out.push('\n');
        out.push_str(&format_explain(&query, &results));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub params: ParamOptions,
    pub modes: Vec<Mode>,
    pub k: usize,
    pub model: Model,
    /// Directory receiving one `eval_<mode>.tsv` per mode and `comparison.tsv`.
    pub out: Option<PathBuf>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            params: ParamOptions::default(),
            modes: Mode::ALL.to_vec(),
            k: 10,
            model: Model::Unigram,
            out: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalOutput {
    pub reports: Vec<EvalReport>,
    pub table: String,
}

/// Runs the benchmark once per requested mode.
pub fn cmd_eval(
    bundle: &Path,
    triples: Option<&Path>,
    queries: &Path,
    qrels: &Path,
    opts: &EvalOptions,
) -> CliResult<EvalOutput> {
    if opts.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    if opts.modes.is_empty() {
        return Err(CliError::Usage("no modes requested".into()));
    }
    if opts.params.mode.is_some() {
        return Err(CliError::Usage("eval takes --modes, not --mode".into()));
    }
    // validates the configured parameters; modes are applied per report
    let h = opts.params.resolve(None)?;
    let bench = Benchmark {
        queries: Benchmark::load_queries(open(queries)?, &name(queries))?,
        qrels: Benchmark::load_qrels(open(qrels)?, &name(qrels))?,
    };
    let mut bundle = load_bundle(bundle)?;
    let store = pick_store(&mut bundle, triples)?;
    if bundle.collection.is_empty() {
        return Err(CliError::EmptyInput("the index holds no documents".into()));
    }
    let reports = run_modes(&bench, &bundle.collection, &store, &h, &opts.modes, opts.model, opts.k)?;
    if reports.iter().all(|r| r.per_query.is_empty()) {
        return Err(CliError::EmptyInput("no query has relevance judgments".into()));
    }
    let table = comparison_table(&reports);
    if let Some(dir) = &opts.out {
        fs::create_dir_all(dir).map_err(|e| cskir::Error::Io { source_name: name(dir), source: e })?;
        for r in &reports {
            write_file(&dir.join(format!("eval_{}.tsv", r.mode)), r.to_tsv().as_bytes())?;
        }
        write_file(&dir.join("comparison.tsv"), table.as_bytes())?;
    }
    Ok(EvalOutput { reports, table })
}
