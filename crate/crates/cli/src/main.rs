use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cskir::{Mode, Model};
use cskir_cli::{
    cmd_build_kb, cmd_eval, cmd_ingest, cmd_prune, cmd_query, CliResult, EvalOptions,
    ParamOptions, QueryOptions, DEFAULT_PRUNE_DISTANCE,
};

/// Image-document retrieval with commonsense query expansion.
///
/// Exit codes: 0 success, 1 nothing to rank or evaluate, 2 I/O or parse
/// failure, 3 invalid configuration or flags.
#[derive(Parser)]
#[command(name = "cskir", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index bundle from JSON-lines documents.
    Ingest {
        /// `{"id", "caption", "objects": [{"label", "confidence"}]}` per line
        #[arg(long)]
        docs: PathBuf,
        /// tag<TAB>count background frequencies
        #[arg(long)]
        background: PathBuf,
        /// child<TAB>parent label hypernyms
        #[arg(long)]
        hypernyms: Option<PathBuf>,
        /// Triple TSV to store in the bundle
        #[arg(long)]
        triples: Option<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Filter a triple file down to triples mentioning seed nouns.
    BuildKb {
        /// subject<TAB>predicate<TAB>object[<TAB>confidence] per line
        #[arg(long)]
        triples: PathBuf,
        /// One seed noun per line
        #[arg(long)]
        seed: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Weighted-Jaccard distance of crawled documents from a seed document.
    Prune {
        /// `{"id", "text"}` per line
        #[arg(long)]
        docs: PathBuf,
        /// Plain-text seed document
        #[arg(long)]
        seed: PathBuf,
        /// Documents at or beyond this distance are pruned
        #[arg(long, default_value_t = DEFAULT_PRUNE_DISTANCE)]
        max_distance: f64,
    },
    /// Rank the indexed documents for a keyword query.
    Query {
        #[arg(long)]
        bundle: PathBuf,
        /// Triple TSV; defaults to the store saved in the bundle
        #[arg(long)]
        triples: Option<PathBuf>,
        /// Keywords
        query: String,
        #[command(flatten)]
        params: ParamArgs,
        /// vanilla | extended | full; fixes the weights the mode restricts
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// unigram | bigram
        #[arg(long, default_value = "unigram")]
        model: Model,
        /// Print a per-term breakdown with the bridging triples
        #[arg(long)]
        explain: bool,
    },
    /// Precision@k of a benchmark under one or more modes.
    Eval {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        triples: Option<PathBuf>,
        /// query_id<TAB>keywords per line
        #[arg(long)]
        queries: PathBuf,
        /// query_id<TAB>doc_id<TAB>0|1 per line
        #[arg(long)]
        qrels: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_delimiter = ',', default_value = "vanilla,extended,full")]
        modes: Vec<Mode>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value = "unigram")]
        model: Model,
        /// Directory for per-mode reports and the comparison table
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Weights: built-in defaults < --config file < these flags < --mode.
#[derive(Args)]
struct ParamArgs {
    /// TOML file with `version = 1` and any of alpha, alpha_x, alpha_v,
    /// beta_cs, lambda_s, lambda_p, lambda_o, sim_min_substring, sim_threshold
    #[arg(long)]
    config: Option<PathBuf>,
    /// Document vs background mixing weight
    #[arg(long)]
    alpha: Option<f64>,
    /// Caption weight; alpha-v defaults to its complement
    #[arg(long)]
    alpha_x: Option<f64>,
    /// Visual label weight; alpha-x defaults to its complement
    #[arg(long)]
    alpha_v: Option<f64>,
    /// Commonsense model weight in the final mixture
    #[arg(long)]
    beta_cs: Option<f64>,
}

impl ParamArgs {
    fn into_options(self, mode: Option<Mode>) -> ParamOptions {
        ParamOptions {
            config: self.config,
            alpha: self.alpha,
            alpha_x: self.alpha_x,
            alpha_v: self.alpha_v,
            beta_cs: self.beta_cs,
            mode,
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Ingest {
            docs,
            background,
            hypernyms,
            triples,
            out,
        } => {
            let s = cmd_ingest(&docs, hypernyms.as_deref(), &background, triples.as_deref(), &out)?;
            println!("documents\t{}", s.documents);
            println!("labels\t{}", s.labels);
            println!("hypernym_expansions\t{}", s.hypernym_expansions);
            if let Some(t) = s.triples {
                println!("triples\t{t}");
            }
        }
        Command::BuildKb { triples, seed, out } => {
            let s = cmd_build_kb(&triples, &seed, &out)?;
            println!("kept\t{}", s.kept);
            println!("dropped\t{}", s.dropped);
            if s.malformed > 0 {
                println!("malformed\t{}", s.malformed);
            }
        }
        Command::Prune {
            docs,
            seed,
            max_distance,
        } => {
            for line in cmd_prune(&docs, &seed, max_distance)? {
                let status = if line.kept { "kept" } else { "pruned" };
                println!("{}\t{}\t{status}", line.id, line.distance);
            }
        }
        Command::Query {
            bundle,
            triples,
            query,
            params,
            mode,
            k,
            model,
            explain,
        } => {
            let opts = QueryOptions {
                params: params.into_options(mode),
                k,
                model,
                explain,
            };
            print!("{}", cmd_query(&bundle, triples.as_deref(), &query, &opts)?);
        }
        Command::Eval {
            bundle,
            triples,
            queries,
            qrels,
            params,
            modes,
            k,
            model,
            out,
        } => {
            let opts = EvalOptions {
                params: params.into_options(None),
                modes,
                k,
                model,
                out,
            };
            let output = cmd_eval(&bundle, triples.as_deref(), &queries, &qrels, &opts)?;
            print!("{}", output.table);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
