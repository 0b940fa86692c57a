//! Multimodal image retrieval with query-likelihood language models and
//! commonsense triple translation.
//!
//! Documents are image captions plus detected object labels. Queries are
//! ranked by a mixture of a smoothed caption/label model and a translation
//! model that routes query terms through bridging commonsense triples.

pub mod background;
pub mod bundle;
pub mod collection;
pub mod config;
pub mod corpus;
mod error;
pub mod eval;
pub mod kb;
pub mod lm;
pub mod prune;
pub mod rank;
pub mod similarity;
pub mod text;
pub mod weighting;

pub use background::BackgroundCorpus;
pub use bundle::IndexBundle;
pub use collection::Collection;
pub use config::{ConfigFile, Hyperparameters, Mode, Model};
pub use corpus::{Corpus, Document, HypernymMap, Query};
pub use error::{Error, Result};
pub use eval::{Benchmark, EvalReport};
pub use kb::{CskTriple, SeedVocabulary, TripleStore};
pub use rank::{RankedResult, Ranker};
pub use similarity::Similarity;
