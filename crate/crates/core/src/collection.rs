use serde::{Deserialize, Serialize};

use crate::background::BackgroundCorpus;
use crate::corpus::{Corpus, Document};
use crate::weighting::FeatureWeightTable;

/// A corpus together with its background statistics and the per-document
/// feature weights derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Collection {
    corpus: Corpus,
    weights: Vec<FeatureWeightTable>,
    background: BackgroundCorpus,
}

impl Collection {
    pub fn build(corpus: Corpus, background: BackgroundCorpus) -> Self {
        let weights = corpus
            .docs()
            .iter()
            .map(|d| FeatureWeightTable::build(d, &background))
            .collect();
        Collection {
            corpus,
            weights,
            background,
        }
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn docs(&self) -> &[Document] {
        self.corpus.docs()
    }

    pub fn weights(&self) -> &[FeatureWeightTable] {
        &self.weights
    }

    pub fn background(&self) -> &BackgroundCorpus {
        &self.background
    }

    pub fn len(&self) -> usize {
        self.corpus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corpus.is_empty()
    }

    /// Document and weights by position.
    pub fn entry(&self, idx: usize) -> (&Document, &FeatureWeightTable) {
        (&self.corpus.docs()[idx], &self.weights[idx])
    }

    pub(crate) fn from_parts(
        corpus: Corpus,
        weights: Vec<FeatureWeightTable>,
        background: BackgroundCorpus,
    ) -> Option<Self> {
        (corpus.len() == weights.len()).then_some(Collection {
            corpus,
            weights,
            background,
        })
    }
}
