//! Tag-frequency background corpus.
//!
//! Supplies inverse-frequency informativeness and the add-one smoothed term
//! distribution used to smooth document models.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::text::normalize;
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BackgroundCorpus {
    freq: BTreeMap<String, u64>,
    total: u64,
    idf_max: f64,
}

impl BackgroundCorpus {
    /// Builds the corpus from `(tag, count)` pairs, merging repeated tags.
    /// Tags are normalized; a multiword tag credits its count to each token.
    pub fn from_counts<'a>(pairs: impl IntoIterator<Item = (&'a str, u64)>) -> Result<Self> {
        let mut freq: BTreeMap<String, u64> = BTreeMap::new();
        for (idx, (tag, count)) in pairs.into_iter().enumerate() {
            if count == 0 {
                return Err(Error::parse(
                    "<memory>",
                    idx + 1,
                    format!("frequency of {tag:?} must be positive"),
                ));
            }
            for token in normalize(tag) {
                *freq.entry(token).or_default() += count;
            }
        }
        Ok(Self::from_map(freq))
    }

    fn from_map(freq: BTreeMap<String, u64>) -> Self {
        let total = freq.values().sum();
        let mut corpus = BackgroundCorpus {
            freq,
            total,
            idf_max: 0.0,
        };
        corpus.idf_max = corpus
            .freq
            .values()
            .map(|&f| corpus.idf_of_count(f))
            .fold(0.0, f64::max);
        corpus
    }

    /// Reads `tag<TAB>frequency` lines.
    pub fn load<R: BufRead>(reader: R, source: &str) -> Result<Self> {
        let mut freq: BTreeMap<String, u64> = BTreeMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::io(source, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let (tag, count) = line.split_once('\t').ok_or_else(|| {
                Error::parse(source, lineno, "expected tag<TAB>frequency")
            })?;
            let count: i64 = count.trim().parse().map_err(|_| {
                Error::parse(source, lineno, format!("frequency {count:?} is not an integer"))
            })?;
            if count <= 0 {
                return Err(Error::parse(
                    source,
                    lineno,
                    format!("frequency {count} must be positive"),
                ));
            }
            for token in normalize(tag) {
                *freq.entry(token).or_default() += count as u64;
            }
        }
        Ok(Self::from_map(freq))
    }

    pub fn freq(&self, token: &str) -> u64 {
        self.freq.get(token).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn vocabulary_size(&self) -> usize {
        self.freq.len()
    }

    pub fn idf_max(&self) -> f64 {
        self.idf_max
    }

    fn idf_of_count(&self, count: u64) -> f64 {
        ((self.total as f64 + 1.0) / (count as f64 + 1.0)).ln()
    }

    /// `ln((total + 1) / (freq + 1))`; unseen tokens count as frequency 0.
    pub fn idf(&self, token: &str) -> f64 {
        self.idf_of_count(self.freq(token))
    }

    /// idf scaled into [0, 1] by the largest in-vocabulary idf.
    ///
    /// Unseen tokens get 1. When no in-vocabulary token has positive idf
    /// (empty or single-tag corpus) every token gets 1.
    pub fn inf_norm(&self, token: &str) -> f64 {
        if self.idf_max <= 0.0 {
            return 1.0;
        }
        match self.freq.get(token) {
            Some(&count) => self.idf_of_count(count) / self.idf_max,
            None => 1.0,
        }
    }

    /// Add-one smoothed relative frequency `(freq + 1) / (total + |V|)`.
    /// An empty corpus assigns probability 1 to every token.
    pub fn bg_prob(&self, token: &str) -> f64 {
        let denom = self.total as f64 + self.freq.len() as f64;
        if denom == 0.0 {
            return 1.0;
        }
        (self.freq(token) as f64 + 1.0) / denom
    }
}
