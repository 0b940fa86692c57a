//! Persisted index: one header line followed by a JSON payload.
//!
//! ```text
//! cskir-bundle <version> sha256=<hex digest of payload>
//! {"docs":[...],"weights":[...],"background":{...},"triples":[...]}
//! ```
//!
//! Floats are written with round-trip precision, so a loaded bundle scores
//! bit-identically to the collection it was saved from.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::background::BackgroundCorpus;
use crate::collection::Collection;
use crate::corpus::{Corpus, Document};
use crate::kb::{CskTriple, TripleStore};
use crate::weighting::FeatureWeightTable;
use crate::{Error, Result};

pub const BUNDLE_MAGIC: &str = "cskir-bundle";
pub const BUNDLE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Payload {
    docs: Vec<Document>,
    weights: Vec<FeatureWeightTable>,
    background: BackgroundCorpus,
    #[serde(default)]
    triples: Option<Vec<CskTriple>>,
}

/// A collection plus an optional triple store.
#[derive(Debug, Clone)]
pub struct IndexBundle {
    pub collection: Collection,
    pub store: Option<TripleStore>,
}

impl IndexBundle {
    pub fn new(collection: Collection, store: Option<TripleStore>) -> Self {
        IndexBundle { collection, store }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let payload = Payload {
            docs: self.collection.docs().to_vec(),
            weights: self.collection.weights().to_vec(),
            background: self.collection.background().clone(),
            triples: self.store.as_ref().map(|s| s.triples().to_vec()),
        };
        let body = serde_json::to_vec(&payload).map_err(|e| Error::Bundle(e.to_string()))?;
        let digest = hex::encode(Sha256::digest(&body));
        let mut out = format!("{BUNDLE_MAGIC} {BUNDLE_VERSION} sha256={digest}\n").into_bytes();
        out.extend_from_slice(&body);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let newline = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Bundle("missing header line".into()))?;
        let header = std::str::from_utf8(&bytes[..newline])
            .map_err(|_| Error::Bundle("header is not UTF-8".into()))?;
        let body = &bytes[newline + 1..];

        let fields: Vec<&str> = header.split(' ').collect();
        let [magic, version, digest] = fields.as_slice() else {
            return Err(Error::Bundle(format!("malformed header {header:?}")));
        };
        if *magic != BUNDLE_MAGIC {
            return Err(Error::Bundle("not an index bundle".into()));
        }
        let version: u32 = version
            .parse()
            .map_err(|_| Error::Bundle(format!("malformed version {version:?}")))?;
        if version != BUNDLE_VERSION {
            return Err(Error::Bundle(format!(
                "unsupported format version {version} (expected {BUNDLE_VERSION})"
            )));
        }
        let expected = digest
            .strip_prefix("sha256=")
            .ok_or_else(|| Error::Bundle(format!("malformed checksum {digest:?}")))?;
        if hex::encode(Sha256::digest(body)) != expected {
            return Err(Error::Bundle("checksum mismatch; bundle is corrupted".into()));
        }

        let payload: Payload =
            serde_json::from_slice(body).map_err(|e| Error::Bundle(e.to_string()))?;
        let corpus = Corpus::new(payload.docs)?;
        let collection = Collection::from_parts(corpus, payload.weights, payload.background)
            .ok_or_else(|| Error::Bundle("weight table count differs from document count".into()))?;
        Ok(IndexBundle {
            collection,
            store: payload.triples.map(TripleStore::new),
        })
    }

    pub fn write<W: Write>(&self, mut writer: W, target: &str) -> Result<()> {
        let bytes = self.to_bytes()?;
        writer.write_all(&bytes).map_err(|e| Error::io(target, e))
    }

    pub fn read<R: Read>(mut reader: R, source: &str) -> Result<Self> {
        let mut bytes = Vec::new();
        reader
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io(source, e))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            Error::Bundle(msg) => Error::Bundle(format!("{source}: {msg}")),
            other => other,
        })
    }
}
