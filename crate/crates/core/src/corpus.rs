//! Documents, queries and their ingestion from raw records.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::text::normalize;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Detected,
    Hypernym,
}

/// An object class recognized in the image, or an ancestor class of one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualLabel {
    pub label_tokens: Vec<String>,
    pub confidence: f64,
    pub provenance: Provenance,
}

impl VisualLabel {
    /// Normalized tokens joined by single spaces.
    pub fn key(&self) -> String {
        self.label_tokens.join(" ")
    }
}

/// One image-document: caption tokens plus visual labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text_tokens: Vec<String>,
    pub visual_labels: Vec<VisualLabel>,
    pub raw_caption: String,
}

impl Document {
    /// Builds a document from a raw caption and `(label, confidence)` detections.
    ///
    /// Detections whose label normalizes to the same tokens are merged, keeping
    /// the higher confidence.
    pub fn from_raw(id: &str, caption: &str, objects: &[(&str, f64)]) -> Result<Document> {
        let objects: Vec<RawObject> = objects
            .iter()
            .map(|&(label, confidence)| RawObject {
                label: label.to_string(),
                confidence,
            })
            .collect();
        build_document(
            RawDocument {
                id: id.to_string(),
                caption: caption.to_string(),
                objects,
            },
            "<memory>",
            0,
        )
    }

    /// Distinct caption tokens in first-occurrence order.
    pub fn distinct_text_tokens(&self) -> Vec<&str> {
        let mut seen = std::collections::HashSet::new();
        self.text_tokens
            .iter()
            .map(String::as_str)
            .filter(|t| seen.insert(*t))
            .collect()
    }
}

#[derive(Debug, Deserialize)]
struct RawDocument {
    id: String,
    #[serde(default)]
    caption: String,
    #[serde(default)]
    objects: Vec<RawObject>,
}

#[derive(Debug, Deserialize)]
struct RawObject {
    label: String,
    confidence: f64,
}

fn build_document(raw: RawDocument, source: &str, line: usize) -> Result<Document> {
    if raw.id.is_empty() {
        return Err(Error::parse(source, line, "empty document id"));
    }
    let mut labels: Vec<VisualLabel> = Vec::with_capacity(raw.objects.len());
    for obj in raw.objects {
        if !(obj.confidence > 0.0 && obj.confidence <= 1.0) {
            return Err(Error::parse(
                source,
                line,
                format!(
                    "confidence {} for label {:?} outside (0, 1]",
                    obj.confidence, obj.label
                ),
            ));
        }
        let tokens = normalize(&obj.label);
        if tokens.is_empty() {
            return Err(Error::parse(
                source,
                line,
                format!("label {:?} has no tokens after normalization", obj.label),
            ));
        }
        match labels.iter_mut().find(|l| l.label_tokens == tokens) {
            Some(existing) => existing.confidence = existing.confidence.max(obj.confidence),
            None => labels.push(VisualLabel {
                label_tokens: tokens,
                confidence: obj.confidence,
                provenance: Provenance::Detected,
            }),
        }
    }
    Ok(Document {
        text_tokens: normalize(&raw.caption),
        visual_labels: labels,
        raw_caption: raw.caption,
        id: raw.id,
    })
}

/// Immutable document collection with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    docs: Vec<Document>,
}

impl Corpus {
    pub fn new(docs: Vec<Document>) -> Result<Corpus> {
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for (idx, doc) in docs.iter().enumerate() {
            if doc.id.is_empty() {
                return Err(Error::parse("<memory>", idx + 1, "empty document id"));
            }
            if let Some(first) = seen.insert(&doc.id, idx + 1) {
                return Err(Error::DuplicateDocument {
                    id: doc.id.clone(),
                    first_line: first,
                    line: idx + 1,
                });
            }
        }
        Ok(Corpus { docs })
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn into_docs(self) -> Vec<Document> {
        self.docs
    }
}

/// Reads JSON-lines document records:
/// `{"id": ..., "caption": ..., "objects": [{"label": ..., "confidence": ...}]}`.
///
/// Blank lines are skipped. The first malformed record aborts ingestion with
/// its line number; a repeated id rejects the whole batch.
pub fn ingest_documents<R: BufRead>(reader: R, source: &str) -> Result<Corpus> {
    let mut docs = Vec::new();
    let mut lines_of: HashMap<String, usize> = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawDocument = serde_json::from_str(&line)
            .map_err(|e| Error::parse(source, lineno, format!("malformed record: {e}")))?;
        let doc = build_document(raw, source, lineno)?;
        if let Some(&first_line) = lines_of.get(&doc.id) {
            return Err(Error::DuplicateDocument {
                id: doc.id,
                first_line,
                line: lineno,
            });
        }
        lines_of.insert(doc.id.clone(), lineno);
        docs.push(doc);
    }
    Corpus::new(docs)
}

/// Child-to-parent class relation used to add ancestor labels.
///
/// Keys are normalized labels (tokens joined by single spaces). A class may
/// have several parents; the relation must be acyclic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HypernymMap {
    parents: BTreeMap<String, Vec<String>>,
}

impl HypernymMap {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut parents: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (child, parent) in pairs {
            let child = normalize(child).join(" ");
            let parent = normalize(parent).join(" ");
            if child.is_empty() || parent.is_empty() {
                continue;
            }
            let list = parents.entry(child).or_default();
            if !list.contains(&parent) {
                list.push(parent);
            }
        }
        let map = HypernymMap { parents };
        map.check_acyclic()?;
        Ok(map)
    }

    /// Reads `hyponym<TAB>hypernym` lines.
    pub fn load<R: BufRead>(reader: R, source: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(source, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 2 {
                return Err(Error::parse(
                    source,
                    idx + 1,
                    format!("expected 2 tab-separated columns, found {}", cols.len()),
                ));
            }
            pairs.push((cols[0].to_string(), cols[1].to_string()));
        }
        Self::from_pairs(pairs.iter().map(|(c, p)| (c.as_str(), p.as_str())))
    }

    pub fn len(&self) -> usize {
        self.parents.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    fn check_acyclic(&self) -> Result<()> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Active,
            Done,
        }
        let mut marks: HashMap<&str, Mark> = HashMap::new();
        for start in self.parents.keys() {
            if marks.contains_key(start.as_str()) {
                continue;
            }
            // iterative DFS: (node, next parent index)
            let mut stack: Vec<(&str, usize)> = vec![(start, 0)];
            marks.insert(start, Mark::Active);
            while let Some((node, next)) = stack.pop() {
                let parents = self.parents.get(node).map(Vec::as_slice).unwrap_or(&[]);
                if next < parents.len() {
                    stack.push((node, next + 1));
                    let parent = parents[next].as_str();
                    match marks.get(parent) {
                        Some(Mark::Active) => return Err(Error::HypernymCycle(parent.to_string())),
                        Some(Mark::Done) => {}
                        None => {
                            marks.insert(parent, Mark::Active);
                            stack.push((parent, 0));
                        }
                    }
                } else {
                    marks.insert(node, Mark::Done);
                }
            }
        }
        Ok(())
    }

    /// All ancestors of `label` in breadth-first order, without repeats.
    pub fn ancestors(&self, label: &str) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        let mut frontier: Vec<&str> = vec![label];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for node in frontier {
                for parent in self.parents.get(node).into_iter().flatten() {
                    if parent != label && !out.contains(&parent.as_str()) {
                        out.push(parent);
                        next.push(parent.as_str());
                    }
                }
            }
            frontier = next;
        }
        out
    }
}

/// Appends every ancestor of each detected label as a hypernym label with the
/// detected confidence. A class reached more than once keeps its highest
/// confidence; classes that were themselves detected are left untouched.
pub fn expand_hypernyms(doc: &Document, map: &HypernymMap) -> Document {
    let detected: Vec<&VisualLabel> = doc
        .visual_labels
        .iter()
        .filter(|l| l.provenance == Provenance::Detected)
        .collect();
    let detected_keys: Vec<String> = detected.iter().map(|l| l.key()).collect();

    let mut hypernyms: Vec<VisualLabel> = doc
        .visual_labels
        .iter()
        .filter(|l| l.provenance == Provenance::Hypernym)
        .cloned()
        .collect();
    for (label, key) in detected.iter().zip(&detected_keys) {
        for ancestor in map.ancestors(key) {
            if detected_keys.iter().any(|k| k == ancestor) {
                continue;
            }
            match hypernyms.iter_mut().find(|h| h.key() == ancestor) {
                Some(h) => h.confidence = h.confidence.max(label.confidence),
                None => hypernyms.push(VisualLabel {
                    label_tokens: ancestor.split(' ').map(str::to_string).collect(),
                    confidence: label.confidence,
                    provenance: Provenance::Hypernym,
                }),
            }
        }
    }

    let mut out = doc.clone();
    out.visual_labels = detected.into_iter().cloned().chain(hypernyms).collect();
    out
}

/// A keyword query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub terms: Vec<String>,
}

impl Query {
    pub fn parse(id: &str, text: &str) -> Result<Query> {
        let terms = normalize(text);
        if terms.is_empty() {
            return Err(Error::EmptyQuery(text.to_string()));
        }
        Ok(Query {
            id: id.to_string(),
            terms,
        })
    }
}
