#![allow(dead_code)]

use cskir::{BackgroundCorpus, Collection, Corpus, CskTriple, Document, Query, TripleStore};
use rand::seq::SliceRandom;
use rand::Rng;

/// Words chosen so that many pairs share long substrings.
pub const WORDS: &[&str] = &[
    "travel", "traveler", "travels", "backpack", "backpacks", "pack", "packing", "bag", "bags",
    "handbag", "map", "maps", "tourist", "tourists", "tour", "road", "roads", "railroad", "bus",
    "buses", "bottle", "bottles", "person", "personal", "beach", "beaches", "hotel", "hotels",
    "camera", "cameras", "train", "trains", "trainer", "ticket", "tickets", "suitcase", "case",
    "luggage", "airport", "port", "city", "cities", "street", "streets",
];

pub const PREDICATES: &[&str] = &["use", "carry", "is a type of", "need", "buy", "has", "visit"];

pub fn word<R: Rng>(rng: &mut R) -> &'static str {
    WORDS.choose(rng).unwrap()
}

pub fn random_doc<R: Rng>(rng: &mut R, id: &str, text_len: usize, labels: usize) -> Document {
    let caption: Vec<&str> = (0..text_len).map(|_| word(rng)).collect();
    let objects: Vec<(String, f64)> = (0..labels)
        .map(|_| {
            let label = if rng.gen_bool(0.2) {
                format!("{} {}", word(rng), word(rng))
            } else {
                word(rng).to_string()
            };
            (label, rng.gen_range(0.05..=1.0))
        })
        .collect();
    let objects: Vec<(&str, f64)> = objects.iter().map(|(l, c)| (l.as_str(), *c)).collect();
    Document::from_raw(id, &caption.join(" "), &objects).unwrap()
}

pub fn random_background<R: Rng>(rng: &mut R) -> BackgroundCorpus {
    let mut counts: Vec<(&str, u64)> = Vec::new();
    for w in WORDS {
        if rng.gen_bool(0.8) {
            counts.push((w, rng.gen_range(1..200)));
        }
    }
    BackgroundCorpus::from_counts(counts).unwrap()
}

pub fn random_collection<R: Rng>(rng: &mut R, docs: usize) -> Collection {
    let docs: Vec<Document> = (0..docs)
        .map(|i| {
            let len = rng.gen_range(0..8);
            let labels = rng.gen_range(0..5);
            random_doc(rng, &format!("d{i:03}"), len, labels)
        })
        .collect();
    Collection::build(Corpus::new(docs).unwrap(), random_background(rng))
}

pub fn random_store<R: Rng>(rng: &mut R, n: usize) -> TripleStore {
    let triples = (0..n)
        .map(|i| {
            let subject = word(rng);
            let object = if rng.gen_bool(0.3) {
                format!("{} {}", word(rng), word(rng))
            } else {
                word(rng).to_string()
            };
            let predicate = PREDICATES.choose(rng).unwrap();
            CskTriple::new(&format!("t{}", i + 1), subject, predicate, &object).unwrap()
        })
        .collect();
    TripleStore::new(triples)
}

pub fn random_query<R: Rng>(rng: &mut R, id: &str) -> Query {
    let n = rng.gen_range(1..=3);
    let words: Vec<&str> = (0..n).map(|_| word(rng)).collect();
    Query::parse(id, &words.join(" ")).unwrap()
}
