//! Fixture loading shared by the benchmarks in `benches/`.

use std::path::PathBuf;

use dcxg_core::{load_grammar_path, Grammar, VectorStore};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn grammar() -> Grammar {
    load_grammar_path(fixture("grammar.json")).expect("fixture grammar")
}

pub fn vectors() -> VectorStore {
    VectorStore::load_path(fixture("vectors.txt")).expect("fixture vectors")
}

pub fn corpus() -> Vec<String> {
    std::fs::read_to_string(fixture("corpus.txt"))
        .expect("fixture corpus")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}
