//! The corpus files committed under `corpus/` must stay byte-equal to
//! what the generator produces for the bundled seed, so the shipped
//! fixtures never drift from the code that documents them.

use std::path::PathBuf;

use polyroute_core::corpus::{generate_corpus, generate_validation, Corpus, BUNDLED_CORPUS_SEED};

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

#[test]
fn committed_corpus_matches_the_generator() {
    let dir = corpus_dir();
    assert!(
        dir.join("corpus.jsonl").exists(),
        "bundled corpus missing; run `polyroute gen-corpus --out corpus`"
    );
    let committed = Corpus::read_from_dir(&dir).unwrap();
    let generated = generate_corpus(BUNDLED_CORPUS_SEED);
    assert_eq!(committed.records, generated.records);
    assert_eq!(committed.fixtures, generated.fixtures);
    assert_eq!(committed.annotations, generated.annotations);

    let raw = std::fs::read_to_string(dir.join("validation.jsonl")).unwrap();
    let committed_validation: Vec<serde_json::Value> =
        raw.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let generated_validation: Vec<serde_json::Value> = generate_validation(BUNDLED_CORPUS_SEED)
        .iter()
        .map(|v| serde_json::to_value(v).unwrap())
        .collect();
    assert_eq!(committed_validation, generated_validation);
}
