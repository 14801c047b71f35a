//! Replays the checked-in fuzz corpus through the text parsers.

use std::fs;
use std::path::PathBuf;

use scma_core::format::{parse_codebook, parse_indicator, write_codebook, write_indicator};
use scma_core::FactorGraph;

fn corpus(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut seeds: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| {
            let text = fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    seeds.sort();
    assert!(!seeds.is_empty(), "no seeds in {}", dir.display());
    seeds
}

#[test]
fn codebook_seeds() {
    let mut parsed = 0;
    for (path, text) in corpus("parse_codebook") {
        if let Ok(cb) = parse_codebook(&text) {
            let again = parse_codebook(&write_codebook(&cb)).unwrap();
            assert_eq!(write_codebook(&again), write_codebook(&cb), "{}", path.display());
            parsed += 1;
        }
    }
    assert!(parsed >= 3);
}

#[test]
fn indicator_seeds() {
    let mut graphs = 0;
    for (path, text) in corpus("parse_indicator") {
        if let Ok(f) = parse_indicator(&text) {
            assert_eq!(
                parse_indicator(&write_indicator(&f)),
                Ok(f.clone()),
                "{}",
                path.display()
            );
            graphs += FactorGraph::from_indicator(f.n, f.k, f.entries).is_ok() as usize;
        }
    }
    assert!(graphs >= 1);
}
