//! Replays the checked-in config corpus and the example scenarios.

use std::fs;
use std::path::{Path, PathBuf};

use scma_sim::{Scenario, SimConfig};

fn tomls(dir: &Path) -> Vec<PathBuf> {
    let mut out: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    out.sort();
    out
}

#[test]
fn config_seeds_never_panic() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/parse_config");
    let seeds = tomls(&root);
    assert!(!seeds.is_empty());
    for path in seeds {
        let text = fs::read_to_string(&path).unwrap();
        let _ = SimConfig::from_toml(&text, &path);
    }
}

#[test]
fn example_scenarios_are_valid() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    for path in tomls(&root) {
        let text = fs::read_to_string(&path).unwrap();
        let cfg = SimConfig::from_toml(&text, &path).unwrap_or_else(|e| panic!("{e}"));
        if let Err(e) = Scenario::new(cfg) {
            panic!("{}: {e}", path.display());
        }
    }
}
