#![no_main]

use libfuzzer_sys::fuzz_target;
use scma_core::format::{parse_indicator, write_indicator};
use scma_core::FactorGraph;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(f) = parse_indicator(text) {
        assert_eq!(parse_indicator(&write_indicator(&f)).as_ref(), Ok(&f));
        let _ = FactorGraph::from_indicator(f.n, f.k, f.entries);
    }
});
