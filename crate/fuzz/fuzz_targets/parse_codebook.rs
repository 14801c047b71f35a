#![no_main]

use libfuzzer_sys::fuzz_target;
use scma_core::format::{parse_codebook, write_codebook};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cb) = parse_codebook(text) {
        let again = parse_codebook(&write_codebook(&cb)).expect("exported codebook must parse");
        assert_eq!(write_codebook(&again), write_codebook(&cb));
    }
});
