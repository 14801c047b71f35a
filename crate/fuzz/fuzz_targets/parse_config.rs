#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use scma_sim::SimConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = SimConfig::from_toml(text, Path::new("fuzz.toml"));
});
