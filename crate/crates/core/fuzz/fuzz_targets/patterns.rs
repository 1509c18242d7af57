#![no_main]

use libfuzzer_sys::fuzz_target;
use tengen::search::PatternTable;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = PatternTable::parse(text);
    }
});
