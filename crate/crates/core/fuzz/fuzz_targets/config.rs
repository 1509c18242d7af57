#![no_main]

use libfuzzer_sys::fuzz_target;
use tengen::interface::Config;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(c) = Config::parse(text) {
            let _ = c.get::<f64>("komi");
        }
    }
});
