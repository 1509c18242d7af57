#![no_main]

use libfuzzer_sys::fuzz_target;
use tengen::data::DatasetManifest;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = DatasetManifest::parse(text) {
            assert_eq!(DatasetManifest::parse(&m.to_text()).unwrap(), m);
        }
    }
});
