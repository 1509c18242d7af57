#![no_main]

use libfuzzer_sys::fuzz_target;
use tengen::data::records::{decode_example, encode_example};
use tengen::data::RecordReader;

fuzz_target!(|data: &[u8]| {
    if let Some((&size, payload)) = data.split_first() {
        if let Some(e) = decode_example(payload, size as usize) {
            let mut out = Vec::new();
            encode_example(&e, &mut out);
            assert_eq!(decode_example(&out, size as usize), Some(e));
        }
    }
    if let Ok(reader) = RecordReader::new(data) {
        for r in reader {
            if r.is_err() {
                break;
            }
        }
    }
});
