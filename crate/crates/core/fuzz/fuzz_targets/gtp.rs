#![no_main]

use libfuzzer_sys::fuzz_target;
use tengen::interface::{GtpSession, RandomEngine};

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let mut s = GtpSession::new(Box::new(RandomEngine::new(0)), 9, 7.5, 0);
    for line in text.lines().take(200) {
        if let Some(reply) = s.handle_line(line) {
            assert!(reply.starts_with('=') || reply.starts_with('?'));
            assert!(reply.ends_with("\n\n"));
        }
        if s.is_done() {
            break;
        }
    }
});
