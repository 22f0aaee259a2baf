#![no_main]

use libfuzzer_sys::fuzz_target;
use thinkflow::corpus::parse_chunks;

fuzz_target!(|input: &str| {
    if let Ok(chunks) = parse_chunks(input) {
        for c in chunks {
            assert_eq!(c.text.chars().count(), c.end - c.start);
        }
    }
});
