#![no_main]

use libfuzzer_sys::fuzz_target;
use thinkflow::evalbench::parse_responses;

fuzz_target!(|input: &str| {
    let _ = parse_responses(input, "fuzz");
});
