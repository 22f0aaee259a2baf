#![no_main]

use libfuzzer_sys::fuzz_target;
use thinkflow::evalbench::{parse_caben_csv, Subject};

fuzz_target!(|input: &str| {
    let _ = parse_caben_csv(input, Subject::I3, "I3.csv");
});
