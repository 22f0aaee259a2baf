#![no_main]

use libfuzzer_sys::fuzz_target;
use thinkflow::evalbench::{extract_answer, strip_think};

fuzz_target!(|input: &str| {
    let once = strip_think(input);
    assert!(!once.contains("<think>"));
    assert_eq!(strip_think(&once), once);
    let _ = extract_answer(&once);
});
