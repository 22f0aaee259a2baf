#![no_main]

use libfuzzer_sys::fuzz_target;
use thinkflow::cli::parse_accuracies;

fuzz_target!(|input: &str| {
    if let Ok(acc) = parse_accuracies(input) {
        assert!(acc.values().all(|a| (0.0..=100.0).contains(a)));
    }
});
