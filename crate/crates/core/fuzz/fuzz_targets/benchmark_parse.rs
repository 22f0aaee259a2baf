#![no_main]

use libfuzzer_sys::fuzz_target;
use thinkflow::evalbench::parse_benchmark;

fuzz_target!(|input: &str| {
    if let Ok(items) = parse_benchmark(input, "fuzz") {
        assert!(!items.is_empty());
        for item in items {
            assert_eq!(item.subject.level(), item.level);
        }
    }
});
