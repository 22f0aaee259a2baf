#![no_main]

use libfuzzer_sys::fuzz_target;
use thinkflow::cli::ProviderSpec;

fuzz_target!(|input: &str| {
    let _ = input.parse::<ProviderSpec>();
});
