#![no_main]

use libfuzzer_sys::fuzz_target;
use thinkflow::cli::RunConfig;

fuzz_target!(|input: &str| {
    if let Ok(config) = RunConfig::parse(input) {
        let echoed = RunConfig::parse(&config.to_toml()).expect("echo parses");
        assert_eq!(echoed, config);
    }
});
