#![no_main]

use libfuzzer_sys::fuzz_target;
use thinkflow::ragflow::{build_prompt, PromptTemplate};

fuzz_target!(|input: &str| {
    if let Ok(t) = PromptTemplate::parse(input) {
        let options: Vec<String> = ["{context}", "b", "c", "d"].map(String::from).to_vec();
        let prompt = build_prompt(&t, "{question}", &options, &["{options}"]).unwrap();
        assert!(prompt.contains("A. {context}"));
    }
});
