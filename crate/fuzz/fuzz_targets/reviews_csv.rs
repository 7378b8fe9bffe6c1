#![no_main]

use helprank::corpus::{read_reviews, InputFormat, MalformedPolicy};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    for policy in [MalformedPolicy::SkipAndLog, MalformedPolicy::FailFast] {
        if let Ok(out) = read_reviews(data, InputFormat::Csv, policy) {
            assert!(out.records.iter().all(|r| (1..=5).contains(&r.stars)));
        }
    }
});
