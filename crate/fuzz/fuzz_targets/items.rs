#![no_main]

use helprank::corpus::{read_items, InputFormat, MalformedPolicy};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    for format in [InputFormat::JsonLines, InputFormat::Csv] {
        let _ = read_items(data, format, MalformedPolicy::SkipAndLog);
    }
});
