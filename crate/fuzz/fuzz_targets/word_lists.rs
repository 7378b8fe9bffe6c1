#![no_main]

use helprank::text::{DictionaryLemmatizer, StopWords};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = StopWords::from_reader(data);
    let _ = DictionaryLemmatizer::from_reader(data);
});
