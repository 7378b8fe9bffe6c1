#![no_main]

use helprank::text::{lexicon_sentiment, Lexicon};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(lex) = Lexicon::from_reader(data) {
        let s = lexicon_sentiment("good bad great awful not very nice", &lex);
        assert!(s.is_finite());
    }
});
