#![no_main]

use std::sync::Arc;

use helprank::text::{
    polarity, raw_word_count, DictionaryLemmatizer, LexiconScorer, SentimentScorer, StopWords,
    Tokenizer,
};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let tok = Tokenizer::new(
            StopWords::default(),
            Arc::new(DictionaryLemmatizer::default()),
        );
        let t = tok.tokenize(text);
        assert_eq!(t.raw_count, raw_word_count(text));
        let scorer = LexiconScorer::default();
        let p = polarity(text, &[&scorer as &dyn SentimentScorer]).expect("one scorer");
        assert!((1.0..=5.0).contains(&p));
    }
});
