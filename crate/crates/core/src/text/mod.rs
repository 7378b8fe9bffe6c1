//! Tokenization, TF/IDF indexing and polarity scoring of review texts.

mod lemma;
mod sentiment;
mod tfidf;
mod tokenize;

use thiserror::Error;

pub use lemma::{DictionaryLemmatizer, IdentityLemmatizer, Lemmatizer};
pub use sentiment::{
    lexicon_sentiment, polarity, rescale_polarity, Lexicon, LexiconScorer, SentimentScorer,
};
pub use tfidf::{
    build_tfidf, mean_tfidf, DocFreqTable, DocUniverse, IdfMode, TfIdfConfig, TfIdfIndex,
};
pub use tokenize::{raw_word_count, tokenize, StopWords, TokenList, Tokenizer};

#[derive(Debug, Error)]
pub enum TextError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("lexicon line {line}: {reason}")]
    Lexicon { line: usize, reason: String },
    #[error("lemma table line {line}: {reason}")]
    LemmaTable { line: usize, reason: String },
    #[error("at least one sentiment scorer is required")]
    NoScorers,
    #[error("cannot index an empty corpus")]
    EmptyCorpus,
    #[error("token lists cover {got} reviews, corpus has {expected}")]
    TokenCount { expected: usize, got: usize },
}
