use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{DictionaryLemmatizer, Lemmatizer, TextError};

const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// Content tokens of one review plus its raw word count.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenList {
    pub tokens: Vec<String>,
    /// Whitespace-delimited words before any removal.
    pub raw_count: usize,
}

impl TokenList {
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopWords(HashSet<String>);

impl Default for StopWords {
    fn default() -> Self {
        Self::from_reader(BUNDLED_STOPWORDS.as_bytes()).expect("bundled stopword list")
    }
}

impl StopWords {
    /// One word per line; blank lines ignored.
    pub fn from_reader<R: Read>(reader: R) -> std::io::Result<Self> {
        let mut set = HashSet::new();
        for line in BufReader::new(reader).lines() {
            let w = line?.trim().to_lowercase();
            if !w.is_empty() {
                set.insert(w);
            }
        }
        Ok(Self(set))
    }

    pub fn from_path(path: &Path) -> Result<Self, TextError> {
        let io_err = |source| TextError::Io {
            path: path.display().to_string(),
            source,
        };
        let f = std::fs::File::open(path).map_err(io_err)?;
        Self::from_reader(f).map_err(io_err)
    }

    pub fn from_words<I: IntoIterator<Item = S>, S: AsRef<str>>(words: I) -> Self {
        Self(
            words
                .into_iter()
                .map(|w| w.as_ref().to_lowercase())
                .collect(),
        )
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Whitespace-delimited word count.
pub fn raw_word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Lowercase alphanumeric runs; apostrophes stay inside words.
pub(crate) fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !(c.is_alphanumeric() || is_apostrophe(c)))
        .map(|w| {
            w.trim_matches(is_apostrophe)
                .chars()
                .map(|c| if is_apostrophe(c) { '\'' } else { c })
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|w| !w.is_empty())
}

#[derive(Clone)]
pub struct Tokenizer {
    stopwords: StopWords,
    lemmatizer: Arc<dyn Lemmatizer>,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self::new(
            StopWords::default(),
            Arc::new(DictionaryLemmatizer::default()),
        )
    }
}

impl std::fmt::Debug for Tokenizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tokenizer")
            .field("stopwords", &self.stopwords.len())
            .finish_non_exhaustive()
    }
}

impl Tokenizer {
    pub fn new(stopwords: StopWords, lemmatizer: Arc<dyn Lemmatizer>) -> Self {
        Self {
            stopwords,
            lemmatizer,
        }
    }

    fn keep(&self, w: &str) -> bool {
        w.chars().count() > 2 && !self.stopwords.contains(w)
    }

    pub fn tokenize(&self, text: &str) -> TokenList {
        let mut tokens = Vec::new();
        for word in words(text) {
            if self.stopwords.contains(&word) {
                continue;
            }
            let bare: String = word.chars().filter(|&c| c != '\'').collect();
            if !self.keep(&bare) {
                continue;
            }
            let lemma = self.lemmatizer.lemmatize(&bare);
            if self.keep(&lemma) {
                tokens.push(lemma.into_owned());
            }
        }
        TokenList {
            tokens,
            raw_count: raw_word_count(text),
        }
    }
}

/// Tokenizes with the bundled lemmatizer and the given stopword list.
pub fn tokenize(text: &str, stopwords: &StopWords) -> TokenList {
    Tokenizer::new(stopwords.clone(), Arc::new(DictionaryLemmatizer::default())).tokenize(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_text() {
        let t = tokenize("", &StopWords::default());
        assert!(t.tokens.is_empty());
        assert_eq!(t.raw_count, 0);
    }

    #[test]
    fn drops_stopwords_and_short_words() {
        let t = tokenize("The room was OK!!", &StopWords::default());
        assert_eq!(t.tokens, vec!["room"]);
        // "The", "room", "was", "OK!!"
        assert_eq!(t.raw_count, 4);
    }

    #[test]
    fn repetition_is_preserved() {
        let t = tokenize("great great great", &StopWords::default());
        assert_eq!(t.tokens, vec!["great"; 3]);
        assert_eq!(t.raw_count, 3);
    }

    #[test]
    fn lemmatizes_and_strips_punctuation() {
        let t = tokenize("Rooms, beaches... and (children)!", &StopWords::default());
        assert_eq!(t.tokens, vec!["room", "beach", "child"]);
        let t = tokenize("We didn't like it", &StopWords::default());
        assert_eq!(t.tokens, vec!["like"]);
    }

    proptest! {
        #[test]
        fn never_emits_stopwords_or_short_tokens(text in ".{0,200}") {
            let sw = StopWords::default();
            let t = tokenize(&text, &sw);
            for tok in &t.tokens {
                prop_assert!(tok.chars().count() >= 3, "{tok:?}");
                prop_assert!(!sw.contains(tok), "{tok:?}");
            }
            prop_assert_eq!(t.raw_count, text.split_whitespace().count());
        }

        #[test]
        fn wordy_inputs(words in proptest::collection::vec("(the|a|is|ok|rooms|glass|[a-z]{1,7})", 0..30)) {
            let sw = StopWords::default();
            let text = words.join(" ");
            let t = tokenize(&text, &sw);
            prop_assert!(t.tokens.iter().all(|tok| tok.len() > 2 && !sw.contains(tok)));
        }
    }
}
