use std::borrow::Cow;
use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};

use super::TextError;

const BUNDLED_EXCEPTIONS: &str = include_str!("../../data/lemmas.tsv");

/// Maps a lowercase surface word to its lemma.
pub trait Lemmatizer: Send + Sync {
    fn lemmatize<'a>(&self, word: &'a str) -> Cow<'a, str>;
}

/// Leaves words untouched.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityLemmatizer;

impl Lemmatizer for IdentityLemmatizer {
    fn lemmatize<'a>(&self, word: &'a str) -> Cow<'a, str> {
        Cow::Borrowed(word)
    }
}

/// Noun lemmatizer: exception table first, plural suffix rules otherwise.
#[derive(Debug, Clone)]
pub struct DictionaryLemmatizer {
    exceptions: HashMap<String, String>,
}

impl Default for DictionaryLemmatizer {
    fn default() -> Self {
        Self::from_reader(BUNDLED_EXCEPTIONS.as_bytes()).expect("bundled lemma table parses")
    }
}

impl DictionaryLemmatizer {
    /// Reads `surface<TAB>lemma` lines; `#` starts a comment line.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self, TextError> {
        let mut exceptions = HashMap::new();
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let line = line.map_err(|e| TextError::LemmaTable {
                line: idx + 1,
                reason: e.to_string(),
            })?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (surface, lemma) = line.split_once('\t').ok_or(TextError::LemmaTable {
                line: idx + 1,
                reason: "expected surface<TAB>lemma".into(),
            })?;
            exceptions.insert(surface.trim().to_lowercase(), lemma.trim().to_lowercase());
        }
        Ok(Self { exceptions })
    }

    fn strip_plural(word: &str) -> Option<String> {
        let n = word.chars().count();
        if n <= 3 || !word.is_ascii() {
            return None;
        }
        if let Some(stem) = word.strip_suffix("ies") {
            if n > 4 {
                return Some(format!("{stem}y"));
            }
        }
        for suffix in ["sses", "xes", "zes", "ches", "shes"] {
            if word.ends_with(suffix) {
                return Some(word[..word.len() - 2].to_string());
            }
        }
        if word.ends_with('s')
            && !word.ends_with("ss")
            && !word.ends_with("us")
            && !word.ends_with("is")
        {
            return Some(word[..word.len() - 1].to_string());
        }
        None
    }
}

impl Lemmatizer for DictionaryLemmatizer {
    fn lemmatize<'a>(&self, word: &'a str) -> Cow<'a, str> {
        if let Some(l) = self.exceptions.get(word) {
            return Cow::Owned(l.clone());
        }
        match Self::strip_plural(word) {
            Some(s) => Cow::Owned(s),
            None => Cow::Borrowed(word),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plurals_and_exceptions() {
        let l = DictionaryLemmatizer::default();
        for (w, want) in [
            ("rooms", "room"),
            ("stories", "story"),
            ("beaches", "beach"),
            ("boxes", "box"),
            ("children", "child"),
            ("glass", "glass"),
            ("bus", "bus"),
            ("buses", "bus"),
            ("tennis", "tennis"),
            ("gas", "gas"),
            ("staff", "staff"),
        ] {
            assert_eq!(l.lemmatize(w), want, "{w}");
        }
    }

    #[test]
    fn malformed_table() {
        assert!(DictionaryLemmatizer::from_reader(&b"nolemma\n"[..]).is_err());
    }
}
