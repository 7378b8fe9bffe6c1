//! Document-frequency tables and the per-review mean TF/IDF score.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{TextError, TokenList};
use crate::corpus::Corpus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdfMode {
    /// ln(N / df)
    #[default]
    Plain,
    /// ln((N + 1) / (df + 1)) + 1
    Smoothed,
}

/// Which reviews count as documents when scoring a review.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DocUniverse {
    #[default]
    Corpus,
    /// Only the reviews of the same item.
    PerItem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TfIdfConfig {
    pub idf: IdfMode,
    pub universe: DocUniverse,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DocFreqTable {
    doc_count: usize,
    doc_freq: HashMap<String, u32>,
}

impl DocFreqTable {
    pub fn from_docs<'a>(docs: impl IntoIterator<Item = &'a TokenList>) -> Self {
        let mut table = DocFreqTable::default();
        for doc in docs {
            table.add(doc);
        }
        table
    }

    fn add(&mut self, doc: &TokenList) {
        self.doc_count += 1;
        let distinct: HashSet<&str> = doc.tokens.iter().map(String::as_str).collect();
        for t in distinct {
            *self.doc_freq.entry(t.to_string()).or_default() += 1;
        }
    }

    fn merge(mut self, other: DocFreqTable) -> DocFreqTable {
        self.doc_count += other.doc_count;
        for (t, df) in other.doc_freq {
            *self.doc_freq.entry(t).or_default() += df;
        }
        self
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn doc_freq(&self, term: &str) -> u32 {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, u32)> {
        self.doc_freq.iter().map(|(t, &df)| (t.as_str(), df))
    }

    /// Inverse document frequency; 0 for a term outside the table.
    pub fn idf(&self, term: &str, mode: IdfMode) -> f64 {
        let df = self.doc_freq(term);
        if df == 0 {
            return 0.0;
        }
        let n = self.doc_count as f64;
        let df = f64::from(df);
        match mode {
            IdfMode::Plain => (n / df).ln(),
            IdfMode::Smoothed => ((n + 1.0) / (df + 1.0)).ln() + 1.0,
        }
    }
}

/// Mean TF·IDF over the distinct terms of a review, where TF is the raw count of
/// the term within the review. An empty review scores 0.
pub fn mean_tfidf(tokens: &TokenList, table: &DocFreqTable, mode: IdfMode) -> f64 {
    if tokens.tokens.is_empty() {
        return 0.0;
    }
    let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
    for t in &tokens.tokens {
        *tf.entry(t.as_str()).or_default() += 1;
    }
    let total: f64 = tf
        .iter()
        .map(|(term, &count)| f64::from(count) * table.idf(term, mode))
        .sum();
    total / tf.len() as f64
}

/// Document frequencies for a corpus and the token lists of its reviews.
#[derive(Debug, Clone)]
pub struct TfIdfIndex {
    config: TfIdfConfig,
    global: DocFreqTable,
    per_item: BTreeMap<String, DocFreqTable>,
    item_of: Vec<String>,
}

/// Builds the index. `tokens[k]` belongs to `corpus.reviews()[k]`.
pub fn build_tfidf(
    corpus: &Corpus,
    tokens: &[TokenList],
    config: TfIdfConfig,
) -> Result<TfIdfIndex, TextError> {
    if corpus.is_empty() {
        return Err(TextError::EmptyCorpus);
    }
    if tokens.len() != corpus.len() {
        return Err(TextError::TokenCount {
            expected: corpus.len(),
            got: tokens.len(),
        });
    }
    let global = tokens
        .par_iter()
        .fold(DocFreqTable::default, |mut acc, doc| {
            acc.add(doc);
            acc
        })
        .reduce(DocFreqTable::default, DocFreqTable::merge);
    let per_item = match config.universe {
        DocUniverse::Corpus => BTreeMap::new(),
        DocUniverse::PerItem => corpus
            .by_item()
            .iter()
            .map(|(item, positions)| {
                (
                    item.clone(),
                    DocFreqTable::from_docs(positions.iter().map(|&p| &tokens[p])),
                )
            })
            .collect(),
    };
    Ok(TfIdfIndex {
        config,
        global,
        per_item,
        item_of: corpus.reviews().iter().map(|r| r.item_id.clone()).collect(),
    })
}

impl TfIdfIndex {
    pub fn config(&self) -> TfIdfConfig {
        self.config
    }

    pub fn global(&self) -> &DocFreqTable {
        &self.global
    }

    /// The document table used for reviews of `item_id`.
    pub fn table_for(&self, item_id: &str) -> &DocFreqTable {
        match self.config.universe {
            DocUniverse::Corpus => &self.global,
            DocUniverse::PerItem => self.per_item.get(item_id).unwrap_or(&self.global),
        }
    }

    /// Mean TF/IDF of any token list scored as a review of `item_id`.
    pub fn score(&self, tokens: &TokenList, item_id: &str) -> f64 {
        mean_tfidf(tokens, self.table_for(item_id), self.config.idf)
    }

    /// Mean TF/IDF of the review at corpus position `pos`.
    pub fn score_review(&self, pos: usize, tokens: &TokenList) -> f64 {
        self.score(tokens, &self.item_of[pos])
    }
}
