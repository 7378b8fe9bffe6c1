//! Review records, the indexed corpus they form, and dataset preparation.
//!
//! A [`Corpus`] is immutable once built: reviews keep their input order and the
//! per-user / per-item indexes partition the review positions exactly.

mod filter;
mod io;
mod stats;
mod tags;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use filter::filter_corpus;
pub use io::{
    load_corpus, read_items, read_reviews, write_reviews, InputFormat, LoadedData, MalformedPolicy,
    ReadOutcome, SkippedRecord,
};
pub use stats::{descriptive_stats, ReviewMeasures, StatRow, StatsReport, StdEstimator};
pub use tags::{CategoryPreset, FOOD_TAGS, HOTEL_TAGS};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("duplicate review id {0:?}")]
    DuplicateReview(String),
    #[error("tag set is empty")]
    EmptyTagSet,
    #[error("min_reviews_per_user must be at least 1")]
    InvalidMinReviews,
    #[error("corpus is empty")]
    Empty,
    #[error("measure columns cover {got} reviews, corpus has {expected}")]
    MeasureLength { expected: usize, got: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// One ingested review with its rating and reader feedback.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawReview {
    pub review_id: String,
    pub user_id: String,
    pub item_id: String,
    pub stars: u8,
    pub text: String,
    pub votes_useful: u32,
    pub votes_funny: u32,
    pub votes_cool: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<String>,
}

impl RawReview {
    /// Sum of "useful", "funny" and "cool" votes.
    pub fn total_votes(&self) -> u64 {
        u64::from(self.votes_useful) + u64::from(self.votes_funny) + u64::from(self.votes_cool)
    }
}

/// A business / item with its category tags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawItem {
    pub item_id: String,
    pub category_tags: BTreeSet<String>,
}

/// Reviews plus user and item indexes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    reviews: Vec<RawReview>,
    by_user: BTreeMap<String, Vec<usize>>,
    by_item: BTreeMap<String, Vec<usize>>,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate review ids and out-of-range stars.
    pub fn from_reviews(reviews: Vec<RawReview>) -> Result<Self, CorpusError> {
        let mut seen = BTreeSet::new();
        let mut by_user: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut by_item: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (pos, r) in reviews.iter().enumerate() {
            if !(1..=5).contains(&r.stars) {
                return Err(CorpusError::Malformed {
                    line: pos + 1,
                    reason: format!("stars {} outside 1..=5", r.stars),
                });
            }
            if !seen.insert(r.review_id.as_str()) {
                return Err(CorpusError::DuplicateReview(r.review_id.clone()));
            }
            by_user.entry(r.user_id.clone()).or_default().push(pos);
            by_item.entry(r.item_id.clone()).or_default().push(pos);
        }
        Ok(Self {
            reviews,
            by_user,
            by_item,
        })
    }

    pub fn empty() -> Self {
        Self {
            reviews: Vec::new(),
            by_user: BTreeMap::new(),
            by_item: BTreeMap::new(),
        }
    }

    pub fn reviews(&self) -> &[RawReview] {
        &self.reviews
    }

    pub fn len(&self) -> usize {
        self.reviews.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reviews.is_empty()
    }

    pub fn user_count(&self) -> usize {
        self.by_user.len()
    }

    pub fn item_count(&self) -> usize {
        self.by_item.len()
    }

    pub fn users(&self) -> impl Iterator<Item = &str> {
        self.by_user.keys().map(String::as_str)
    }

    pub fn items(&self) -> impl Iterator<Item = &str> {
        self.by_item.keys().map(String::as_str)
    }

    /// Review positions per user, in corpus order.
    pub fn by_user(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.by_user
    }

    /// Review positions per item, in corpus order.
    pub fn by_item(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.by_item
    }

    pub fn user_reviews(&self, user_id: &str) -> &[usize] {
        self.by_user.get(user_id).map_or(&[], Vec::as_slice)
    }

    pub fn item_reviews(&self, item_id: &str) -> &[usize] {
        self.by_item.get(item_id).map_or(&[], Vec::as_slice)
    }

    /// Sub-corpus of the given positions, kept in the given order.
    pub fn subset(&self, positions: &[usize]) -> Corpus {
        let reviews = positions.iter().map(|&p| self.reviews[p].clone()).collect();
        // ids were unique in self, so they stay unique in any subset
        Corpus::from_reviews(reviews).expect("subset of a valid corpus is valid")
    }

    pub fn into_reviews(self) -> Vec<RawReview> {
        self.reviews
    }
}


#[cfg(test)]
mod tests {
    use super::test_support::review;
    use super::*;

    #[test]
    fn indexes_partition_reviews() {
        let c = Corpus::from_reviews(vec![
            review("r1", "u1", "i1", 4, "a"),
            review("r2", "u2", "i1", 3, "b"),
            review("r3", "u1", "i2", 5, "c"),
        ])
        .unwrap();
        assert_eq!(c.user_count(), 2);
        assert_eq!(c.item_count(), 2);
        assert_eq!(c.user_reviews("u1"), &[0, 2]);
        assert_eq!(c.item_reviews("i1"), &[0, 1]);
        let mut all: Vec<usize> = c.by_user().values().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2]);
    }

    #[test]
    fn rejects_duplicate_ids_and_bad_stars() {
        let dup = Corpus::from_reviews(vec![
            review("r1", "u1", "i1", 4, ""),
            review("r1", "u2", "i1", 4, ""),
        ]);
        assert!(matches!(dup, Err(CorpusError::DuplicateReview(_))));
        let bad = Corpus::from_reviews(vec![review("r1", "u1", "i1", 0, "")]);
        assert!(matches!(bad, Err(CorpusError::Malformed { .. })));
    }
}
