//! The dependent variable and the eleven content features of each review.
//!
//! Every feature passes through the same normalizer `f(x) = log(x+1) / (1 + log(x+1))`,
//! which maps `[0, inf)` onto `[0, 1)`. Deviation features compare a review's
//! normalized length, rating and polarity against the mean of its author's
//! reviews and against the mean of its item's reviews.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, RawReview, ReviewMeasures};
use crate::text::{
    build_tfidf, polarity, SentimentScorer, TextError, TfIdfConfig, TfIdfIndex, TokenList,
    Tokenizer,
};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("normalizer input must be a non-negative number, got {0}")]
    NegativeInput(f64),
    #[error("no aggregate for {kind} {id:?}")]
    MissingAggregate { kind: &'static str, id: String },
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("feature csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("feature json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogBase {
    #[default]
    Natural,
    Ten,
}

impl LogBase {
    fn log1p(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln_1p(),
            LogBase::Ten => x.ln_1p() / std::f64::consts::LN_10,
        }
    }
}

/// `log(x+1) / (1 + log(x+1))` for a given log base.
pub fn squash_with(x: f64, base: LogBase) -> Result<f64, FeatureError> {
    if !(x >= 0.0) || x.is_infinite() {
        return Err(FeatureError::NegativeInput(x));
    }
    let l = base.log1p(x);
    Ok(l / (1.0 + l))
}

/// Natural-log normalizer onto `[0, 1)`.
pub fn squash(x: f64) -> Result<f64, FeatureError> {
    squash_with(x, LogBase::Natural)
}

fn norm(x: f64, base: LogBase) -> f64 {
    squash_with(x, base).expect("normalizer inputs are non-negative by construction")
}

/// Normalized total vote count.
pub fn perceived_helpfulness(r: &RawReview) -> f64 {
    perceived_helpfulness_with(r, LogBase::Natural)
}

pub fn perceived_helpfulness_with(r: &RawReview, base: LogBase) -> f64 {
    norm(r.total_votes() as f64, base)
}

/// Rating-polarity agreement on the rating scale: `5 - |stars - polarity|`.
pub fn raw_coherence(stars: u8, polarity: f64) -> f64 {
    5.0 - (f64::from(stars) - polarity).abs()
}

/// The eleven independent variables, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Rat,
    Len,
    Ugr,
    Pol,
    Coh,
    DLenRu,
    DLenRi,
    DRatRu,
    DRatRi,
    DPolRu,
    DPolRi,
}

impl Feature {
    pub const ALL: [Feature; 11] = [
        Feature::Rat,
        Feature::Len,
        Feature::Ugr,
        Feature::Pol,
        Feature::Coh,
        Feature::DLenRu,
        Feature::DLenRi,
        Feature::DRatRu,
        Feature::DRatRi,
        Feature::DPolRu,
        Feature::DPolRi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Rat => "rat",
            Feature::Len => "len",
            Feature::Ugr => "ugr",
            Feature::Pol => "pol",
            Feature::Coh => "coh",
            Feature::DLenRu => "d_len_ru",
            Feature::DLenRi => "d_len_ri",
            Feature::DRatRu => "d_rat_ru",
            Feature::DRatRi => "d_rat_ri",
            Feature::DPolRu => "d_pol_ru",
            Feature::DPolRi => "d_pol_ri",
        }
    }

    pub fn from_name(name: &str) -> Option<Feature> {
        Feature::ALL.into_iter().find(|f| f.name() == name)
    }
}

impl std::fmt::Display for Feature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReviewFeatures {
    pub rat: f64,
    pub len: f64,
    pub ugr: f64,
    pub pol: f64,
    pub coh: f64,
    pub d_len_ru: f64,
    pub d_len_ri: f64,
    pub d_rat_ru: f64,
    pub d_rat_ri: f64,
    pub d_pol_ru: f64,
    pub d_pol_ri: f64,
    pub helpfulness: f64,
}

impl ReviewFeatures {
    pub fn get(&self, f: Feature) -> f64 {
        match f {
            Feature::Rat => self.rat,
            Feature::Len => self.len,
            Feature::Ugr => self.ugr,
            Feature::Pol => self.pol,
            Feature::Coh => self.coh,
            Feature::DLenRu => self.d_len_ru,
            Feature::DLenRi => self.d_len_ri,
            Feature::DRatRu => self.d_rat_ru,
            Feature::DRatRi => self.d_rat_ri,
            Feature::DPolRu => self.d_pol_ru,
            Feature::DPolRi => self.d_pol_ri,
        }
    }

    /// Values of `features`, in that order.
    pub fn select(&self, features: &[Feature]) -> Vec<f64> {
        features.iter().map(|&f| self.get(f)).collect()
    }

    /// The eleven features followed by helpfulness.
    pub fn to_array(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        for (slot, f) in out.iter_mut().zip(Feature::ALL) {
            *slot = self.get(f);
        }
        out[11] = self.helpfulness;
        out
    }
}

/// Whether a review counts in its own user/item mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeviationMode {
    #[default]
    IncludeSelf,
    LeaveOneOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub log_base: LogBase,
    pub deviation: DeviationMode,
    pub tfidf: TfIdfConfig,
}

/// Raw per-review signals before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReviewSignals {
    pub raw_words: usize,
    pub mean_tfidf: f64,
    /// On [1, 5].
    pub polarity: f64,
}

/// Normalized LEN, RAT and POL of one review.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseValues {
    pub len: f64,
    pub rat: f64,
    pub pol: f64,
}

/// Means of normalized LEN/RAT/POL over one user's or one item's reviews.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub id: String,
    pub count: usize,
    pub mean_len: f64,
    pub mean_rat: f64,
    pub mean_pol: f64,
}

pub type UserAggregate = Aggregate;
pub type ItemAggregate = Aggregate;

impl Aggregate {
    /// Mean for a review of this group: `member` says whether the review was
    /// part of the reviews the aggregate was built from.
    fn mean_for(&self, own: BaseValues, member: bool, mode: DeviationMode) -> Option<BaseValues> {
        let n = self.count as f64;
        let means = BaseValues {
            len: self.mean_len,
            rat: self.mean_rat,
            pol: self.mean_pol,
        };
        let adjust = |mean: f64, x: f64| -> Option<f64> {
            match (member, mode) {
                (true, DeviationMode::IncludeSelf) | (false, DeviationMode::LeaveOneOut) => {
                    Some(mean)
                }
                (true, DeviationMode::LeaveOneOut) if self.count <= 1 => Some(x),
                (true, DeviationMode::LeaveOneOut) => Some(mean + (mean - x) / (n - 1.0)),
                (false, DeviationMode::IncludeSelf) => Some(mean + (x - mean) / (n + 1.0)),
            }
        };
        Some(BaseValues {
            len: adjust(means.len, own.len)?,
            rat: adjust(means.rat, own.rat)?,
            pol: adjust(means.pol, own.pol)?,
        })
    }
}

fn aggregate_groups(
    corpus: &Corpus,
    groups: &BTreeMap<String, Vec<usize>>,
    base: &[BaseValues],
) -> BTreeMap<String, Aggregate> {
    groups
        .par_iter()
        .map(|(id, positions)| {
            // canonical summation order keeps results independent of corpus order
            let mut ordered = positions.clone();
            ordered.sort_by(|&a, &b| {
                corpus.reviews()[a]
                    .review_id
                    .cmp(&corpus.reviews()[b].review_id)
            });
            // shifted by the first value so that equal values average exactly
            let n = ordered.len() as f64;
            let first = base[ordered[0]];
            let (mut l, mut r, mut p) = (0.0, 0.0, 0.0);
            for &pos in &ordered {
                l += base[pos].len - first.len;
                r += base[pos].rat - first.rat;
                p += base[pos].pol - first.pol;
            }
            (
                id.clone(),
                Aggregate {
                    id: id.clone(),
                    count: ordered.len(),
                    mean_len: first.len + l / n,
                    mean_rat: first.rat + r / n,
                    mean_pol: first.pol + p / n,
                },
            )
        })
        .collect()
}

/// Per-user and per-item means of the normalized base values.
pub fn compute_aggregates(
    corpus: &Corpus,
    base: &[BaseValues],
) -> (
    BTreeMap<String, UserAggregate>,
    BTreeMap<String, ItemAggregate>,
) {
    (
        aggregate_groups(corpus, corpus.by_user(), base),
        aggregate_groups(corpus, corpus.by_item(), base),
    )
}

fn base_values(stars: u8, signals: &ReviewSignals, b: LogBase) -> BaseValues {
    BaseValues {
        len: norm(signals.raw_words as f64, b),
        rat: norm(f64::from(stars), b),
        pol: norm(signals.polarity, b),
    }
}

/// Assembles one feature vector from normalized values and group means.
pub fn compute_feature_vector(
    review: &RawReview,
    signals: &ReviewSignals,
    user_mean: BaseValues,
    item_mean: BaseValues,
    log_base: LogBase,
) -> ReviewFeatures {
    let own = base_values(review.stars, signals, log_base);
    let dev = |x: f64, m: f64| norm((x - m).abs(), log_base);
    ReviewFeatures {
        rat: own.rat,
        len: own.len,
        ugr: norm(signals.mean_tfidf, log_base),
        pol: own.pol,
        coh: norm(1.0 - (own.rat - own.pol).abs(), log_base),
        d_len_ru: dev(own.len, user_mean.len),
        d_len_ri: dev(own.len, item_mean.len),
        d_rat_ru: dev(own.rat, user_mean.rat),
        d_rat_ri: dev(own.rat, item_mean.rat),
        d_pol_ru: dev(own.pol, user_mean.pol),
        d_pol_ri: dev(own.pol, item_mean.pol),
        helpfulness: perceived_helpfulness_with(review, log_base),
    }
}

/// Fitted feature pipeline: token lists, TF/IDF index, signals and aggregates of a corpus.
pub struct FeatureExtractor {
    config: FeatureConfig,
    tokenizer: Tokenizer,
    scorers: Vec<Arc<dyn SentimentScorer>>,
    corpus: Corpus,
    index: TfIdfIndex,
    signals: Vec<ReviewSignals>,
    base: Vec<BaseValues>,
    users: BTreeMap<String, UserAggregate>,
    items: BTreeMap<String, ItemAggregate>,
    positions: HashMap<String, usize>,
}

impl std::fmt::Debug for FeatureExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FeatureExtractor")
            .field("config", &self.config)
            .field("reviews", &self.corpus.len())
            .finish_non_exhaustive()
    }
}

impl FeatureExtractor {
    pub fn fit(
        corpus: &Corpus,
        tokenizer: Tokenizer,
        scorers: Vec<Arc<dyn SentimentScorer>>,
        config: FeatureConfig,
    ) -> Result<Self, FeatureError> {
        if scorers.is_empty() {
            return Err(TextError::NoScorers.into());
        }
        let score_refs: Vec<&dyn SentimentScorer> = scorers.iter().map(|s| s.as_ref()).collect();
        let prepared: Vec<(TokenList, f64)> = corpus
            .reviews()
            .par_iter()
            .map(|r| {
                let pol = polarity(&r.text, &score_refs).expect("scorers checked non-empty");
                (tokenizer.tokenize(&r.text), pol)
            })
            .collect();
        let (tokens, polarities): (Vec<TokenList>, Vec<f64>) = prepared.into_iter().unzip();
        let index = build_tfidf(corpus, &tokens, config.tfidf)?;
        let signals: Vec<ReviewSignals> = tokens
            .par_iter()
            .zip(polarities.par_iter())
            .enumerate()
            .map(|(pos, (t, &pol))| ReviewSignals {
                raw_words: t.raw_count,
                mean_tfidf: index.score_review(pos, t),
                polarity: pol,
            })
            .collect();
        let base: Vec<BaseValues> = corpus
            .reviews()
            .iter()
            .zip(&signals)
            .map(|(r, s)| base_values(r.stars, s, config.log_base))
            .collect();
        let (users, items) = compute_aggregates(corpus, &base);
        let positions = corpus
            .reviews()
            .iter()
            .enumerate()
            .map(|(p, r)| (r.review_id.clone(), p))
            .collect();
        drop(score_refs);
        Ok(Self {
            config,
            tokenizer,
            scorers,
            corpus: corpus.clone(),
            index,
            signals,
            base,
            users,
            items,
            positions,
        })
    }

    pub fn config(&self) -> FeatureConfig {
        self.config
    }

    pub fn index(&self) -> &TfIdfIndex {
        &self.index
    }

    pub fn signals(&self) -> &[ReviewSignals] {
        &self.signals
    }

    /// Normalized LEN/RAT/POL of each review, in corpus order.
    pub fn base_values(&self) -> &[BaseValues] {
        &self.base
    }

    pub fn user_aggregates(&self) -> &BTreeMap<String, UserAggregate> {
        &self.users
    }

    pub fn item_aggregates(&self) -> &BTreeMap<String, ItemAggregate> {
        &self.items
    }

    /// Raw length, polarity and coherence columns for descriptive statistics.
    pub fn measures(&self) -> ReviewMeasures {
        ReviewMeasures {
            length: self.signals.iter().map(|s| s.raw_words as f64).collect(),
            polarity: self.signals.iter().map(|s| s.polarity).collect(),
            coherence: self
                .corpus
                .reviews()
                .iter()
                .zip(&self.signals)
                .map(|(r, s)| raw_coherence(r.stars, s.polarity))
                .collect(),
        }
    }

    fn signals_for(&self, review: &RawReview) -> Result<ReviewSignals, FeatureError> {
        if let Some(&p) = self.positions.get(&review.review_id) {
            if self.corpus.reviews()[p] == *review {
                return Ok(self.signals[p]);
            }
        }
        let refs: Vec<&dyn SentimentScorer> = self.scorers.iter().map(|s| s.as_ref()).collect();
        let tokens = self.tokenizer.tokenize(&review.text);
        Ok(ReviewSignals {
            raw_words: tokens.raw_count,
            mean_tfidf: self.index.score(&tokens, &review.item_id),
            polarity: polarity(&review.text, &refs)?,
        })
    }

    /// Feature vector of any review, scored against the fitted corpus.
    ///
    /// A review outside the fitted corpus whose user or item is unknown gets a
    /// zero deviation on that side in include-self mode (the group would hold
    /// only the review itself) and an error in leave-one-out mode.
    pub fn features_for(&self, review: &RawReview) -> Result<ReviewFeatures, FeatureError> {
        let member = self
            .positions
            .get(&review.review_id)
            .is_some_and(|&p| self.corpus.reviews()[p] == *review);
        let signals = self.signals_for(review)?;
        let own = base_values(review.stars, &signals, self.config.log_base);
        let mean =
            |map: &BTreeMap<String, Aggregate>, kind: &'static str, id: &str| match map.get(id) {
                Some(agg) => agg
                    .mean_for(own, member, self.config.deviation)
                    .ok_or_else(|| FeatureError::MissingAggregate {
                        kind,
                        id: id.to_string(),
                    }),
                None if !member && self.config.deviation == DeviationMode::IncludeSelf => Ok(own),
                None => Err(FeatureError::MissingAggregate {
                    kind,
                    id: id.to_string(),
                }),
            };
        let user_mean = mean(&self.users, "user", &review.user_id)?;
        let item_mean = mean(&self.items, "item", &review.item_id)?;
        Ok(compute_feature_vector(
            review,
            &signals,
            user_mean,
            item_mean,
            self.config.log_base,
        ))
    }

    /// Feature matrix of the fitted corpus, in corpus order.
    pub fn matrix(&self) -> Result<FeatureMatrix, FeatureError> {
        let rows = self
            .corpus
            .reviews()
            .par_iter()
            .map(|r| {
                Ok(FeatureRow {
                    review_id: r.review_id.clone(),
                    user_id: r.user_id.clone(),
                    item_id: r.item_id.clone(),
                    features: self.features_for(r)?,
                })
            })
            .collect::<Result<Vec<_>, FeatureError>>()?;
        Ok(FeatureMatrix { rows })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub review_id: String,
    pub user_id: String,
    pub item_id: String,
    pub features: ReviewFeatures,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub rows: Vec<FeatureRow>,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    review_id: String,
    user_id: String,
    item_id: String,
    rat: f64,
    len: f64,
    ugr: f64,
    pol: f64,
    coh: f64,
    d_len_ru: f64,
    d_len_ri: f64,
    d_rat_ru: f64,
    d_rat_ri: f64,
    d_pol_ru: f64,
    d_pol_ri: f64,
    helpfulness: f64,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, f: Feature) -> Vec<f64> {
        self.rows.iter().map(|r| r.features.get(f)).collect()
    }

    pub fn helpfulness(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.features.helpfulness).collect()
    }

    /// Rows restricted to `features`, one `Vec` per review.
    pub fn design(&self, features: &[Feature]) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| r.features.select(features))
            .collect()
    }

    /// CSV with ids followed by the twelve value columns, full precision.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), FeatureError> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.rows {
            let f = &r.features;
            w.serialize(CsvRow {
                review_id: r.review_id.clone(),
                user_id: r.user_id.clone(),
                item_id: r.item_id.clone(),
                rat: f.rat,
                len: f.len,
                ugr: f.ugr,
                pol: f.pol,
                coh: f.coh,
                d_len_ru: f.d_len_ru,
                d_len_ri: f.d_len_ri,
                d_rat_ru: f.d_rat_ru,
                d_rat_ri: f.d_rat_ri,
                d_pol_ru: f.d_pol_ru,
                d_pol_ri: f.d_pol_ri,
                helpfulness: f.helpfulness,
            })?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, FeatureError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let rows = rdr
            .deserialize::<CsvRow>()
            .map(|row| {
                let c = row?;
                Ok(FeatureRow {
                    review_id: c.review_id,
                    user_id: c.user_id,
                    item_id: c.item_id,
                    features: ReviewFeatures {
                        rat: c.rat,
                        len: c.len,
                        ugr: c.ugr,
                        pol: c.pol,
                        coh: c.coh,
                        d_len_ru: c.d_len_ru,
                        d_len_ri: c.d_len_ri,
                        d_rat_ru: c.d_rat_ru,
                        d_rat_ri: c.d_rat_ri,
                        d_pol_ru: c.d_pol_ru,
                        d_pol_ri: c.d_pol_ri,
                        helpfulness: c.helpfulness,
                    },
                })
            })
            .collect::<Result<Vec<_>, FeatureError>>()?;
        Ok(FeatureMatrix { rows })
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<(), FeatureError> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_support::review;
    use crate::text::LexiconScorer;
    use proptest::prelude::*;

    const LN2_SQUASH: f64 = std::f64::consts::LN_2 / (1.0 + std::f64::consts::LN_2);

    fn extractor(c: &Corpus, config: FeatureConfig) -> FeatureExtractor {
        FeatureExtractor::fit(
            c,
            Tokenizer::default(),
            vec![Arc::new(LexiconScorer::default())],
            config,
        )
        .unwrap()
    }

    #[test]
    fn squash_values() {
        assert_eq!(squash(0.0).unwrap(), 0.0);
        assert!((squash(1.0).unwrap() - LN2_SQUASH).abs() < 1e-15);
        assert!((squash(1.0).unwrap() - 0.40938).abs() < 1e-5);
        assert!(squash(10.0).unwrap() < squash(100.0).unwrap());
        assert!(matches!(squash(-1.0), Err(FeatureError::NegativeInput(_))));
        assert!(squash(f64::NAN).is_err());
        let ten = squash_with(9.0, LogBase::Ten).unwrap();
        assert!((ten - 0.5).abs() < 1e-15);
    }

    #[test]
    fn helpfulness_from_votes() {
        let mut r = review("r", "u", "i", 4, "x");
        assert_eq!(perceived_helpfulness(&r), 0.0);
        r.votes_useful = 2;
        r.votes_funny = 1;
        assert_eq!(perceived_helpfulness(&r), squash(3.0).unwrap());
        let mut top = r.clone();
        top.votes_useful = 559;
        top.votes_funny = 0;
        let mut median = r.clone();
        median.votes_useful = 3;
        median.votes_funny = 0;
        let (a, b) = (perceived_helpfulness(&top), perceived_helpfulness(&median));
        assert!(a > b && a < 1.0 && b < 1.0);
    }

    #[test]
    fn singleton_and_pair_aggregates() {
        let c = Corpus::from_reviews(vec![
            review("r1", "u1", "i1", 4, ""),
            review("r2", "u2", "i1", 4, ""),
            review("r3", "u2", "i2", 4, ""),
        ])
        .unwrap();
        let base = vec![
            BaseValues {
                len: 0.3,
                rat: 0.6,
                pol: 0.5,
            },
            BaseValues {
                len: 0.4,
                rat: 0.6,
                pol: 0.5,
            },
            BaseValues {
                len: 0.6,
                rat: 0.6,
                pol: 0.5,
            },
        ];
        let (users, items) = compute_aggregates(&c, &base);
        assert_eq!(users["u1"].mean_len, 0.3);
        assert_eq!(users["u1"].count, 1);
        assert!((users["u2"].mean_len - 0.5).abs() < 1e-15);
        assert!((items["i1"].mean_len - 0.35).abs() < 1e-15);
    }

    #[test]
    fn coherence_is_max_when_rating_matches_polarity() {
        let r = review("r", "u", "i", 3, "");
        // polarity 3 equals the rating exactly
        let s = ReviewSignals {
            raw_words: 5,
            mean_tfidf: 0.1,
            polarity: 3.0,
        };
        let own = base_values(3, &s, LogBase::Natural);
        let f = compute_feature_vector(&r, &s, own, own, LogBase::Natural);
        assert!((f.coh - LN2_SQUASH).abs() < 1e-15);
        assert_eq!(f.d_len_ru, 0.0);
        assert_eq!(f.d_rat_ri, 0.0);
    }

    #[test]
    fn rating_deviation_fixture() {
        // user mean RAT 0.55, review rates 5 stars
        let r = review("r", "u", "i", 5, "");
        let s = ReviewSignals {
            raw_words: 5,
            mean_tfidf: 0.0,
            polarity: 3.0,
        };
        let own = base_values(5, &s, LogBase::Natural);
        assert!((own.rat - 0.6419).abs() < 1e-4);
        let user = BaseValues { rat: 0.55, ..own };
        let f = compute_feature_vector(&r, &s, user, own, LogBase::Natural);
        let want = squash((own.rat - 0.55).abs()).unwrap();
        assert_eq!(f.d_rat_ru, want);
        assert!((f.d_rat_ru - squash(0.0919).unwrap()).abs() < 1e-4);
    }

    #[test]
    fn identical_reviews_have_no_user_deviation() {
        let mut rs = Vec::new();
        for k in 0..4 {
            rs.push(review(
                &format!("a{k}"),
                "same",
                &format!("i{k}"),
                4,
                "Clean room, great staff.",
            ));
            rs.push(review(
                &format!("b{k}"),
                "other",
                &format!("i{k}"),
                (k % 5 + 1) as u8,
                &"word ".repeat(k + 1),
            ));
        }
        let c = Corpus::from_reviews(rs).unwrap();
        let m = extractor(&c, FeatureConfig::default()).matrix().unwrap();
        for row in m.rows.iter().filter(|r| r.user_id == "same") {
            assert_eq!(row.features.d_len_ru, 0.0);
            assert_eq!(row.features.d_rat_ru, 0.0);
            assert_eq!(row.features.d_pol_ru, 0.0);
        }
    }

    #[test]
    fn leave_one_out_mode() {
        let c = Corpus::from_reviews(vec![
            review("r1", "u", "i1", 5, "great"),
            review("r2", "u", "i2", 1, "terrible"),
            review("r3", "v", "i2", 3, "fine"),
        ])
        .unwrap();
        let cfg = FeatureConfig {
            deviation: DeviationMode::LeaveOneOut,
            ..Default::default()
        };
        let ex = extractor(&c, cfg);
        let f = ex.features_for(&c.reviews()[0]).unwrap();
        // the other review of u is the 1-star one
        let want = squash((squash(5.0).unwrap() - squash(1.0).unwrap()).abs()).unwrap();
        assert!((f.d_rat_ru - want).abs() < 1e-15);
        // user v has one review: leave-one-out falls back to the review itself
        let f = ex.features_for(&c.reviews()[2]).unwrap();
        assert_eq!(f.d_rat_ru, 0.0);
    }

    #[test]
    fn unseen_review_scoring() {
        let c = Corpus::from_reviews(vec![
            review("r1", "u", "i1", 5, "great pool"),
            review("r2", "u", "i1", 3, "small pool"),
        ])
        .unwrap();
        let ex = extractor(&c, FeatureConfig::default());
        let stranger = review("x", "nobody", "i1", 2, "noisy pool");
        let f = ex.features_for(&stranger).unwrap();
        assert_eq!(f.d_rat_ru, 0.0);
        assert!(f.d_rat_ri > 0.0);
        let cfg = FeatureConfig {
            deviation: DeviationMode::LeaveOneOut,
            ..Default::default()
        };
        let ex = extractor(&c, cfg);
        assert!(matches!(
            ex.features_for(&stranger),
            Err(FeatureError::MissingAggregate { kind: "user", .. })
        ));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let c = Corpus::from_reviews(vec![
            review("r1", "u", "i1", 5, "great pool and a lovely view"),
            review("r2", "u", "i2", 2, "dirty room"),
        ])
        .unwrap();
        let m = extractor(&c, FeatureConfig::default()).matrix().unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let header = std::str::from_utf8(&buf)
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string();
        assert_eq!(
            header,
            "review_id,user_id,item_id,rat,len,ugr,pol,coh,d_len_ru,d_len_ri,d_rat_ru,d_rat_ri,d_pol_ru,d_pol_ri,helpfulness"
        );
        assert_eq!(FeatureMatrix::read_csv(&buf[..]).unwrap(), m);
    }

    fn arb_corpus() -> impl Strategy<Value = Vec<RawReview>> {
        proptest::collection::vec(
            (
                0usize..4,
                0usize..5,
                1u8..=5,
                "[a-z !.,]{0,60}",
                0u32..50,
                0u32..5,
            ),
            1..30,
        )
        .prop_map(|rows| {
            rows.into_iter()
                .enumerate()
                .map(|(k, (u, i, s, t, useful, cool))| {
                    let mut r = review(
                        &format!("r{k:03}"),
                        &format!("u{u}"),
                        &format!("i{i}"),
                        s,
                        &t,
                    );
                    r.votes_useful = useful;
                    r.votes_cool = cool;
                    r
                })
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn all_values_in_unit_interval(reviews in arb_corpus()) {
            let c = Corpus::from_reviews(reviews).unwrap();
            let m = extractor(&c, FeatureConfig::default()).matrix().unwrap();
            for row in &m.rows {
                for v in row.features.to_array() {
                    prop_assert!((0.0..1.0).contains(&v), "{v}");
                }
            }
        }

        #[test]
        fn permutation_invariance(reviews in arb_corpus(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let c = Corpus::from_reviews(reviews.clone()).unwrap();
            let mut shuffled = reviews;
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let p = Corpus::from_reviews(shuffled).unwrap();
            let a = extractor(&c, FeatureConfig::default()).matrix().unwrap();
            let b = extractor(&p, FeatureConfig::default()).matrix().unwrap();
            let by_id: HashMap<_, _> = b.rows.iter().map(|r| (r.review_id.clone(), r.features)).collect();
            for row in &a.rows {
                let other = by_id[&row.review_id];
                prop_assert_eq!(row.features.to_array().map(f64::to_bits), other.to_array().map(f64::to_bits));
            }
        }

        #[test]
        fn coherence_peaks_when_rating_equals_polarity(stars in 1u8..=5, pol in 1.0f64..5.0, pol2 in 1.0f64..5.0) {
            let r = review("r", "u", "i", stars, "");
            let base = |p: f64| {
                let s = ReviewSignals { raw_words: 3, mean_tfidf: 0.0, polarity: p };
                let own = base_values(stars, &s, LogBase::Natural);
                compute_feature_vector(&r, &s, own, own, LogBase::Natural)
            };
            let a = base(pol);
            let b = base(pol2);
            let gap = |f: &ReviewFeatures| (f.rat - f.pol).abs();
            prop_assert!(a.coh <= LN2_SQUASH);
            if gap(&a) < gap(&b) {
                prop_assert!(a.coh > b.coh);
            }
        }
    }
}
