//! Rating matrices, helpfulness weights and latent-factor recommenders.

mod mf;
mod model_io;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, RawReview};
use crate::features::{perceived_helpfulness, Feature, FeatureMatrix, ReviewFeatures};
use crate::regress::{ForestModel, BELOW_ONE};

pub use mf::{
    top_n, train_plain_mf, train_svdpp, train_weighted_mf, Estimate, FactorKind, FactorModel,
    MfParams,
};
pub use model_io::{read_model, write_model};

#[derive(Debug, Error)]
pub enum RecommendError {
    #[error("rating matrix has no observations")]
    Empty,
    #[error("rating {rating} for ({user}, {item}) outside [1, 5]")]
    InvalidRating {
        user: String,
        item: String,
        rating: f64,
    },
    #[error("more than one observation for ({user}, {item})")]
    Duplicate { user: String, item: String },
    #[error("no weight for observation ({user}, {item})")]
    MissingWeight { user: String, item: String },
    #[error("weight for ({user}, {item}) is not an observation")]
    ExtraWeight { user: String, item: String },
    #[error("weight {weight} for ({user}, {item}) outside [0, 1]")]
    WeightRange {
        user: String,
        item: String,
        weight: f64,
    },
    #[error("training diverged at epoch {epoch}: non-finite factor")]
    Diverged { epoch: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidParam(String),
    #[error("empty candidate set")]
    EmptyCandidates,
    #[error("model file line {line}: {reason}")]
    ModelFormat { line: usize, reason: String },
    #[error("weights csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One observed rating and the review it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub user_id: String,
    pub item_id: String,
    pub rating: f64,
    pub review_id: String,
}

/// Sparse user x item ratings with at most one observation per pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RatingMatrix {
    observations: Vec<Observation>,
    users: Vec<String>,
    items: Vec<String>,
}

impl RatingMatrix {
    /// Observations sorted by (user, item). Duplicated pairs are an error.
    pub fn from_observations(mut observations: Vec<Observation>) -> Result<Self, RecommendError> {
        for o in &observations {
            if !(1.0..=5.0).contains(&o.rating) {
                return Err(RecommendError::InvalidRating {
                    user: o.user_id.clone(),
                    item: o.item_id.clone(),
                    rating: o.rating,
                });
            }
        }
        observations.sort_by(|a, b| (&a.user_id, &a.item_id).cmp(&(&b.user_id, &b.item_id)));
        for w in observations.windows(2) {
            if w[0].user_id == w[1].user_id && w[0].item_id == w[1].item_id {
                return Err(RecommendError::Duplicate {
                    user: w[0].user_id.clone(),
                    item: w[0].item_id.clone(),
                });
            }
        }
        let users: BTreeSet<&String> = observations.iter().map(|o| &o.user_id).collect();
        let items: BTreeSet<&String> = observations.iter().map(|o| &o.item_id).collect();
        Ok(Self {
            users: users.into_iter().cloned().collect(),
            items: items.into_iter().cloned().collect(),
            observations,
        })
    }

    /// One observation per (user, item); repeated reviews keep the latest
    /// date, then the greatest review id.
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let mut best: BTreeMap<(&str, &str), &RawReview> = BTreeMap::new();
        for r in corpus.reviews() {
            let key = (r.user_id.as_str(), r.item_id.as_str());
            let newer = |old: &RawReview| (&r.date, &r.review_id) > (&old.date, &old.review_id);
            if best.get(&key).is_none_or(|old| newer(old)) {
                best.insert(key, r);
            }
        }
        let obs = best
            .into_values()
            .map(|r| Observation {
                user_id: r.user_id.clone(),
                item_id: r.item_id.clone(),
                rating: f64::from(r.stars),
                review_id: r.review_id.clone(),
            })
            .collect();
        Self::from_observations(obs).expect("corpus stars are validated and pairs deduplicated")
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    /// Observations at `positions`.
    pub fn subset(&self, positions: &[usize]) -> RatingMatrix {
        let obs = positions
            .iter()
            .map(|&p| self.observations[p].clone())
            .collect();
        Self::from_observations(obs).expect("subset of a valid matrix")
    }

    /// Observations of each user, as positions.
    pub fn by_user(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut m: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (p, o) in self.observations.iter().enumerate() {
            m.entry(o.user_id.as_str()).or_default().push(p);
        }
        m
    }
}

/// Weight in [0, 1] per observed (user, item).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HelpfulnessWeights {
    weights: BTreeMap<(String, String), f64>,
}

#[derive(Serialize, Deserialize)]
struct WeightRow {
    user_id: String,
    item_id: String,
    weight: f64,
}

impl HelpfulnessWeights {
    pub fn uniform(r: &RatingMatrix, w: f64) -> Self {
        Self {
            weights: r
                .observations()
                .iter()
                .map(|o| ((o.user_id.clone(), o.item_id.clone()), w))
                .collect(),
        }
    }

    pub fn insert(&mut self, user: &str, item: &str, w: f64) {
        self.weights.insert((user.to_string(), item.to_string()), w);
    }

    pub fn get(&self, user: &str, item: &str) -> Option<f64> {
        // BTreeMap<(String, String)> cannot be probed with borrowed pairs
        self.weights
            .range((user.to_string(), item.to_string())..)
            .next()
            .filter(|((u, i), _)| u == user && i == item)
            .map(|(_, &w)| w)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.weights
            .iter()
            .map(|((u, i), &w)| (u.as_str(), i.as_str(), w))
    }

    /// Domain must equal the observed pairs of `r` and every weight lie in [0, 1].
    pub fn validate_for(&self, r: &RatingMatrix) -> Result<(), RecommendError> {
        for ((u, i), &w) in &self.weights {
            if !(0.0..=1.0).contains(&w) {
                return Err(RecommendError::WeightRange {
                    user: u.clone(),
                    item: i.clone(),
                    weight: w,
                });
            }
        }
        for o in r.observations() {
            if self.get(&o.user_id, &o.item_id).is_none() {
                return Err(RecommendError::MissingWeight {
                    user: o.user_id.clone(),
                    item: o.item_id.clone(),
                });
            }
        }
        if self.weights.len() != r.len() {
            let observed: BTreeSet<(&str, &str)> = r
                .observations()
                .iter()
                .map(|o| (o.user_id.as_str(), o.item_id.as_str()))
                .collect();
            let (u, i) = self
                .weights
                .keys()
                .find(|(u, i)| !observed.contains(&(u.as_str(), i.as_str())))
                .expect("more weights than observations");
            return Err(RecommendError::ExtraWeight {
                user: u.clone(),
                item: i.clone(),
            });
        }
        Ok(())
    }

    /// Restriction to the observations of `r`; pairs without a weight get `fallback`.
    pub fn restrict_to(&self, r: &RatingMatrix, fallback: f64) -> HelpfulnessWeights {
        let mut out = HelpfulnessWeights::default();
        for o in r.observations() {
            out.insert(
                &o.user_id,
                &o.item_id,
                self.get(&o.user_id, &o.item_id).unwrap_or(fallback),
            );
        }
        out
    }

    /// CSV with header `user_id,item_id,weight`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, RecommendError> {
        let mut out = HelpfulnessWeights::default();
        for row in csv::Reader::from_reader(reader).deserialize::<WeightRow>() {
            let row = row?;
            if !(0.0..=1.0).contains(&row.weight) {
                return Err(RecommendError::WeightRange {
                    user: row.user_id,
                    item: row.item_id,
                    weight: row.weight,
                });
            }
            out.insert(&row.user_id, &row.item_id, row.weight);
        }
        Ok(out)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), RecommendError> {
        let mut w = csv::Writer::from_writer(writer);
        for (u, i, weight) in self.iter() {
            w.serialize(WeightRow {
                user_id: u.to_string(),
                item_id: i.to_string(),
                weight,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Ground-truth helpfulness when the review has votes, else the forest's
/// clamped estimate from the review's full feature vector.
pub fn predicted_helpfulness(r: &RawReview, features: &ReviewFeatures, m3: &ForestModel) -> f64 {
    if r.total_votes() > 0 {
        perceived_helpfulness(r)
    } else {
        let x = features.select(&Feature::ALL);
        m3.predict_raw(&x)
            .expect("m3 forest is trained on all eleven features")
            .clamp(0.0, BELOW_ONE)
    }
}

/// Weights for every observation of `r` plus how many came from the forest.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSummary {
    pub weights: HelpfulnessWeights,
    pub predicted: usize,
    /// Observations whose review had no feature row; weighted 1.
    pub missing: usize,
}

pub fn helpfulness_weights(
    corpus: &Corpus,
    r: &RatingMatrix,
    features: &FeatureMatrix,
    m3: &ForestModel,
) -> WeightSummary {
    let reviews: BTreeMap<&str, &RawReview> = corpus
        .reviews()
        .iter()
        .map(|r| (r.review_id.as_str(), r))
        .collect();
    let rows: BTreeMap<&str, &ReviewFeatures> = features
        .rows
        .iter()
        .map(|row| (row.review_id.as_str(), &row.features))
        .collect();
    let mut out = WeightSummary {
        weights: HelpfulnessWeights::default(),
        predicted: 0,
        missing: 0,
    };
    for o in r.observations() {
        let w = match (
            reviews.get(o.review_id.as_str()),
            rows.get(o.review_id.as_str()),
        ) {
            (Some(review), _) if review.total_votes() > 0 => perceived_helpfulness(review),
            (Some(review), Some(f)) => {
                out.predicted += 1;
                predicted_helpfulness(review, f, m3)
            }
            _ => {
                log::warn!(
                    "no review features for observation {}; weight 1",
                    o.review_id
                );
                out.missing += 1;
                1.0
            }
        };
        out.weights.insert(&o.user_id, &o.item_id, w);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_support::review;
    use crate::features::squash;
    use crate::regress::{train_forest, ForestParams};

    fn obs(u: &str, i: &str, r: f64) -> Observation {
        Observation {
            user_id: u.into(),
            item_id: i.into(),
            rating: r,
            review_id: format!("{u}-{i}"),
        }
    }

    #[test]
    fn matrix_invariants() {
        let m =
            RatingMatrix::from_observations(vec![obs("b", "x", 4.0), obs("a", "y", 2.0)]).unwrap();
        assert_eq!(m.users(), ["a", "b"]);
        assert_eq!(m.observations()[0].user_id, "a");
        assert!(matches!(
            RatingMatrix::from_observations(vec![obs("a", "x", 4.0), obs("a", "x", 3.0)]),
            Err(RecommendError::Duplicate { .. })
        ));
        assert!(RatingMatrix::from_observations(vec![obs("a", "x", 6.0)]).is_err());
    }

    #[test]
    fn corpus_dedup_keeps_latest() {
        let mut old = review("r1", "u", "i", 2, "");
        old.date = Some("2010-01-01".into());
        let mut new = review("r0", "u", "i", 5, "");
        new.date = Some("2012-01-01".into());
        let c = Corpus::from_reviews(vec![old, new, review("r2", "v", "i", 3, "")]).unwrap();
        let m = RatingMatrix::from_corpus(&c);
        assert_eq!(m.len(), 2);
        assert_eq!(m.observations()[0].review_id, "r0");
        assert_eq!(m.observations()[0].rating, 5.0);
    }

    #[test]
    fn weights_cover_exactly_the_observations() {
        let m =
            RatingMatrix::from_observations(vec![obs("a", "x", 4.0), obs("b", "x", 2.0)]).unwrap();
        let mut w = HelpfulnessWeights::uniform(&m, 1.0);
        w.validate_for(&m).unwrap();
        w.insert("c", "x", 0.5);
        assert!(matches!(
            w.validate_for(&m),
            Err(RecommendError::ExtraWeight { .. })
        ));
        let mut w = HelpfulnessWeights::default();
        w.insert("a", "x", 0.5);
        assert!(matches!(
            w.validate_for(&m),
            Err(RecommendError::MissingWeight { .. })
        ));
        w.insert("b", "x", 1.5);
        assert!(matches!(
            w.validate_for(&m),
            Err(RecommendError::WeightRange { .. })
        ));
        assert_eq!(w.get("a", "x"), Some(0.5));
        assert_eq!(w.get("a", "y"), None);
    }

    #[test]
    fn weights_csv_round_trip() {
        let m = RatingMatrix::from_observations(vec![obs("a,1", "x", 4.0), obs("b", "\"q\"", 2.0)])
            .unwrap();
        let w = HelpfulnessWeights::uniform(&m, 0.25);
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        assert_eq!(HelpfulnessWeights::read_csv(&buf[..]).unwrap(), w);
        assert!(HelpfulnessWeights::read_csv(&b"user_id,item_id,weight\na,b,2\n"[..]).is_err());
        assert!(HelpfulnessWeights::read_csv(&b"user_id,item_id,weight\na,b,x\n"[..]).is_err());
    }

    fn stump_forest(value: f64) -> ForestModel {
        let x = vec![vec![0.1; 11]; 4];
        let y = vec![value; 4];
        train_forest(
            &x,
            &y,
            &ForestParams {
                n_trees: 2,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn ground_truth_or_forest() {
        let forest = stump_forest(0.3);
        let mut r = review("r", "u", "i", 4, "");
        r.votes_useful = 1;
        r.votes_cool = 2;
        let f = ReviewFeatures::default();
        assert_eq!(predicted_helpfulness(&r, &f, &forest), squash(3.0).unwrap());
        let silent = review("s", "u", "i", 4, "");
        assert_eq!(predicted_helpfulness(&silent, &f, &forest), 0.3);
    }
}
