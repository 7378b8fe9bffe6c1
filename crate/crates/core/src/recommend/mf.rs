//! SGD matrix factorization: plain, helpfulness-weighted, biased and SVD++.
//!
//! Visiting order and initial factors are derived from observation and entity
//! ids rather than positions, so removing an observation never perturbs the
//! treatment of the others.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{HelpfulnessWeights, RatingMatrix, RecommendError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorKind {
    /// `u . i`
    #[default]
    Plain,
    /// `mu + b_u + b_i + u . i`
    Biased,
    /// Biased plus the implicit-feedback term over the user's rated items.
    SvdPlusPlus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MfParams {
    pub k: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Standard deviation of the initial factor draw.
    pub init_std: f64,
    /// Add global mean and user/item biases to weighted MF.
    pub biased: bool,
}

impl Default for MfParams {
    fn default() -> Self {
        Self {
            k: 50,
            learning_rate: 0.01,
            lambda: 0.02,
            epochs: 50,
            seed: 0,
            init_std: 0.1,
            biased: false,
        }
    }
}

impl MfParams {
    pub fn validate(&self) -> Result<(), RecommendError> {
        let bad = |m: &str| Err(RecommendError::InvalidParam(m.into()));
        if self.k == 0 {
            return bad("k must be >= 1");
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad("learning rate must be > 0");
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad("lambda must be >= 0");
        }
        if !(self.init_std >= 0.0) || !self.init_std.is_finite() {
            return bad("init_std must be >= 0");
        }
        Ok(())
    }
}

/// An estimate and whether it came from the cold-start fallback.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FactorModel {
    pub kind: FactorKind,
    pub params: MfParams,
    pub users: Vec<String>,
    pub items: Vec<String>,
    pub user_factors: Vec<Vec<f64>>,
    pub item_factors: Vec<Vec<f64>>,
    /// 0 for plain models.
    pub global_mean: f64,
    /// Empty for plain models.
    pub user_bias: Vec<f64>,
    pub item_bias: Vec<f64>,
    /// SVD++ only: implicit item factors and each user's rated items.
    pub implicit: Vec<Vec<f64>>,
    pub rated: Vec<Vec<usize>>,
    /// Objective after each epoch.
    pub loss_history: Vec<f64>,
    #[serde(skip)]
    pub(crate) user_index: HashMap<String, usize>,
    #[serde(skip)]
    pub(crate) item_index: HashMap<String, usize>,
    #[serde(skip)]
    pub(crate) implicit_sum: Vec<Vec<f64>>,
}

// FNV-1a, stable across platforms and releases
fn id_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn init_vector(seed: u64, tag: &str, id: &str, k: usize, std: f64) -> Vec<f64> {
    if std == 0.0 {
        return vec![0.0; k];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed ^ id_hash(tag) ^ mix(id_hash(id))));
    let normal = Normal::new(0.0, std).expect("finite std");
    (0..k).map(|_| normal.sample(&mut rng)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// A training observation in index space.
#[derive(Debug, Clone)]
pub(crate) struct Obs {
    pub u: usize,
    pub i: usize,
    pub r: f64,
    pub w: f64,
    /// Identity used for visiting order.
    pub key: String,
}

fn visiting_order(obs: &[Obs], seed: u64, epoch: usize) -> Vec<usize> {
    let salt = mix(seed) ^ mix(epoch as u64 + 1);
    let mut keyed: Vec<(u64, &str, usize)> = obs
        .iter()
        .enumerate()
        .map(|(p, o)| (mix(id_hash(&o.key) ^ salt), o.key.as_str(), p))
        .collect();
    keyed.sort_unstable();
    keyed.into_iter().map(|(_, _, p)| p).collect()
}

impl FactorModel {
    fn new(kind: FactorKind, params: MfParams, users: Vec<String>, items: Vec<String>) -> Self {
        let k = params.k;
        let uf = users
            .iter()
            .map(|u| init_vector(params.seed, "user", u, k, params.init_std))
            .collect();
        let itf = items
            .iter()
            .map(|i| init_vector(params.seed, "item", i, k, params.init_std))
            .collect();
        let biased = kind != FactorKind::Plain;
        let implicit = if kind == FactorKind::SvdPlusPlus {
            items
                .iter()
                .map(|i| init_vector(params.seed, "implicit", i, k, params.init_std))
                .collect()
        } else {
            Vec::new()
        };
        let mut m = FactorModel {
            kind,
            params,
            user_bias: if biased {
                vec![0.0; users.len()]
            } else {
                Vec::new()
            },
            item_bias: if biased {
                vec![0.0; items.len()]
            } else {
                Vec::new()
            },
            users,
            items,
            user_factors: uf,
            item_factors: itf,
            global_mean: 0.0,
            implicit,
            rated: Vec::new(),
            loss_history: Vec::new(),
            user_index: HashMap::new(),
            item_index: HashMap::new(),
            implicit_sum: Vec::new(),
        };
        m.reindex();
        m
    }

    /// Rebuilds lookup tables and cached implicit sums.
    pub(crate) fn reindex(&mut self) {
        self.user_index = self
            .users
            .iter()
            .enumerate()
            .map(|(p, u)| (u.clone(), p))
            .collect();
        self.item_index = self
            .items
            .iter()
            .enumerate()
            .map(|(p, i)| (i.clone(), p))
            .collect();
        self.implicit_sum = if self.kind == FactorKind::SvdPlusPlus {
            (0..self.users.len())
                .map(|u| self.implicit_term(u))
                .collect()
        } else {
            Vec::new()
        };
    }

    fn implicit_term(&self, u: usize) -> Vec<f64> {
        let mut z = vec![0.0; self.params.k];
        let n = self.rated.get(u).map_or(0, Vec::len);
        if n == 0 {
            return z;
        }
        let norm = 1.0 / (n as f64).sqrt();
        for &j in &self.rated[u] {
            for (zf, yf) in z.iter_mut().zip(&self.implicit[j]) {
                *zf += yf;
            }
        }
        z.iter_mut().for_each(|v| *v *= norm);
        z
    }

    pub fn k(&self) -> usize {
        self.params.k
    }

    pub fn knows_user(&self, user: &str) -> bool {
        self.user_index.contains_key(user)
    }

    pub fn knows_item(&self, item: &str) -> bool {
        self.item_index.contains_key(item)
    }

    fn fallback(&self) -> f64 {
        match self.kind {
            FactorKind::Plain => 3.0,
            _ => self.global_mean,
        }
    }

    fn predict_index(&self, u: usize, i: usize) -> f64 {
        let q = &self.item_factors[i];
        match self.kind {
            FactorKind::Plain => dot(&self.user_factors[u], q),
            FactorKind::Biased => {
                self.global_mean
                    + self.user_bias[u]
                    + self.item_bias[i]
                    + dot(&self.user_factors[u], q)
            }
            FactorKind::SvdPlusPlus => {
                let z = &self.implicit_sum[u];
                let inner: f64 = q
                    .iter()
                    .zip(self.user_factors[u].iter().zip(z))
                    .map(|(qf, (pf, zf))| qf * (pf + zf))
                    .sum();
                self.global_mean + self.user_bias[u] + self.item_bias[i] + inner
            }
        }
    }

    /// Unclamped estimate; unknown users or items get the fallback (3 for plain
    /// models, the global mean otherwise).
    pub fn estimate(&self, user: &str, item: &str) -> Estimate {
        match (self.user_index.get(user), self.item_index.get(item)) {
            (Some(&u), Some(&i)) => Estimate {
                value: self.predict_index(u, i),
                fallback: false,
            },
            _ => Estimate {
                value: self.fallback(),
                fallback: true,
            },
        }
    }

    /// Estimate, optionally clamped to the rating scale [1, 5].
    pub fn estimate_rating(&self, user: &str, item: &str, clamp: bool) -> Estimate {
        let mut e = self.estimate(user, item);
        if clamp {
            e.value = e.value.clamp(1.0, 5.0);
        }
        e
    }

    fn all_finite(&self) -> bool {
        let ok = |v: &[Vec<f64>]| v.iter().flatten().all(|x| x.is_finite());
        ok(&self.user_factors)
            && ok(&self.item_factors)
            && ok(&self.implicit)
            && self
                .user_bias
                .iter()
                .chain(&self.item_bias)
                .all(|x| x.is_finite())
            && self.global_mean.is_finite()
    }
}

/// Positions of the observations' users and items in sorted id lists,
/// keeping only observations with positive weight.
fn index_observations(
    r: &RatingMatrix,
    weight: impl Fn(&str, &str) -> f64,
) -> (Vec<String>, Vec<String>, Vec<Obs>) {
    let kept: Vec<(&super::Observation, f64)> = r
        .observations()
        .iter()
        .map(|o| (o, weight(&o.user_id, &o.item_id)))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    let mut users: Vec<String> = kept.iter().map(|(o, _)| o.user_id.clone()).collect();
    let mut items: Vec<String> = kept.iter().map(|(o, _)| o.item_id.clone()).collect();
    users.sort();
    users.dedup();
    items.sort();
    items.dedup();
    let ui: HashMap<&str, usize> = users
        .iter()
        .enumerate()
        .map(|(p, u)| (u.as_str(), p))
        .collect();
    let ii: HashMap<&str, usize> = items
        .iter()
        .enumerate()
        .map(|(p, i)| (i.as_str(), p))
        .collect();
    let obs = kept
        .into_iter()
        .map(|(o, w)| Obs {
            u: ui[o.user_id.as_str()],
            i: ii[o.item_id.as_str()],
            r: o.rating,
            w,
            key: o.review_id.clone(),
        })
        .collect();
    (users, items, obs)
}

fn weighted_objective(m: &FactorModel, obs: &[Obs]) -> f64 {
    let lambda = m.params.lambda;
    let biased = m.kind == FactorKind::Biased;
    let mut total = 0.0;
    for o in obs {
        let e = o.r - m.predict_index(o.u, o.i);
        let mut reg = sq(&m.user_factors[o.u]) + sq(&m.item_factors[o.i]);
        if biased {
            reg += m.user_bias[o.u].powi(2) + m.item_bias[o.i].powi(2);
        }
        total += o.w * e * e + lambda * reg;
    }
    0.5 * total
}

/// SGD over weighted observations; shared by plain and weighted training.
pub(crate) fn sgd_weighted(
    users: Vec<String>,
    items: Vec<String>,
    obs: &[Obs],
    params: &MfParams,
) -> Result<FactorModel, RecommendError> {
    params.validate()?;
    if obs.is_empty() {
        return Err(RecommendError::Empty);
    }
    let kind = if params.biased {
        FactorKind::Biased
    } else {
        FactorKind::Plain
    };
    let mut m = FactorModel::new(kind, *params, users, items);
    if params.biased {
        let wsum: f64 = obs.iter().map(|o| o.w).sum();
        m.global_mean = obs.iter().map(|o| o.w * o.r).sum::<f64>() / wsum;
    }
    let (lr, lambda) = (params.learning_rate, params.lambda);
    for epoch in 0..params.epochs {
        for p in visiting_order(obs, params.seed, epoch) {
            let o = &obs[p];
            let e = o.r - m.predict_index(o.u, o.i);
            let we = o.w * e;
            let (uf, itf) = (&mut m.user_factors[o.u], &mut m.item_factors[o.i]);
            for (a, b) in uf.iter_mut().zip(itf.iter_mut()) {
                let (ua, ib) = (*a, *b);
                *a += lr * (we * ib - lambda * ua);
                *b += lr * (we * ua - lambda * ib);
            }
            if params.biased {
                m.user_bias[o.u] += lr * (we - lambda * m.user_bias[o.u]);
                m.item_bias[o.i] += lr * (we - lambda * m.item_bias[o.i]);
            }
        }
        if !m.all_finite() {
            return Err(RecommendError::Diverged { epoch: epoch + 1 });
        }
        m.loss_history.push(weighted_objective(&m, obs));
    }
    Ok(m)
}

/// Minimizes `sum w (R - u.i)^2 + lambda (|u|^2 + |i|^2)` by SGD. Observations
/// with weight 0 are skipped entirely.
pub fn train_weighted_mf(
    r: &RatingMatrix,
    w: &HelpfulnessWeights,
    params: &MfParams,
) -> Result<FactorModel, RecommendError> {
    w.validate_for(r)?;
    let (users, items, obs) = index_observations(r, |u, i| {
        w.get(u, i).expect("weights validated against the matrix")
    });
    sgd_weighted(users, items, &obs, params)
}

/// Weighted MF with every weight equal to 1.
pub fn train_plain_mf(r: &RatingMatrix, params: &MfParams) -> Result<FactorModel, RecommendError> {
    train_weighted_mf(r, &HelpfulnessWeights::uniform(r, 1.0), params)
}

fn svdpp_objective(m: &FactorModel, obs: &[Obs]) -> f64 {
    let mut total = 0.0;
    for o in obs {
        let e = o.r - m.predict_index(o.u, o.i);
        total += e * e;
    }
    let reg = m
        .user_factors
        .iter()
        .chain(&m.item_factors)
        .chain(&m.implicit)
        .map(|v| sq(v))
        .sum::<f64>()
        + m.user_bias
            .iter()
            .chain(&m.item_bias)
            .map(|b| b * b)
            .sum::<f64>();
    0.5 * (total + m.params.lambda * reg)
}

/// SVD++ with the standard per-observation SGD updates.
pub fn train_svdpp(r: &RatingMatrix, params: &MfParams) -> Result<FactorModel, RecommendError> {
    params.validate()?;
    if r.is_empty() {
        return Err(RecommendError::Empty);
    }
    let (users, items, obs) = index_observations(r, |_, _| 1.0);
    let mut m = FactorModel::new(FactorKind::SvdPlusPlus, *params, users, items);
    m.global_mean = obs.iter().map(|o| o.r).sum::<f64>() / obs.len() as f64;
    m.rated = vec![Vec::new(); m.users.len()];
    for o in &obs {
        m.rated[o.u].push(o.i);
    }
    m.reindex();
    let (lr, lambda, k) = (params.learning_rate, params.lambda, params.k);
    for epoch in 0..params.epochs {
        for p in visiting_order(&obs, params.seed, epoch) {
            let o = &obs[p];
            let n = m.rated[o.u].len();
            let norm = 1.0 / (n as f64).sqrt();
            let z = m.implicit_term(o.u);
            let q = &m.item_factors[o.i];
            let inner: f64 = (0..k).map(|f| q[f] * (m.user_factors[o.u][f] + z[f])).sum();
            let pred = m.global_mean + m.user_bias[o.u] + m.item_bias[o.i] + inner;
            let e = o.r - pred;
            m.user_bias[o.u] += lr * (e - lambda * m.user_bias[o.u]);
            m.item_bias[o.i] += lr * (e - lambda * m.item_bias[o.i]);
            let q_old = m.item_factors[o.i].clone();
            for f in 0..k {
                let pf = m.user_factors[o.u][f];
                m.user_factors[o.u][f] += lr * (e * q_old[f] - lambda * pf);
                m.item_factors[o.i][f] += lr * (e * (pf + z[f]) - lambda * q_old[f]);
            }
            for idx in 0..n {
                let j = m.rated[o.u][idx];
                for f in 0..k {
                    let y = m.implicit[j][f];
                    m.implicit[j][f] += lr * (e * norm * q_old[f] - lambda * y);
                }
            }
        }
        if !m.all_finite() {
            return Err(RecommendError::Diverged { epoch: epoch + 1 });
        }
        m.reindex();
        m.loss_history.push(svdpp_objective(&m, &obs));
    }
    Ok(m)
}

/// The `n` best candidates by unclamped estimate; ties go to the lower item id.
pub fn top_n(
    m: &FactorModel,
    user: &str,
    candidates: &[String],
    n: usize,
) -> Result<Vec<(String, f64)>, RecommendError> {
    if n == 0 {
        return Err(RecommendError::InvalidParam("N must be >= 1".into()));
    }
    if candidates.is_empty() {
        return Err(RecommendError::EmptyCandidates);
    }
    let mut scored: Vec<(String, f64)> = candidates
        .iter()
        .map(|c| (c.clone(), m.estimate(user, c).value))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.dedup_by(|a, b| a.0 == b.0);
    scored.truncate(n);
    Ok(scored)
}
