use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{error_metrics, ranking_metrics, topn_metrics};
use super::wilcoxon::wilcoxon_signed_rank;
use super::EvalError;
use crate::corpus::Corpus;
use crate::features::{Feature, FeatureMatrix, FeatureRow};
use crate::folds::FoldPlan;
use crate::recommend::{
    helpfulness_weights, top_n, train_svdpp, train_weighted_mf, FactorModel, HelpfulnessWeights,
    MfParams, RatingMatrix,
};
use crate::regress::{train_forest, ForestParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainMode {
    /// The true rating is the gain of every test item.
    #[default]
    Rating,
    /// Gain 1 for relevant items, 0 otherwise.
    Binary,
}

/// Which items are ranked for a user in a test fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateSet {
    /// Only the user's own test-fold items.
    #[default]
    TestItems,
    /// Every item of the matrix the user has not rated in the training
    /// split; items without a test rating have gain 0.
    Unrated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// List length for the top-N and ranking metrics.
    pub n: usize,
    /// Test items rated at least this are relevant.
    pub relevance_threshold: f64,
    pub gain: GainMode,
    pub candidates: CandidateSet,
    /// Clamp rating estimates to [1, 5] before the error metrics.
    pub clamp: bool,
    /// Significance level reported with each comparison.
    pub alpha: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n: 10,
            relevance_threshold: 4.0,
            gain: GainMode::Rating,
            candidates: CandidateSet::TestItems,
            clamp: true,
            alpha: 0.05,
        }
    }
}

impl EvalConfig {
    fn validate(&self) -> Result<(), EvalError> {
        if self.n == 0 {
            return Err(EvalError::InvalidParam("N must be >= 1".into()));
        }
        if !self.relevance_threshold.is_finite() {
            return Err(EvalError::InvalidParam(
                "relevance threshold must be finite".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(EvalError::InvalidParam("alpha must be in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Where a weighted model gets its per-observation weights in each fold.
#[derive(Debug, Clone)]
pub enum WeightSource {
    /// Every weight equal to the given value.
    Uniform(f64),
    /// Precomputed weights, restricted to the training split; unknown pairs get 1.
    Fixed(Arc<HelpfulnessWeights>),
    /// Votes where present, otherwise a forest trained on the training
    /// split's reviews over all eleven features.
    Forest {
        corpus: Arc<Corpus>,
        features: Arc<FeatureMatrix>,
        params: ForestParams,
    },
}

impl WeightSource {
    fn weights(&self, train: &RatingMatrix) -> Result<HelpfulnessWeights, EvalError> {
        match self {
            WeightSource::Uniform(w) => Ok(HelpfulnessWeights::uniform(train, *w)),
            WeightSource::Fixed(w) => Ok(w.restrict_to(train, 1.0)),
            WeightSource::Forest {
                corpus,
                features,
                params,
            } => {
                let ids: BTreeSet<&str> = train
                    .observations()
                    .iter()
                    .map(|o| o.review_id.as_str())
                    .collect();
                let rows: Vec<FeatureRow> = features
                    .rows
                    .iter()
                    .filter(|r| ids.contains(r.review_id.as_str()))
                    .cloned()
                    .collect();
                let m = FeatureMatrix { rows };
                let forest = train_forest(&m.design(&Feature::ALL), &m.helpfulness(), params)?;
                Ok(helpfulness_weights(corpus, train, features, &forest).weights)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum Method {
    Weighted(WeightSource),
    SvdPlusPlus,
}

#[derive(Debug, Clone)]
pub struct Algorithm {
    pub name: String,
    pub method: Method,
    pub params: MfParams,
}

impl Algorithm {
    pub fn new(name: impl Into<String>, method: Method, params: MfParams) -> Self {
        Self {
            name: name.into(),
            method,
            params,
        }
    }

    pub fn train(&self, train: &RatingMatrix) -> Result<FactorModel, EvalError> {
        Ok(match &self.method {
            Method::Weighted(src) => train_weighted_mf(train, &src.weights(train)?, &self.params)?,
            Method::SvdPlusPlus => train_svdpp(train, &self.params)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Precision,
    Recall,
    F1,
    Map,
    Mrr,
    Ndcg,
    Rmse,
    Mae,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::Precision,
        Metric::Recall,
        Metric::F1,
        Metric::Map,
        Metric::Mrr,
        Metric::Ndcg,
        Metric::Rmse,
        Metric::Mae,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F1 => "f1",
            Metric::Map => "map",
            Metric::Mrr => "mrr",
            Metric::Ndcg => "ndcg",
            Metric::Rmse => "rmse",
            Metric::Mae => "mae",
        }
    }

    pub fn is_error(self) -> bool {
        matches!(self, Metric::Rmse | Metric::Mae)
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricValues {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub map: f64,
    pub mrr: f64,
    pub ndcg: f64,
    pub rmse: f64,
    pub mae: f64,
}

impl MetricValues {
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::F1 => self.f1,
            Metric::Map => self.map,
            Metric::Mrr => self.mrr,
            Metric::Ndcg => self.ndcg,
            Metric::Rmse => self.rmse,
            Metric::Mae => self.mae,
        }
    }
}

/// Per-unit scores of one algorithm: one entry per test observation for the
/// error metrics, one per (fold, user) for the ranking metrics.
#[derive(Debug, Clone, PartialEq)]
struct Units {
    /// (observation position, estimate - truth)
    errors: Vec<(usize, f64)>,
    /// (fold, user) -> [precision, recall, f1, ap, rr, ndcg]
    users: BTreeMap<(usize, String), [f64; 6]>,
    excluded: usize,
    fallbacks: usize,
}

impl Units {
    fn values(&self) -> Result<MetricValues, EvalError> {
        let (pred, truth): (Vec<f64>, Vec<f64>) =
            self.errors.iter().map(|&(_, e)| (e, 0.0)).unzip();
        let err = error_metrics(&pred, &truth)?;
        let mut sums = [0.0; 6];
        for v in self.users.values() {
            for (s, x) in sums.iter_mut().zip(v) {
                *s += x;
            }
        }
        let n = self.users.len().max(1) as f64;
        let m = sums.map(|s| s / n);
        Ok(MetricValues {
            precision: m[0],
            recall: m[1],
            f1: m[2],
            map: m[3],
            mrr: m[4],
            ndcg: m[5],
            rmse: err.rmse,
            mae: err.mae,
        })
    }

    fn paired(&self, metric: Metric) -> Vec<f64> {
        match metric {
            Metric::Rmse => self.errors.iter().map(|(_, e)| e * e).collect(),
            Metric::Mae => self.errors.iter().map(|(_, e)| e.abs()).collect(),
            m => {
                let col = Metric::ALL
                    .iter()
                    .position(|x| *x == m)
                    .expect("ranking metric");
                self.users.values().map(|v| v[col]).collect()
            }
        }
    }

    fn merge(&mut self, other: Units) {
        self.errors.extend(other.errors);
        self.users.extend(other.users);
        self.excluded += other.excluded;
        self.fallbacks += other.fallbacks;
    }
}

fn score_fold(
    model: &FactorModel,
    r: &RatingMatrix,
    train: &RatingMatrix,
    fold: usize,
    test: &[usize],
    cfg: &EvalConfig,
) -> Result<Units, EvalError> {
    let obs = r.observations();
    let mut rated: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for o in train.observations() {
        rated
            .entry(o.user_id.as_str())
            .or_default()
            .insert(o.item_id.as_str());
    }
    let mut units = Units {
        errors: Vec::with_capacity(test.len()),
        users: BTreeMap::new(),
        excluded: 0,
        fallbacks: 0,
    };
    let mut by_user: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for &p in test {
        let o = &obs[p];
        let est = model.estimate_rating(&o.user_id, &o.item_id, cfg.clamp);
        units.fallbacks += usize::from(est.fallback);
        units.errors.push((p, est.value - o.rating));
        by_user.entry(o.user_id.as_str()).or_default().push(p);
    }
    for (user, positions) in by_user {
        let relevant: BTreeSet<String> = positions
            .iter()
            .filter(|&&p| obs[p].rating >= cfg.relevance_threshold)
            .map(|&p| obs[p].item_id.clone())
            .collect();
        if relevant.is_empty() {
            units.excluded += 1;
            continue;
        }
        let gains: BTreeMap<String, f64> = positions
            .iter()
            .map(|&p| {
                let g = match cfg.gain {
                    GainMode::Rating => obs[p].rating,
                    GainMode::Binary => {
                        f64::from(u8::from(obs[p].rating >= cfg.relevance_threshold))
                    }
                };
                (obs[p].item_id.clone(), g)
            })
            .collect();
        let candidates: Vec<String> = match cfg.candidates {
            CandidateSet::TestItems => positions.iter().map(|&p| obs[p].item_id.clone()).collect(),
            CandidateSet::Unrated => {
                let seen = rated.get(user).cloned().unwrap_or_default();
                r.items()
                    .iter()
                    .filter(|i| !seen.contains(i.as_str()))
                    .cloned()
                    .collect()
            }
        };
        let ranked: Vec<String> = top_n(model, user, &candidates, cfg.n)?
            .into_iter()
            .map(|(i, _)| i)
            .collect();
        let t = topn_metrics(&ranked, &relevant, cfg.n)?;
        let k = ranking_metrics(&ranked, &relevant, &gains, cfg.n)?;
        units.users.insert(
            (fold, user.to_string()),
            [t.precision, t.recall, t.f1, k.ap, k.rr, k.ndcg],
        );
    }
    Ok(units)
}

fn check_plan(r: &RatingMatrix, plan: &FoldPlan, cfg: &EvalConfig) -> Result<(), EvalError> {
    cfg.validate()?;
    if plan.len() != r.len() {
        return Err(EvalError::PlanMismatch {
            plan: plan.len(),
            observations: r.len(),
        });
    }
    Ok(())
}

fn run_fold(
    r: &RatingMatrix,
    plan: &FoldPlan,
    alg: &Algorithm,
    fold: usize,
    cfg: &EvalConfig,
) -> Result<Units, EvalError> {
    let wrap = |e: EvalError| EvalError::Fold {
        fold,
        algorithm: alg.name.clone(),
        source: Box::new(e),
    };
    let train = r.subset(&plan.train(fold));
    let model = alg.train(&train).map_err(wrap)?;
    score_fold(&model, r, &train, fold, &plan.test(fold), cfg).map_err(wrap)
}

/// Scores of one algorithm pooled over all folds.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmRun {
    pub name: String,
    pub values: MetricValues,
    pub per_fold: Vec<MetricValues>,
    /// (fold, user) pairs left out of the ranking metrics.
    pub excluded_users: usize,
    pub ranked_users: usize,
    pub fallbacks: usize,
    units: Units,
}

fn collect(name: &str, per_fold: Vec<Units>) -> Result<AlgorithmRun, EvalError> {
    let fold_values = per_fold
        .iter()
        .map(Units::values)
        .collect::<Result<Vec<_>, _>>()?;
    let mut all = Units {
        errors: Vec::new(),
        users: BTreeMap::new(),
        excluded: 0,
        fallbacks: 0,
    };
    for u in per_fold {
        all.merge(u);
    }
    all.errors.sort_by_key(|&(p, _)| p);
    Ok(AlgorithmRun {
        name: name.to_string(),
        values: all.values()?,
        per_fold: fold_values,
        excluded_users: all.excluded,
        ranked_users: all.users.len(),
        fallbacks: all.fallbacks,
        units: all,
    })
}

/// Trains and scores one algorithm on every fold of `plan`.
pub fn evaluate_algorithm(
    r: &RatingMatrix,
    plan: &FoldPlan,
    alg: &Algorithm,
    cfg: &EvalConfig,
) -> Result<AlgorithmRun, EvalError> {
    check_plan(r, plan, cfg)?;
    let per_fold = (0..plan.k())
        .into_par_iter()
        .map(|f| run_fold(r, plan, alg, f, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    collect(&alg.name, per_fold)
}

/// One algorithm against the baseline on one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub metric: Metric,
    pub algorithm: String,
    pub baseline: String,
    /// `(A - B) / B` in percent; `None` when the baseline value is 0.
    pub relative_diff_pct: Option<f64>,
    pub statistic: Option<f64>,
    pub p_value: f64,
    pub n_effective: usize,
    /// All paired differences were zero; reported as p = 1.
    pub degenerate: bool,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub algorithm: String,
    pub values: MetricValues,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub folds: usize,
    pub seed: u64,
    pub observations: usize,
    pub algorithms: Vec<String>,
    /// The last algorithm; every other one is compared against it.
    pub baseline: String,
    pub values: Vec<MetricValues>,
    pub comparisons: Vec<Comparison>,
    pub excluded_users: usize,
    pub ranked_users: usize,
    pub fallbacks: Vec<usize>,
    pub per_fold: Vec<FoldMetrics>,
}

impl EvalReport {
    pub fn value(&self, algorithm: &str, metric: Metric) -> Option<f64> {
        let p = self.algorithms.iter().position(|a| a == algorithm)?;
        Some(self.values[p].get(metric))
    }

    pub fn comparison(&self, algorithm: &str, metric: Metric) -> Option<&Comparison> {
        self.comparisons
            .iter()
            .find(|c| c.algorithm == algorithm && c.metric == metric)
    }
}

fn compare(
    a: &AlgorithmRun,
    b: &AlgorithmRun,
    metric: Metric,
    alpha: f64,
) -> Result<Comparison, EvalError> {
    let (va, vb) = (a.values.get(metric), b.values.get(metric));
    let relative_diff_pct = (vb != 0.0).then(|| (va - vb) / vb * 100.0);
    let (pa, pb) = (a.units.paired(metric), b.units.paired(metric));
    let base = Comparison {
        metric,
        algorithm: a.name.clone(),
        baseline: b.name.clone(),
        relative_diff_pct,
        statistic: None,
        p_value: 1.0,
        n_effective: 0,
        degenerate: true,
        significant: false,
    };
    match wilcoxon_signed_rank(&pa, &pb) {
        Ok(w) => Ok(Comparison {
            statistic: Some(w.statistic),
            p_value: w.p_value,
            n_effective: w.n_effective,
            degenerate: false,
            significant: w.p_value < alpha,
            ..base
        }),
        Err(EvalError::AllDifferencesZero | EvalError::Empty) => Ok(base),
        Err(e) => Err(e),
    }
}

/// Cross-validates every algorithm on the same folds and compares each one
/// with the last.
pub fn compare_recommenders(
    r: &RatingMatrix,
    plan: &FoldPlan,
    algorithms: &[Algorithm],
    cfg: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    if algorithms.len() < 2 {
        return Err(EvalError::InvalidParam(
            "need at least two algorithms".into(),
        ));
    }
    check_plan(r, plan, cfg)?;
    let k = plan.k();
    let jobs: Vec<(usize, usize)> = (0..algorithms.len())
        .flat_map(|a| (0..k).map(move |f| (a, f)))
        .collect();
    let mut done = jobs
        .par_iter()
        .map(|&(a, f)| run_fold(r, plan, &algorithms[a], f, cfg))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter();
    let runs = algorithms
        .iter()
        .map(|alg| collect(&alg.name, done.by_ref().take(k).collect()))
        .collect::<Result<Vec<_>, _>>()?;

    let baseline = runs.last().expect("at least two runs");
    let mut comparisons = Vec::new();
    for run in &runs[..runs.len() - 1] {
        for metric in Metric::ALL {
            comparisons.push(compare(run, baseline, metric, cfg.alpha)?);
        }
    }
    let per_fold = runs
        .iter()
        .flat_map(|run| {
            run.per_fold
                .iter()
                .enumerate()
                .map(|(fold, v)| FoldMetrics {
                    fold,
                    algorithm: run.name.clone(),
                    values: *v,
                })
        })
        .collect();
    Ok(EvalReport {
        config: *cfg,
        folds: k,
        seed: plan.seed(),
        observations: r.len(),
        algorithms: runs.iter().map(|r| r.name.clone()).collect(),
        baseline: baseline.name.clone(),
        values: runs.iter().map(|r| r.values).collect(),
        comparisons,
        excluded_users: baseline.excluded_users,
        ranked_users: baseline.ranked_users,
        fallbacks: runs.iter().map(|r| r.fallbacks).collect(),
        per_fold,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best: MfParams,
    pub best_map: f64,
    /// MAP of every grid point, in grid order.
    pub scores: Vec<(MfParams, f64)>,
}

/// Cross-validated MAP for each parameter set; the first best one wins.
pub fn grid_search(
    r: &RatingMatrix,
    plan: &FoldPlan,
    template: &Algorithm,
    grid: &[MfParams],
    cfg: &EvalConfig,
) -> Result<GridResult, EvalError> {
    if grid.is_empty() {
        return Err(EvalError::InvalidParam("empty parameter grid".into()));
    }
    let scores = grid
        .iter()
        .map(|p| {
            let alg = Algorithm {
                params: *p,
                ..template.clone()
            };
            Ok((*p, evaluate_algorithm(r, plan, &alg, cfg)?.values.map))
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let (best, best_map) = scores
        .iter()
        .fold(scores[0], |acc, s| if s.1 > acc.1 { *s } else { acc });
    Ok(GridResult {
        best,
        best_map,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recommend::Observation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matrix(seed: u64, users: usize, items: usize) -> RatingMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut o = Vec::new();
        for u in 0..users {
            for i in 0..items {
                if rng.random_bool(0.6) {
                    let base = 1.0 + ((u * 3 + i * 5) % 5) as f64;
                    o.push(Observation {
                        user_id: format!("u{u:02}"),
                        item_id: format!("i{i:02}"),
                        rating: base,
                        review_id: format!("r{u:02}{i:02}"),
                    });
                }
            }
        }
        RatingMatrix::from_observations(o).unwrap()
    }

    fn params() -> MfParams {
        MfParams {
            k: 4,
            epochs: 15,
            ..Default::default()
        }
    }

    #[test]
    fn identical_algorithms_tie() {
        let r = matrix(1, 12, 10);
        let plan = FoldPlan::new(r.len(), 5, 7).unwrap();
        let a = Algorithm::new("a", Method::Weighted(WeightSource::Uniform(1.0)), params());
        let b = Algorithm::new("b", Method::Weighted(WeightSource::Uniform(1.0)), params());
        let rep = compare_recommenders(&r, &plan, &[a, b], &EvalConfig::default()).unwrap();
        assert_eq!(rep.values[0], rep.values[1]);
        for c in &rep.comparisons {
            assert_eq!(c.relative_diff_pct, Some(0.0), "{:?}", c.metric);
            assert!(c.degenerate && !c.significant && c.p_value == 1.0);
        }
        let v = rep.values[0];
        for m in Metric::ALL.iter().filter(|m| !m.is_error()) {
            assert!((0.0..=1.0).contains(&v.get(*m)));
        }
        assert!(v.rmse >= v.mae && v.mae >= 0.0);
        assert_eq!(rep.per_fold.len(), 10);
        assert!(rep.ranked_users + rep.excluded_users >= 12);
    }

    #[test]
    fn deterministic_and_order_free() {
        let r = matrix(2, 10, 10);
        let plan = FoldPlan::new(r.len(), 3, 1).unwrap();
        let algs = [
            Algorithm::new("w", Method::Weighted(WeightSource::Uniform(0.5)), params()),
            Algorithm::new("pp", Method::SvdPlusPlus, params()),
        ];
        let cfg = EvalConfig::default();
        let x = compare_recommenders(&r, &plan, &algs, &cfg).unwrap();
        let y = compare_recommenders(&r, &plan, &algs, &cfg).unwrap();
        assert_eq!(x, y);
        let mut shuffled = r.observations().to_vec();
        shuffled.reverse();
        let r2 = RatingMatrix::from_observations(shuffled).unwrap();
        assert_eq!(compare_recommenders(&r2, &plan, &algs, &cfg).unwrap(), x);
        let c = x.comparison("w", Metric::Rmse).unwrap();
        let want = (x.values[0].rmse - x.values[1].rmse) / x.values[1].rmse * 100.0;
        assert!((c.relative_diff_pct.unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn pooled_metrics_match_manual_fold_loop() {
        let r = matrix(3, 8, 8);
        let plan = FoldPlan::new(r.len(), 4, 9).unwrap();
        let alg = Algorithm::new(
            "plain",
            Method::Weighted(WeightSource::Uniform(1.0)),
            params(),
        );
        let run = evaluate_algorithm(&r, &plan, &alg, &EvalConfig::default()).unwrap();
        let (mut pred, mut truth) = (Vec::new(), Vec::new());
        for f in 0..4 {
            let m = alg.train(&r.subset(&plan.train(f))).unwrap();
            for p in plan.test(f) {
                let o = &r.observations()[p];
                pred.push(m.estimate_rating(&o.user_id, &o.item_id, true).value);
                truth.push(o.rating);
            }
        }
        let e = error_metrics(&pred, &truth).unwrap();
        assert!((run.values.rmse - e.rmse).abs() < 1e-12);
        assert!((run.values.mae - e.mae).abs() < 1e-12);
    }

    #[test]
    fn fold_failure_names_the_fold() {
        let r = matrix(4, 6, 6);
        let plan = FoldPlan::new(r.len(), 2, 0).unwrap();
        let bad = MfParams { k: 0, ..params() };
        let algs = [
            Algorithm::new("ok", Method::SvdPlusPlus, params()),
            Algorithm::new("bad", Method::SvdPlusPlus, bad),
        ];
        let err = compare_recommenders(&r, &plan, &algs, &EvalConfig::default()).unwrap_err();
        assert!(
            matches!(err, EvalError::Fold { ref algorithm, .. } if algorithm == "bad"),
            "{err}"
        );
        let short = FoldPlan::new(r.len() - 1, 2, 0).unwrap();
        assert!(matches!(
            compare_recommenders(&r, &short, &algs, &EvalConfig::default()),
            Err(EvalError::PlanMismatch { .. })
        ));
    }

    #[test]
    fn grid_picks_best_map() {
        let r = matrix(5, 10, 8);
        let plan = FoldPlan::new(r.len(), 3, 2).unwrap();
        let alg = Algorithm::new("w", Method::Weighted(WeightSource::Uniform(1.0)), params());
        let grid: Vec<MfParams> = [0.0, 0.1, 1.0]
            .iter()
            .map(|&lambda| MfParams { lambda, ..params() })
            .collect();
        let g = grid_search(&r, &plan, &alg, &grid, &EvalConfig::default()).unwrap();
        assert_eq!(g.scores.len(), 3);
        assert!(g.scores.iter().all(|s| s.1 <= g.best_map));
        let first_best = g.scores.iter().find(|s| s.1 == g.best_map).unwrap();
        assert_eq!(first_best.0, g.best);
    }
}
