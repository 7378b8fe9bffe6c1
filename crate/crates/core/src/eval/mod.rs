//! Recommender evaluation: accuracy and ranking metrics, the signed-rank
//! test and cross-validated algorithm comparison.

mod compare;
mod metrics;
mod wilcoxon;

use thiserror::Error;

use crate::folds::FoldError;
use crate::recommend::RecommendError;
use crate::regress::RegressError;

pub use crate::folds::FoldPlan;
pub use compare::{
    compare_recommenders, evaluate_algorithm, grid_search, Algorithm, AlgorithmRun, CandidateSet,
    Comparison, EvalConfig, EvalReport, FoldMetrics, GainMode, GridResult, Method, Metric,
    MetricValues, WeightSource,
};
pub use metrics::{
    error_metrics, ranking_metrics, topn_metrics, ErrorMetrics, RankingMetrics, TopNMetrics,
};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonResult, EXACT_MAX_N};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    Empty,
    #[error("non-finite value")]
    NonFinite,
    #[error("user has no relevant items")]
    NoRelevantItems,
    #[error("all paired differences are zero")]
    AllDifferencesZero,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("fold plan covers {plan} observations, matrix has {observations}")]
    PlanMismatch { plan: usize, observations: usize },
    #[error("fold {fold}, {algorithm}: {source}")]
    Fold {
        fold: usize,
        algorithm: String,
        source: Box<EvalError>,
    },
    #[error(transparent)]
    Recommend(#[from] RecommendError),
    #[error(transparent)]
    Regress(#[from] RegressError),
    #[error(transparent)]
    Folds(#[from] FoldError),
}
