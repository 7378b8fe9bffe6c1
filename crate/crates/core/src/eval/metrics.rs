use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub rmse: f64,
    pub mae: f64,
}

pub fn error_metrics(predicted: &[f64], actual: &[f64]) -> Result<ErrorMetrics, EvalError> {
    if predicted.len() != actual.len() {
        return Err(EvalError::LengthMismatch {
            left: predicted.len(),
            right: actual.len(),
        });
    }
    if predicted.is_empty() {
        return Err(EvalError::Empty);
    }
    let n = predicted.len() as f64;
    let (mut se, mut ae) = (0.0, 0.0);
    for (p, a) in predicted.iter().zip(actual) {
        let e = p - a;
        se += e * e;
        ae += e.abs();
    }
    Ok(ErrorMetrics {
        rmse: (se / n).sqrt(),
        mae: ae / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopNMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn check(relevant: &BTreeSet<String>, n: usize) -> Result<(), EvalError> {
    if n == 0 {
        return Err(EvalError::InvalidParam("N must be >= 1".into()));
    }
    if relevant.is_empty() {
        return Err(EvalError::NoRelevantItems);
    }
    Ok(())
}

/// Precision is hits over `min(N, |recommended|)`; recall is hits over `|relevant|`.
pub fn topn_metrics(
    recommended: &[String],
    relevant: &BTreeSet<String>,
    n: usize,
) -> Result<TopNMetrics, EvalError> {
    check(relevant, n)?;
    let shown = &recommended[..n.min(recommended.len())];
    let hits = shown.iter().filter(|i| relevant.contains(*i)).count() as f64;
    let precision = if shown.is_empty() {
        0.0
    } else {
        hits / shown.len() as f64
    };
    let recall = hits / relevant.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(TopNMetrics {
        precision,
        recall,
        f1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingMetrics {
    /// Average precision of this user; MAP is its mean over users.
    pub ap: f64,
    /// Reciprocal rank of the first hit; MRR is its mean over users.
    pub rr: f64,
    pub ndcg: f64,
}

/// Ranking quality of one user's list cut at `n`. Items missing from `gains`
/// have gain 0. The ideal DCG uses the `n` largest gains.
pub fn ranking_metrics(
    recommended: &[String],
    relevant: &BTreeSet<String>,
    gains: &BTreeMap<String, f64>,
    n: usize,
) -> Result<RankingMetrics, EvalError> {
    check(relevant, n)?;
    let shown = &recommended[..n.min(recommended.len())];
    let mut hits = 0usize;
    let mut precision_sum = 0.0;
    let mut rr = 0.0;
    let mut dcg = 0.0;
    for (k, item) in shown.iter().enumerate() {
        let rank = k + 1;
        if relevant.contains(item) {
            hits += 1;
            precision_sum += hits as f64 / rank as f64;
            if rr == 0.0 {
                rr = 1.0 / rank as f64;
            }
        }
        dcg += gains.get(item).copied().unwrap_or(0.0) / (rank as f64 + 1.0).log2();
    }
    let mut ideal: Vec<f64> = gains.values().copied().collect();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(n)
        .enumerate()
        .map(|(k, g)| g / (k as f64 + 2.0).log2())
        .sum();
    Ok(RankingMetrics {
        ap: precision_sum / relevant.len().min(n) as f64,
        rr,
        ndcg: if idcg > 0.0 {
            (dcg / idcg).min(1.0)
        } else {
            0.0
        },
    })
}
