use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::EvalError;
use crate::regress::ranks;

/// Largest effective sample size handled by exact enumeration.
pub const EXACT_MAX_N: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Smaller of the two signed-rank sums.
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_value: f64,
    pub n_effective: usize,
    pub exact: bool,
}

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are dropped; tied magnitudes share mid-ranks.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(EvalError::Empty);
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    if diffs.is_empty() {
        return Err(EvalError::AllDifferencesZero);
    }
    let n = diffs.len();
    let mags: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let r = ranks(&mags).expect("finite magnitudes");
    let w_plus: f64 = diffs
        .iter()
        .zip(&r)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;
    let w = w_plus.min(w_minus);
    let (p_value, exact) = if n <= EXACT_MAX_N {
        (exact_p(&r, w), true)
    } else {
        (normal_p(&r, w), false)
    };
    Ok(WilcoxonResult {
        statistic: w,
        w_plus,
        w_minus,
        p_value,
        n_effective: n,
        exact,
    })
}

/// P(min(W+, W-) <= w) under random signs, by counting subset sums of the
/// doubled (hence integral) ranks.
fn exact_p(ranks: &[f64], w: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0f64; total + 1];
    counts[0] = 1.0;
    for &d in &doubled {
        for s in (d..=total).rev() {
            counts[s] += counts[s - d];
        }
    }
    let w2 = (2.0 * w).round() as usize;
    let tail: f64 = counts
        .iter()
        .enumerate()
        .filter(|&(s, _)| s.min(total - s) <= w2)
        .map(|(_, c)| c)
        .sum();
    (tail / 2f64.powi(ranks.len() as i32)).min(1.0)
}

/// Normal approximation with tie correction and no continuity correction.
fn normal_p(ranks: &[f64], w: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && sorted[end] == sorted[start] {
            end += 1;
        }
        let t = (end - start) as f64;
        tie_term += t * t * t - t;
        start = end;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = (w - mean) / var.sqrt();
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * std.cdf(z)).min(1.0)
}
