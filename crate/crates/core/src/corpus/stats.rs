//! Descriptive statistics over a corpus, one row per summarized variable.

use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError};

/// Standard-deviation estimator.
///
/// With `Sample`, per-user / per-item spread rows only include groups of at
/// least two reviews; a one-review group has no sample deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StdEstimator {
    Population,
    #[default]
    Sample,
}

/// Text-derived per-review measures, aligned with corpus order.
#[derive(Debug, Clone, Default)]
pub struct ReviewMeasures {
    /// Raw word count.
    pub length: Vec<f64>,
    /// Polarity on the rating scale [1, 5].
    pub polarity: Vec<f64>,
    /// Rating-polarity coherence on [1, 5].
    pub coherence: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub variable: String,
    pub count: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub median: Option<f64>,
}

impl StatRow {
    fn count_only(variable: &str, count: usize) -> Self {
        StatRow {
            variable: variable.to_string(),
            count,
            min: None,
            max: None,
            mean: None,
            std: None,
            median: None,
        }
    }

    fn summarize(variable: &str, values: &[f64], estimator: StdEstimator) -> Self {
        if values.is_empty() {
            return Self::count_only(variable, 0);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        StatRow {
            variable: variable.to_string(),
            count: n,
            min: Some(sorted[0]),
            max: Some(sorted[n - 1]),
            mean: Some(mean(values)),
            std: std_dev(values, estimator),
            median: Some(median),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub estimator: StdEstimator,
    pub rows: Vec<StatRow>,
}

impl StatsReport {
    pub fn row(&self, variable: &str) -> Option<&StatRow> {
        self.rows.iter().find(|r| r.variable == variable)
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn std_dev(values: &[f64], estimator: StdEstimator) -> Option<f64> {
    let n = values.len();
    let divisor = match estimator {
        StdEstimator::Population if n >= 1 => n as f64,
        StdEstimator::Sample if n >= 2 => (n - 1) as f64,
        _ => return None,
    };
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Some((ss / divisor).sqrt())
}

/// Computes the summary table. Text rows appear only when `measures` is given.
pub fn descriptive_stats(
    corpus: &Corpus,
    measures: Option<&ReviewMeasures>,
    estimator: StdEstimator,
) -> Result<StatsReport, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::Empty);
    }
    let n = corpus.len();
    if let Some(m) = measures {
        for col in [&m.length, &m.polarity, &m.coherence] {
            if col.len() != n {
                return Err(CorpusError::MeasureLength {
                    expected: n,
                    got: col.len(),
                });
            }
        }
    }
    let reviews = corpus.reviews();
    let ratings: Vec<f64> = reviews.iter().map(|r| f64::from(r.stars)).collect();

    let group_sizes = |groups: &std::collections::BTreeMap<String, Vec<usize>>| -> Vec<f64> {
        groups.values().map(|v| v.len() as f64).collect()
    };
    let group_std =
        |groups: &std::collections::BTreeMap<String, Vec<usize>>, column: &[f64]| -> Vec<f64> {
            groups
                .values()
                .filter_map(|positions| {
                    let vals: Vec<f64> = positions.iter().map(|&p| column[p]).collect();
                    std_dev(&vals, estimator)
                })
                .collect()
        };

    let mut rows = vec![
        StatRow::count_only("Number of reviews", n),
        StatRow::count_only("Number of users", corpus.user_count()),
        StatRow::count_only("Number of items", corpus.item_count()),
        StatRow::summarize(
            "Number of reviews x user",
            &group_sizes(corpus.by_user()),
            estimator,
        ),
        StatRow::summarize(
            "Number of reviews x item",
            &group_sizes(corpus.by_item()),
            estimator,
        ),
        StatRow::summarize(
            "Number of helpfulness votes x review",
            &reviews
                .iter()
                .map(|r| r.total_votes() as f64)
                .collect::<Vec<_>>(),
            estimator,
        ),
        StatRow::summarize("Rating values", &ratings, estimator),
    ];
    if let Some(m) = measures {
        rows.push(StatRow::summarize("Review length", &m.length, estimator));
        rows.push(StatRow::summarize(
            "Review polarity",
            &m.polarity,
            estimator,
        ));
        rows.push(StatRow::summarize(
            "Rating-polarity coherence",
            &m.coherence,
            estimator,
        ));
    }
    rows.push(StatRow::summarize(
        "STD of rating values x user",
        &group_std(corpus.by_user(), &ratings),
        estimator,
    ));
    rows.push(StatRow::summarize(
        "STD of rating values x item",
        &group_std(corpus.by_item(), &ratings),
        estimator,
    ));
    if let Some(m) = measures {
        for (label, column) in [
            ("review polarity", &m.polarity),
            ("review length", &m.length),
        ] {
            rows.push(StatRow::summarize(
                &format!("STD of {label} x user"),
                &group_std(corpus.by_user(), column),
                estimator,
            ));
            rows.push(StatRow::summarize(
                &format!("STD of {label} x item"),
                &group_std(corpus.by_item(), column),
                estimator,
            ));
        }
    }
    Ok(StatsReport { estimator, rows })
}
