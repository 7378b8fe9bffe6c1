//! Helpfulness regressors and the correlation / variable-impact study.

mod corr;
mod forest;
mod linear;
mod study;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{Feature, FeatureError};
use crate::folds::FoldError;

pub use corr::{correlation_p_value, pearson, pearson_matrix, ranks, spearman};
pub use forest::{train_forest, ForestModel, ForestParams, Node, RegressionTree};
pub use linear::{permutation_p_values, train_linear, LinearModel, LinearParams, Scaler};
pub use study::{
    run_study, run_study_strict, CoefficientTable, CorrelationProtocol, CorrelationRow,
    ImportanceTable, StudyConfig, StudyReport,
};

#[derive(Debug, Error)]
pub enum RegressError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("correlation undefined for a constant input")]
    ConstantInput,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("no training rows")]
    NoRows,
    #[error("expected {expected} features, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidParam(String),
    #[error(transparent)]
    Fold(#[from] FoldError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

pub(crate) fn check_design(x: &[Vec<f64>], y: &[f64]) -> Result<(), RegressError> {
    if x.is_empty() {
        return Err(RegressError::NoRows);
    }
    if x.len() != y.len() {
        return Err(RegressError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let d = x[0].len();
    if d == 0 {
        return Err(RegressError::Dimension {
            expected: 1,
            got: 0,
        });
    }
    for row in x {
        if row.len() != d {
            return Err(RegressError::Dimension {
                expected: d,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(RegressError::NonFinite);
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(RegressError::NonFinite);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelName {
    M1,
    M2,
    M3,
}

/// A named, ordered feature subset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: ModelName,
    pub features: Vec<Feature>,
}

impl ModelSpec {
    pub fn new(name: ModelName) -> Self {
        let features = match name {
            ModelName::M1 => vec![Feature::Rat, Feature::Len, Feature::Ugr],
            ModelName::M2 => vec![Feature::Rat, Feature::Len, Feature::Ugr, Feature::Pol],
            ModelName::M3 => Feature::ALL.to_vec(),
        };
        Self { name, features }
    }

    pub fn all() -> Vec<ModelSpec> {
        [ModelName::M1, ModelName::M2, ModelName::M3]
            .into_iter()
            .map(ModelSpec::new)
            .collect()
    }
}

impl std::fmt::Display for ModelName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for ModelName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "M1" => Ok(ModelName::M1),
            "M2" => Ok(ModelName::M2),
            "M3" => Ok(ModelName::M3),
            other => Err(format!("unknown model {other:?}; expected M1, M2 or M3")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegressorKind {
    Linear,
    Forest,
}

impl RegressorKind {
    /// Suffix used in model labels: `L` for linear, `NL` for the forest.
    pub fn suffix(self) -> &'static str {
        match self {
            RegressorKind::Linear => "L",
            RegressorKind::Forest => "NL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrainedModel {
    Linear(LinearModel),
    Forest(ForestModel),
}

/// A prediction, with a flag set when it was clamped into `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub value: f64,
    pub clamped: bool,
}

/// Largest double below 1.
pub const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

impl TrainedModel {
    pub fn train(
        kind: RegressorKind,
        x: &[Vec<f64>],
        y: &[f64],
        linear: &LinearParams,
        forest: &ForestParams,
    ) -> Result<Self, RegressError> {
        Ok(match kind {
            RegressorKind::Linear => TrainedModel::Linear(train_linear(x, y, linear)?),
            RegressorKind::Forest => TrainedModel::Forest(train_forest(x, y, forest)?),
        })
    }

    pub fn kind(&self) -> RegressorKind {
        match self {
            TrainedModel::Linear(_) => RegressorKind::Linear,
            TrainedModel::Forest(_) => RegressorKind::Forest,
        }
    }

    pub fn predict_raw(&self, x: &[f64]) -> Result<f64, RegressError> {
        match self {
            TrainedModel::Linear(m) => m.predict_raw(x),
            TrainedModel::Forest(m) => m.predict_raw(x),
        }
    }
}

/// Model output, optionally clamped into `[0, 1)` for use as a helpfulness value.
pub fn predict(model: &TrainedModel, x: &[f64], clamp: bool) -> Result<Prediction, RegressError> {
    let raw = model.predict_raw(x)?;
    if clamp {
        let value = raw.clamp(0.0, BELOW_ONE);
        Ok(Prediction {
            value,
            clamped: value != raw,
        })
    } else {
        Ok(Prediction {
            value: raw,
            clamped: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs_are_nested() {
        let all = ModelSpec::all();
        assert_eq!(all[0].features.len(), 3);
        assert_eq!(all[1].features.len(), 4);
        assert_eq!(all[2].features.len(), 11);
        for w in all.windows(2) {
            assert!(w[0].features.iter().all(|f| w[1].features.contains(f)));
        }
    }

    #[test]
    fn clamping_is_flagged() {
        let m = TrainedModel::Linear(LinearModel {
            bias: 1.3,
            weights: vec![0.0],
            scaler: None,
            params: LinearParams::default(),
            loss_history: vec![],
        });
        let p = predict(&m, &[0.5], true).unwrap();
        assert!(p.clamped && p.value < 1.0);
        let p = predict(&m, &[0.5], false).unwrap();
        assert!(!p.clamped && p.value == 1.3);
        assert!(BELOW_ONE < 1.0 && BELOW_ONE > 0.999_999);
    }
}
