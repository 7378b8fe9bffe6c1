//! Cross-validated correlation study plus full-data coefficients and importances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    correlation_p_value, pearson, pearson_matrix, permutation_p_values, spearman, ForestParams,
    LinearParams, ModelName, ModelSpec, RegressError, RegressorKind, TrainedModel,
};
use crate::corpus::Corpus;
use crate::features::{Feature, FeatureError, FeatureExtractor, FeatureMatrix, FeatureRow};
use crate::folds::FoldPlan;

/// How out-of-fold predictions become one correlation value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationProtocol {
    /// One correlation over all concatenated out-of-fold predictions.
    #[default]
    Pooled,
    /// Mean of the per-fold correlations.
    PerFoldMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub folds: usize,
    /// Seed of the fold assignment.
    pub seed: u64,
    pub models: Vec<ModelName>,
    pub regressors: Vec<RegressorKind>,
    pub linear: LinearParams,
    pub forest: ForestParams,
    pub protocol: CorrelationProtocol,
    /// Shuffles per linear coefficient significance test; 0 disables it.
    pub permutations: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            seed: 0,
            models: vec![ModelName::M1, ModelName::M2, ModelName::M3],
            regressors: vec![RegressorKind::Linear, RegressorKind::Forest],
            linear: LinearParams::default(),
            forest: ForestParams::default(),
            protocol: CorrelationProtocol::Pooled,
            permutations: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub model: ModelName,
    pub regressor: RegressorKind,
    /// e.g. `M3_NL`.
    pub label: String,
    pub pearson: Option<f64>,
    pub pearson_p: Option<f64>,
    pub spearman: Option<f64>,
    pub spearman_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub model: ModelName,
    pub standardized: bool,
    pub bias: f64,
    pub features: Vec<Feature>,
    pub weights: Vec<f64>,
    pub p_values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceTable {
    pub model: ModelName,
    pub features: Vec<Feature>,
    pub importances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub reviews: usize,
    /// Features were rebuilt from each training fold alone.
    pub strict_folds: bool,
    pub correlations: Vec<CorrelationRow>,
    pub coefficients: Vec<CoefficientTable>,
    pub importances: Vec<ImportanceTable>,
    /// The eleven features followed by helpfulness.
    pub variables: Vec<String>,
    pub pearson_matrix: Vec<Vec<Option<f64>>>,
}

impl StudyReport {
    pub fn correlation(
        &self,
        model: ModelName,
        regressor: RegressorKind,
    ) -> Option<&CorrelationRow> {
        self.correlations
            .iter()
            .find(|r| r.model == model && r.regressor == regressor)
    }
}

struct FoldData {
    train: FeatureMatrix,
    test: FeatureMatrix,
    test_idx: Vec<usize>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn subset(m: &FeatureMatrix, idx: &[usize]) -> FeatureMatrix {
    FeatureMatrix {
        rows: idx.iter().map(|&i| m.rows[i].clone()).collect(),
    }
}

fn plan(n: usize, cfg: &StudyConfig) -> Result<FoldPlan, RegressError> {
    let plan = FoldPlan::new(n, cfg.folds, cfg.seed)?;
    for f in 0..plan.k() {
        let size = plan.test(f).len();
        if size < 2 {
            return Err(RegressError::TooFewSamples {
                needed: 2,
                got: size,
            });
        }
    }
    Ok(plan)
}

impl StudyConfig {
    pub fn validate(&self) -> Result<(), RegressError> {
        validate(self)
    }
}

fn validate(cfg: &StudyConfig) -> Result<(), RegressError> {
    cfg.linear.validate()?;
    cfg.forest.validate()?;
    if cfg.models.is_empty() || cfg.regressors.is_empty() {
        return Err(RegressError::InvalidParam(
            "study needs at least one model and one regressor".into(),
        ));
    }
    Ok(())
}

fn correlate(pred: &[f64], obs: &[f64]) -> (Option<f64>, Option<f64>) {
    (
        pearson(pred, obs).ok().and_then(finite),
        spearman(pred, obs).ok().and_then(finite),
    )
}

fn correlation_row(
    folds: &[FoldData],
    n: usize,
    observed: &[f64],
    spec: &ModelSpec,
    kind: RegressorKind,
    cfg: &StudyConfig,
) -> Result<CorrelationRow, RegressError> {
    let per_fold = folds
        .iter()
        .map(|fd| {
            let model = TrainedModel::train(
                kind,
                &fd.train.design(&spec.features),
                &fd.train.helpfulness(),
                &cfg.linear,
                &cfg.forest,
            )?;
            fd.test
                .design(&spec.features)
                .iter()
                .map(|x| model.predict_raw(x))
                .collect::<Result<Vec<f64>, _>>()
        })
        .collect::<Result<Vec<_>, RegressError>>()?;

    let (p, s) = match cfg.protocol {
        CorrelationProtocol::Pooled => {
            let mut pooled = vec![f64::NAN; n];
            for (fd, preds) in folds.iter().zip(&per_fold) {
                for (&i, &v) in fd.test_idx.iter().zip(preds) {
                    pooled[i] = v;
                }
            }
            correlate(&pooled, observed)
        }
        CorrelationProtocol::PerFoldMean => {
            let mut ps = Vec::new();
            let mut ss = Vec::new();
            for (fd, preds) in folds.iter().zip(&per_fold) {
                let (p, s) = correlate(preds, &fd.test.helpfulness());
                ps.push(p);
                ss.push(s);
            }
            let mean = |v: Vec<Option<f64>>| -> Option<f64> {
                let k = v.len() as f64;
                v.into_iter().sum::<Option<f64>>().map(|t| t / k)
            };
            (mean(ps), mean(ss))
        }
    };
    Ok(CorrelationRow {
        model: spec.name,
        regressor: kind,
        label: format!("{}_{}", spec.name, kind.suffix()),
        pearson: p,
        pearson_p: p.and_then(|r| finite(correlation_p_value(r, n))),
        spearman: s,
        spearman_p: s.and_then(|r| finite(correlation_p_value(r, n))),
    })
}

fn assemble(
    full: &FeatureMatrix,
    folds: Vec<FoldData>,
    cfg: &StudyConfig,
    strict: bool,
) -> Result<StudyReport, RegressError> {
    validate(cfg)?;
    let n = full.len();
    let observed = full.helpfulness();
    let specs: Vec<ModelSpec> = cfg.models.iter().map(|&m| ModelSpec::new(m)).collect();
    let jobs: Vec<(RegressorKind, &ModelSpec)> = cfg
        .regressors
        .iter()
        .flat_map(|&k| specs.iter().map(move |s| (k, s)))
        .collect();
    let correlations = jobs
        .par_iter()
        .map(|&(kind, spec)| correlation_row(&folds, n, &observed, spec, kind, cfg))
        .collect::<Result<Vec<_>, _>>()?;

    let mut coefficients = Vec::new();
    let mut importances = Vec::new();
    for spec in &specs {
        let x = full.design(&spec.features);
        if cfg.regressors.contains(&RegressorKind::Linear) {
            let m = super::train_linear(&x, &observed, &cfg.linear)?;
            let p_values = if cfg.permutations > 0 {
                Some(permutation_p_values(
                    &x,
                    &observed,
                    &cfg.linear,
                    cfg.permutations,
                )?)
            } else {
                None
            };
            coefficients.push(CoefficientTable {
                model: spec.name,
                standardized: cfg.linear.standardize,
                bias: m.bias,
                features: spec.features.clone(),
                weights: m.weights,
                p_values,
            });
        }
        if cfg.regressors.contains(&RegressorKind::Forest) {
            let m = super::train_forest(&x, &observed, &cfg.forest)?;
            importances.push(ImportanceTable {
                model: spec.name,
                features: spec.features.clone(),
                importances: m.importances,
            });
        }
    }

    let mut columns: Vec<Vec<f64>> = Feature::ALL.iter().map(|&f| full.column(f)).collect();
    columns.push(observed);
    let mut variables: Vec<String> = Feature::ALL.iter().map(|f| f.name().to_string()).collect();
    variables.push("helpfulness".into());
    let matrix = pearson_matrix(&columns)
        .into_iter()
        .map(|row| row.into_iter().map(finite).collect())
        .collect();

    Ok(StudyReport {
        config: cfg.clone(),
        reviews: n,
        strict_folds: strict,
        correlations,
        coefficients,
        importances,
        variables,
        pearson_matrix: matrix,
    })
}

/// Study over a feature matrix computed once on the whole corpus.
pub fn run_study(features: &FeatureMatrix, cfg: &StudyConfig) -> Result<StudyReport, RegressError> {
    validate(cfg)?;
    let plan = plan(features.len(), cfg)?;
    let folds = (0..plan.k())
        .map(|f| {
            let test_idx = plan.test(f);
            FoldData {
                train: subset(features, &plan.train(f)),
                test: subset(features, &test_idx),
                test_idx,
            }
        })
        .collect();
    assemble(features, folds, cfg, false)
}

/// Study where each fold's TF/IDF index and aggregates come from its training
/// reviews only. `fit` builds an extractor over a corpus.
pub fn run_study_strict<F>(
    corpus: &Corpus,
    fit: F,
    cfg: &StudyConfig,
) -> Result<StudyReport, RegressError>
where
    F: Fn(&Corpus) -> Result<FeatureExtractor, FeatureError> + Sync,
{
    validate(cfg)?;
    let plan = plan(corpus.len(), cfg)?;
    let folds = (0..plan.k())
        .into_par_iter()
        .map(|f| {
            let test_idx = plan.test(f);
            let extractor = fit(&corpus.subset(&plan.train(f)))?;
            let rows = test_idx
                .iter()
                .map(|&i| {
                    let r = &corpus.reviews()[i];
                    Ok(FeatureRow {
                        review_id: r.review_id.clone(),
                        user_id: r.user_id.clone(),
                        item_id: r.item_id.clone(),
                        features: extractor.features_for(r)?,
                    })
                })
                .collect::<Result<Vec<_>, FeatureError>>()?;
            Ok(FoldData {
                train: extractor.matrix()?,
                test: FeatureMatrix { rows },
                test_idx,
            })
        })
        .collect::<Result<Vec<_>, RegressError>>()?;
    let full = fit(corpus)?.matrix()?;
    assemble(&full, folds, cfg, true)
}
