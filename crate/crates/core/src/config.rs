//! Pipeline configuration: one TOML file with a section per stage.
//!
//! ```toml
//! [data]
//! reviews = "reviews.jsonl"
//! items = "business.jsonl"
//! preset = "hotel"
//! min_reviews_per_user = 10
//!
//! [study]
//! folds = 5
//! seed = 7
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Relative paths are resolved against the directory holding the file.
//! Every seed has a fixed default; nothing is drawn from the clock.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CategoryPreset, InputFormat, MalformedPolicy, StdEstimator};
use crate::eval::{CandidateSet, EvalConfig, GainMode};
use crate::features::{DeviationMode, FeatureConfig, LogBase};
use crate::recommend::MfParams;
use crate::regress::{ForestParams, StudyConfig};
use crate::report::ReportFormat;
use crate::text::{DocUniverse, IdfMode, TfIdfConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config syntax: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("{field}: path {path} does not exist")]
    MissingPath { field: &'static str, path: String },
    #[error("{0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

fn default_format() -> InputFormat {
    InputFormat::JsonLines
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub reviews: Option<PathBuf>,
    pub items: Option<PathBuf>,
    #[serde(default = "default_format")]
    pub format: InputFormat,
    pub malformed: MalformedPolicy,
    /// Built-in tag list, merged with `categories`.
    pub preset: Option<CategoryPreset>,
    pub categories: Vec<String>,
    pub min_reviews_per_user: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            reviews: None,
            items: None,
            format: default_format(),
            malformed: MalformedPolicy::default(),
            preset: None,
            categories: Vec::new(),
            min_reviews_per_user: 1,
        }
    }
}

impl DataConfig {
    /// Tags of the category filter; empty means no filtering.
    pub fn tags(&self) -> BTreeSet<String> {
        let mut tags: BTreeSet<String> = self.categories.iter().cloned().collect();
        if let Some(p) = self.preset {
            tags.extend(p.tags().iter().map(|t| t.to_string()));
        }
        tags
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextConfig {
    /// One word per line; the bundled list when absent.
    pub stopwords: Option<PathBuf>,
    /// `surface<TAB>lemma` lines; the bundled table when absent.
    pub lemmas: Option<PathBuf>,
    /// `term<TAB>valence` files, one scorer each; the bundled lexicon when empty.
    pub lexicons: Vec<PathBuf>,
    pub idf: IdfMode,
    pub universe: DocUniverse,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSection {
    pub log_base: LogBase,
    pub deviation: DeviationMode,
    /// Refit text statistics and aggregates on each study training fold.
    pub strict_folds: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsSection {
    pub estimator: StdEstimator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecommendSection {
    pub mf: MfParams,
    /// Forest behind the helpfulness weights of vote-less reviews.
    pub forest: ForestParams,
    /// Precomputed `user_id,item_id,weight` file; computed when absent.
    pub weights: Option<PathBuf>,
    /// Recommendations per user.
    pub n: usize,
}

impl Default for RecommendSection {
    fn default() -> Self {
        Self {
            mf: MfParams::default(),
            forest: ForestParams::default(),
            weights: None,
            n: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmMethod {
    /// Weighted MF, weights from votes or a per-fold forest.
    HelpfulnessMf,
    /// Weighted MF with every weight 1.
    PlainMf,
    /// Weighted MF with weights read from `recommend.weights`.
    FixedWeightsMf,
    SvdPlusPlus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub name: String,
    pub method: AlgorithmMethod,
    /// Overrides `recommend.mf` for this algorithm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<MfParams>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub lambdas: Vec<f64>,
    pub epochs: Vec<usize>,
}

impl GridSpec {
    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty() && self.epochs.is_empty()
    }

    /// Every lambda x epochs combination on top of `base`.
    pub fn expand(&self, base: &MfParams) -> Vec<MfParams> {
        let lambdas = if self.lambdas.is_empty() {
            vec![base.lambda]
        } else {
            self.lambdas.clone()
        };
        let epochs = if self.epochs.is_empty() {
            vec![base.epochs]
        } else {
            self.epochs.clone()
        };
        lambdas
            .iter()
            .flat_map(|&lambda| {
                epochs.iter().map(move |&epochs| MfParams {
                    lambda,
                    epochs,
                    ..*base
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub folds: usize,
    pub seed: u64,
    pub n: usize,
    pub relevance_threshold: f64,
    pub gain: GainMode,
    pub candidates: CandidateSet,
    pub clamp: bool,
    pub alpha: f64,
    /// Compared in order; the last one is the baseline.
    pub algorithms: Vec<AlgorithmSpec>,
    /// When non-empty, each algorithm's parameters are picked by best MAP.
    pub grid: GridSpec,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        let e = EvalConfig::default();
        Self {
            folds: 5,
            seed: 0,
            n: e.n,
            relevance_threshold: e.relevance_threshold,
            gain: e.gain,
            candidates: e.candidates,
            clamp: e.clamp,
            alpha: e.alpha,
            algorithms: vec![
                AlgorithmSpec {
                    name: "SVD_Helpfulness".into(),
                    method: AlgorithmMethod::HelpfulnessMf,
                    params: None,
                },
                AlgorithmSpec {
                    name: "SVD++".into(),
                    method: AlgorithmMethod::SvdPlusPlus,
                    params: None,
                },
            ],
            grid: GridSpec::default(),
        }
    }
}

impl EvaluateSection {
    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            n: self.n,
            relevance_threshold: self.relevance_threshold,
            gain: self.gain,
            candidates: self.candidates,
            clamp: self.clamp,
            alpha: self.alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub format: ReportFormat,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            format: ReportFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub data: DataConfig,
    pub text: TextConfig,
    pub features: FeatureSection,
    pub stats: StatsSection,
    pub study: StudyConfig,
    pub recommend: RecommendSection,
    pub evaluate: EvaluateSection,
    pub output: OutputSection,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Parses `path` and resolves relative paths against its directory.
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.data.reviews,
            &mut self.data.items,
            &mut self.text.stopwords,
            &mut self.text.lemmas,
            &mut self.recommend.weights,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        self.text.lexicons.iter_mut().for_each(fix);
        fix(&mut self.output.dir);
    }

    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig {
            log_base: self.features.log_base,
            deviation: self.features.deviation,
            tfidf: TfIdfConfig {
                idf: self.text.idf,
                universe: self.text.universe,
            },
        }
    }

    /// Checks values and that every referenced input path exists.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |field: &'static str, p: &Option<PathBuf>| match p {
            Some(p) if !p.exists() => Err(ConfigError::MissingPath {
                field,
                path: p.display().to_string(),
            }),
            _ => Ok(()),
        };
        check("data.reviews", &self.data.reviews)?;
        check("data.items", &self.data.items)?;
        check("text.stopwords", &self.text.stopwords)?;
        check("text.lemmas", &self.text.lemmas)?;
        check("recommend.weights", &self.recommend.weights)?;
        for l in &self.text.lexicons {
            check("text.lexicons", &Some(l.clone()))?;
        }

        if self.data.min_reviews_per_user == 0 {
            return invalid("data.min_reviews_per_user must be at least 1");
        }
        if !self.data.tags().is_empty() && self.data.items.is_none() {
            return invalid("category filtering needs data.items");
        }
        if self.study.folds < 2 {
            return invalid("study.folds must be at least 2");
        }
        self.study
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("study: {e}")))?;
        self.recommend
            .mf
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("recommend.mf: {e}")))?;
        self.recommend
            .forest
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("recommend.forest: {e}")))?;
        if self.recommend.n == 0 {
            return invalid("recommend.n must be at least 1");
        }

        let ev = &self.evaluate;
        if ev.folds < 2 {
            return invalid("evaluate.folds must be at least 2");
        }
        if ev.n == 0 {
            return invalid("evaluate.n must be at least 1");
        }
        if !ev.relevance_threshold.is_finite() {
            return invalid("evaluate.relevance_threshold must be finite");
        }
        if !(ev.alpha > 0.0 && ev.alpha < 1.0) {
            return invalid("evaluate.alpha must be in (0, 1)");
        }
        if ev.algorithms.len() < 2 {
            return invalid("evaluate needs at least two algorithms");
        }
        let names: BTreeSet<&str> = ev.algorithms.iter().map(|a| a.name.as_str()).collect();
        if names.len() != ev.algorithms.len() {
            return invalid("evaluate.algorithms names must be unique");
        }
        for a in &ev.algorithms {
            if let Some(p) = &a.params {
                p.validate()
                    .map_err(|e| ConfigError::Invalid(format!("algorithm {}: {e}", a.name)))?;
            }
            if a.method == AlgorithmMethod::FixedWeightsMf && self.recommend.weights.is_none() {
                return invalid(format!("algorithm {} needs recommend.weights", a.name));
            }
        }
        if ev
            .grid
            .lambdas
            .iter()
            .any(|l| !(l.is_finite() && *l >= 0.0))
        {
            return invalid("evaluate.grid.lambdas must be finite and >= 0");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = PipelineConfig::default();
        let back = PipelineConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert!(cfg.validate().is_ok());
        assert!(PipelineConfig::from_toml("").unwrap() == cfg);
    }

    #[test]
    fn sections_parse() {
        let cfg = PipelineConfig::from_toml(
            r#"
            [data]
            preset = "hotel"
            categories = ["Campgrounds"]
            min_reviews_per_user = 10

            [features]
            log_base = "ten"
            deviation = "leave-one-out"

            [study]
            folds = 3
            seed = 7
            models = ["M1", "M3"]
            regressors = ["forest"]

            [study.forest]
            n_trees = 20

            [recommend.mf]
            k = 8

            [evaluate]
            n = 5
            gain = "binary"

            [[evaluate.algorithms]]
            name = "a"
            method = "plain-mf"

            [[evaluate.algorithms]]
            name = "b"
            method = "svd-plus-plus"
            params = { k = 4 }
            "#,
        )
        .unwrap();
        assert_eq!(cfg.data.tags().len(), 8);
        assert_eq!(cfg.features.log_base, LogBase::Ten);
        assert_eq!(cfg.study.forest.n_trees, 20);
        assert_eq!(cfg.study.forest.min_samples_leaf, 2);
        assert_eq!(cfg.recommend.mf.k, 8);
        assert_eq!(cfg.recommend.mf.learning_rate, 0.01);
        assert_eq!(cfg.evaluate.algorithms[1].params.unwrap().k, 4);
        assert_eq!(cfg.evaluate.eval_config().gain, GainMode::Binary);
        // tags without an item file cannot be applied
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(PipelineConfig::from_toml("[data]\nbogus = 1").is_err());
        assert!(PipelineConfig::from_toml("[nope]").is_err());
        for text in [
            "[data]\nmin_reviews_per_user = 0",
            "[study]\nfolds = 1",
            "[recommend.mf]\nk = 0",
            "[evaluate]\nalpha = 2.0",
            "[[evaluate.algorithms]]\nname = \"x\"\nmethod = \"plain-mf\"",
            "[data]\nreviews = \"/definitely/not/here.jsonl\"",
        ] {
            let cfg = PipelineConfig::from_toml(text).unwrap();
            assert!(cfg.validate().is_err(), "{text}");
        }
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("r.jsonl"), "").unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(
            &path,
            "[data]\nreviews = \"r.jsonl\"\n[output]\ndir = \"o\"\n",
        )
        .unwrap();
        let cfg = PipelineConfig::from_path(&path).unwrap();
        assert_eq!(
            cfg.data.reviews.as_deref(),
            Some(dir.path().join("r.jsonl").as_path())
        );
        assert_eq!(cfg.output.dir, dir.path().join("o"));
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn grid_expands() {
        let g = GridSpec {
            lambdas: vec![0.01, 0.1],
            epochs: vec![10, 20, 30],
        };
        let all = g.expand(&MfParams::default());
        assert_eq!(all.len(), 6);
        assert_eq!((all[5].lambda, all[5].epochs), (0.1, 30));
    }
}
