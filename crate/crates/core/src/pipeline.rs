//! End-to-end stages driven by a [`PipelineConfig`]. Every stage reads its
//! inputs, writes artifacts to the output directory and returns a summary.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::config::{AlgorithmMethod, ConfigError, PipelineConfig};
use crate::corpus::{
    descriptive_stats, filter_corpus, load_corpus, write_reviews, Corpus, CorpusError, InputFormat,
};
use crate::eval::{
    compare_recommenders, grid_search, Algorithm, EvalError, EvalReport, FoldPlan, Method,
    WeightSource,
};
use crate::features::{Feature, FeatureError, FeatureExtractor, FeatureMatrix};
use crate::recommend::{
    helpfulness_weights, top_n, train_weighted_mf, write_model, FactorModel, HelpfulnessWeights,
    MfParams, RatingMatrix, RecommendError, WeightSummary,
};
use crate::regress::{
    run_study, run_study_strict, train_forest, ForestModel, RegressError, StudyReport,
};
use crate::report::{
    emit_report, eval_tables, read_report_json, round, stats_table, study_tables, Cell, Report,
    ReportError, Table, DECIMALS,
};
use crate::text::{
    DictionaryLemmatizer, Lexicon, LexiconScorer, SentimentScorer, StopWords, TextError, Tokenizer,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Regress(#[from] RegressError),
    #[error(transparent)]
    Recommend(#[from] RecommendError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    /// 1 for usage and configuration errors, 2 for bad or unreadable data,
    /// 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Usage(_) | PipelineError::Config(_) => 1,
            PipelineError::Regress(e) => regress_code(e),
            PipelineError::Recommend(e) => recommend_code(e),
            PipelineError::Eval(e) => eval_code(e),
            PipelineError::Feature(FeatureError::NegativeInput(_)) => 3,
            _ => 2,
        }
    }
}

fn regress_code(e: &RegressError) -> i32 {
    match e {
        RegressError::InvalidParam(_) => 1,
        RegressError::NonFinite | RegressError::ConstantInput => 3,
        _ => 2,
    }
}

fn recommend_code(e: &RecommendError) -> i32 {
    match e {
        RecommendError::InvalidParam(_) => 1,
        RecommendError::Diverged { .. } => 3,
        _ => 2,
    }
}

fn eval_code(e: &EvalError) -> i32 {
    match e {
        EvalError::InvalidParam(_) => 1,
        EvalError::Fold { source, .. } => eval_code(source),
        EvalError::Recommend(r) => recommend_code(r),
        EvalError::Regress(r) => regress_code(r),
        EvalError::NonFinite => 3,
        _ => 2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Stats,
    Features,
    Study,
    TrainHelpfulness,
    Recommend,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Stats,
        Stage::Features,
        Stage::Study,
        Stage::TrainHelpfulness,
        Stage::Recommend,
        Stage::Evaluate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Stats => "stats",
            Stage::Features => "features",
            Stage::Study => "study",
            Stage::TrainHelpfulness => "train-helpfulness",
            Stage::Recommend => "recommend",
            Stage::Evaluate => "evaluate",
        }
    }
}

/// What a stage did: a one-line message and the files it wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSummary {
    pub message: String,
    pub files: Vec<PathBuf>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn create(path: &Path) -> Result<fs::File, PipelineError> {
    fs::File::create(path).map_err(io_err(path))
}

fn open(path: &Path) -> Result<fs::File, PipelineError> {
    fs::File::open(path).map_err(io_err(path))
}

/// Result of the evaluate stage.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: EvalReport,
    /// MAP of every grid point, when a grid was configured.
    pub grid: Option<Table>,
    /// Parameters each algorithm was finally evaluated with.
    pub params: Vec<(String, MfParams)>,
}

pub struct Pipeline {
    config: PipelineConfig,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    fn out_dir(&self) -> Result<&Path, PipelineError> {
        let dir = self.config.output.dir.as_path();
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(dir)
    }

    /// Loads the reviews and applies the category and user filters.
    pub fn load(&self) -> Result<(Corpus, usize), PipelineError> {
        let data = &self.config.data;
        let reviews = data.reviews.as_deref().ok_or_else(|| {
            PipelineError::Usage("no review file configured (data.reviews)".into())
        })?;
        let loaded = load_corpus(reviews, data.items.as_deref(), data.format, data.malformed)?;
        let skipped = loaded.skipped.len();
        let tags = data.tags();
        let corpus = if tags.is_empty() {
            if data.min_reviews_per_user > 1 {
                let keep: Vec<usize> = (0..loaded.corpus.len())
                    .filter(|&p| {
                        let u = &loaded.corpus.reviews()[p].user_id;
                        loaded.corpus.user_reviews(u).len() >= data.min_reviews_per_user
                    })
                    .collect();
                loaded.corpus.subset(&keep)
            } else {
                loaded.corpus
            }
        } else {
            filter_corpus(
                &loaded.corpus,
                &loaded.items,
                &tags,
                data.min_reviews_per_user,
            )?
        };
        if corpus.is_empty() {
            return Err(CorpusError::Empty.into());
        }
        Ok((corpus, skipped))
    }

    pub fn tokenizer(&self) -> Result<Tokenizer, PipelineError> {
        let t = &self.config.text;
        let stop = match &t.stopwords {
            Some(p) => StopWords::from_path(p)?,
            None => StopWords::default(),
        };
        let lemmas = match &t.lemmas {
            Some(p) => DictionaryLemmatizer::from_reader(open(p)?)?,
            None => DictionaryLemmatizer::default(),
        };
        Ok(Tokenizer::new(stop, Arc::new(lemmas)))
    }

    pub fn scorers(&self) -> Result<Vec<Arc<dyn SentimentScorer>>, PipelineError> {
        let paths = &self.config.text.lexicons;
        if paths.is_empty() {
            return Ok(vec![Arc::new(LexiconScorer::default())]);
        }
        paths
            .iter()
            .map(|p| {
                let name = p
                    .file_stem()
                    .map_or("lexicon".into(), |s| s.to_string_lossy().into_owned());
                Ok(Arc::new(LexiconScorer::new(name, Lexicon::from_path(p)?))
                    as Arc<dyn SentimentScorer>)
            })
            .collect()
    }

    pub fn extractor(&self, corpus: &Corpus) -> Result<FeatureExtractor, PipelineError> {
        Ok(FeatureExtractor::fit(
            corpus,
            self.tokenizer()?,
            self.scorers()?,
            self.config.feature_config(),
        )?)
    }

    pub fn study(
        &self,
        corpus: &Corpus,
        extractor: &FeatureExtractor,
    ) -> Result<StudyReport, PipelineError> {
        let cfg = &self.config.study;
        if self.config.features.strict_folds {
            let (tok, scorers, fc) = (
                self.tokenizer()?,
                self.scorers()?,
                self.config.feature_config(),
            );
            let fit = |c: &Corpus| FeatureExtractor::fit(c, tok.clone(), scorers.clone(), fc);
            Ok(run_study_strict(corpus, fit, cfg)?)
        } else {
            Ok(run_study(&extractor.matrix()?, cfg)?)
        }
    }

    /// M3 forest over every review, used for reviews without votes.
    pub fn helpfulness_forest(
        &self,
        features: &FeatureMatrix,
    ) -> Result<ForestModel, PipelineError> {
        Ok(train_forest(
            &features.design(&Feature::ALL),
            &features.helpfulness(),
            &self.config.recommend.forest,
        )?)
    }

    pub fn weights(
        &self,
        corpus: &Corpus,
        r: &RatingMatrix,
        features: &FeatureMatrix,
    ) -> Result<WeightSummary, PipelineError> {
        let m3 = self.helpfulness_forest(features)?;
        Ok(helpfulness_weights(corpus, r, features, &m3))
    }

    fn algorithms(
        &self,
        corpus: &Corpus,
        features: Option<&FeatureMatrix>,
    ) -> Result<Vec<Algorithm>, PipelineError> {
        let ev = &self.config.evaluate;
        let fixed = match &self.config.recommend.weights {
            Some(p)
                if ev
                    .algorithms
                    .iter()
                    .any(|a| a.method == AlgorithmMethod::FixedWeightsMf) =>
            {
                Some(Arc::new(HelpfulnessWeights::read_csv(open(p)?)?))
            }
            _ => None,
        };
        let shared = Arc::new(corpus.clone());
        ev.algorithms
            .iter()
            .map(|a| {
                let params = a.params.unwrap_or(self.config.recommend.mf);
                let method = match a.method {
                    AlgorithmMethod::HelpfulnessMf => Method::Weighted(WeightSource::Forest {
                        corpus: shared.clone(),
                        features: Arc::new(
                            features
                                .expect("features computed for helpfulness MF")
                                .clone(),
                        ),
                        params: self.config.recommend.forest,
                    }),
                    AlgorithmMethod::PlainMf => Method::Weighted(WeightSource::Uniform(1.0)),
                    AlgorithmMethod::FixedWeightsMf => Method::Weighted(WeightSource::Fixed(
                        fixed.clone().expect("weights file validated"),
                    )),
                    AlgorithmMethod::SvdPlusPlus => Method::SvdPlusPlus,
                };
                Ok(Algorithm::new(a.name.clone(), method, params))
            })
            .collect()
    }

    /// Cross-validated comparison; with a grid, each algorithm first gets its
    /// best-MAP parameters.
    pub fn evaluate(
        &self,
        corpus: &Corpus,
        features: Option<&FeatureMatrix>,
    ) -> Result<Evaluation, PipelineError> {
        let ev = &self.config.evaluate;
        let r = RatingMatrix::from_corpus(corpus);
        let plan = FoldPlan::new(r.len(), ev.folds, ev.seed).map_err(EvalError::from)?;
        let mut algs = self.algorithms(corpus, features)?;
        let cfg = ev.eval_config();
        let mut grid_table = None;
        if !ev.grid.is_empty() {
            let mut t = Table::new(
                "grid",
                &["algorithm", "lambda", "epochs", "map", "selected"],
            );
            for alg in &mut algs {
                let points = ev.grid.expand(&alg.params);
                let g = grid_search(&r, &plan, alg, &points, &cfg)?;
                for (p, map) in &g.scores {
                    t.push(vec![
                        Cell::text(&alg.name),
                        Cell::num(p.lambda),
                        Cell::int(p.epochs),
                        Cell::num(*map),
                        Cell::text((*p == g.best).to_string()),
                    ]);
                }
                alg.params = g.best;
            }
            grid_table = Some(t);
        }
        Ok(Evaluation {
            report: compare_recommenders(&r, &plan, &algs, &cfg)?,
            grid: grid_table,
            params: algs.iter().map(|a| (a.name.clone(), a.params)).collect(),
        })
    }

    pub fn run(&self, stage: Stage) -> Result<StageSummary, PipelineError> {
        let (corpus, skipped) = self.load()?;
        let out = self.out_dir()?.to_path_buf();
        let fmt = self.config.output.format;
        let header = |rep: Report| {
            rep.with_header("reviews", corpus.len().to_string())
                .with_header("users", corpus.user_count().to_string())
                .with_header("items", corpus.item_count().to_string())
        };
        match stage {
            Stage::Ingest => {
                let path = out.join("corpus.csv");
                write_reviews(corpus.reviews(), create(&path)?, InputFormat::Csv)?;
                Ok(StageSummary {
                    message: format!(
                        "ingest: {} reviews, {} users, {} items ({} records skipped)",
                        corpus.len(),
                        corpus.user_count(),
                        corpus.item_count(),
                        skipped
                    ),
                    files: vec![path],
                })
            }
            Stage::Stats => {
                let ex = self.extractor(&corpus)?;
                let stats =
                    descriptive_stats(&corpus, Some(&ex.measures()), self.config.stats.estimator)?;
                let files = emit_report(&header(stats_table(&stats)), fmt, &out)?;
                Ok(StageSummary {
                    message: format!(
                        "stats: {} rows over {} reviews",
                        stats.rows.len(),
                        corpus.len()
                    ),
                    files,
                })
            }
            Stage::Features => {
                let m = self.extractor(&corpus)?.matrix()?;
                let path = out.join("features.csv");
                m.write_csv(create(&path)?)?;
                Ok(StageSummary {
                    message: format!(
                        "features: {} rows x {} features",
                        m.len(),
                        Feature::ALL.len() + 1
                    ),
                    files: vec![path],
                })
            }
            Stage::Study => {
                let ex = self.extractor(&corpus)?;
                let study = self.study(&corpus, &ex)?;
                let files = emit_report(&header(study_tables(&study)), fmt, &out)?;
                let best = study
                    .correlations
                    .iter()
                    .filter_map(|c| c.pearson.map(|p| (c.label.as_str(), p)))
                    .max_by(|a, b| a.1.total_cmp(&b.1));
                let message = match best {
                    Some((label, p)) => format!(
                        "study: {} correlation rows, best {label} pearson {p:.4}",
                        study.correlations.len()
                    ),
                    None => format!("study: {} correlation rows", study.correlations.len()),
                };
                Ok(StageSummary { message, files })
            }
            Stage::TrainHelpfulness => {
                let m = self.extractor(&corpus)?.matrix()?;
                let r = RatingMatrix::from_corpus(&corpus);
                let w = self.weights(&corpus, &r, &m)?;
                let path = out.join("weights.csv");
                w.weights.write_csv(create(&path)?)?;
                Ok(StageSummary {
                    message: format!(
                        "train-helpfulness: {} weights, {} from the forest ({:.1}%)",
                        w.weights.len(),
                        w.predicted,
                        100.0 * w.predicted as f64 / w.weights.len().max(1) as f64
                    ),
                    files: vec![path],
                })
            }
            Stage::Recommend => {
                let r = RatingMatrix::from_corpus(&corpus);
                let weights = match &self.config.recommend.weights {
                    Some(p) => HelpfulnessWeights::read_csv(open(p)?)?.restrict_to(&r, 1.0),
                    None => {
                        self.weights(&corpus, &r, &self.extractor(&corpus)?.matrix()?)?
                            .weights
                    }
                };
                let model = train_weighted_mf(&r, &weights, &self.config.recommend.mf)?;
                let model_path = out.join("model.factors");
                write_model(&model, create(&model_path)?)?;
                let rec_path = out.join("recommendations.csv");
                let n = write_recommendations(&model, &r, self.config.recommend.n, &rec_path)?;
                Ok(StageSummary {
                    message: format!(
                        "recommend: {} users, {} recommendations",
                        r.users().len(),
                        n
                    ),
                    files: vec![model_path, rec_path],
                })
            }
            Stage::Evaluate => {
                let needs_features = self
                    .config
                    .evaluate
                    .algorithms
                    .iter()
                    .any(|a| a.method == AlgorithmMethod::HelpfulnessMf);
                let features = if needs_features {
                    Some(self.extractor(&corpus)?.matrix()?)
                } else {
                    None
                };
                let Evaluation {
                    report: ev,
                    grid,
                    params,
                } = self.evaluate(&corpus, features.as_ref())?;
                let params: Vec<(String, String)> = params
                    .iter()
                    .map(|(name, p)| {
                        (
                            format!("params.{name}"),
                            serde_json::to_string(p).expect("params serialize"),
                        )
                    })
                    .collect();
                let mut rep = header(eval_tables(&ev, &params));
                rep.tables.extend(grid);
                let files = emit_report(&rep, fmt, &out)?;
                let rmse: Vec<String> = ev
                    .algorithms
                    .iter()
                    .zip(&ev.values)
                    .map(|(a, v)| format!("{a} rmse {:.4}", v.rmse))
                    .collect();
                Ok(StageSummary {
                    message: format!("evaluate: {}", rmse.join(", ")),
                    files,
                })
            }
        }
    }

    /// Every stage in order.
    pub fn run_all(&self) -> Result<Vec<StageSummary>, PipelineError> {
        Stage::ALL.iter().map(|s| self.run(*s)).collect()
    }

    /// Re-emits a JSON report file in the configured format.
    pub fn convert_report(&self, input: &Path) -> Result<StageSummary, PipelineError> {
        let text = fs::read_to_string(input).map_err(io_err(input))?;
        let report = read_report_json(&text)?;
        let files = emit_report(&report, self.config.output.format, self.out_dir()?)?;
        Ok(StageSummary {
            message: format!("report: {} tables of {}", report.tables.len(), report.kind),
            files,
        })
    }
}

/// Top-`n` unrated items per user, as `user_id,rank,item_id,score` rows.
fn write_recommendations(
    m: &FactorModel,
    r: &RatingMatrix,
    n: usize,
    path: &Path,
) -> Result<usize, PipelineError> {
    let rated: BTreeMap<&str, BTreeSet<&str>> = r
        .by_user()
        .into_iter()
        .map(|(u, ps)| {
            (
                u,
                ps.iter()
                    .map(|&p| r.observations()[p].item_id.as_str())
                    .collect(),
            )
        })
        .collect();
    let mut w = csv::Writer::from_writer(create(path)?);
    let csv_err = |e: csv::Error| PipelineError::Recommend(e.into());
    w.write_record(["user_id", "rank", "item_id", "score"])
        .map_err(csv_err)?;
    let mut total = 0;
    for (user, seen) in rated {
        let candidates: Vec<String> = r
            .items()
            .iter()
            .filter(|i| !seen.contains(i.as_str()))
            .cloned()
            .collect();
        if candidates.is_empty() {
            continue;
        }
        for (rank, (item, score)) in top_n(m, user, &candidates, n)?.into_iter().enumerate() {
            let score = round(score).map_or(String::new(), |s| format!("{s:.DECIMALS$}"));
            w.write_record([user, &(rank + 1).to_string(), &item, &score])
                .map_err(csv_err)?;
            total += 1;
        }
    }
    w.flush().map_err(|e| PipelineError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(total)
}
