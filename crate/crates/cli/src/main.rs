use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use helprank::config::PipelineConfig;
use helprank::corpus::{CategoryPreset, InputFormat};
use helprank::pipeline::{Pipeline, PipelineError, Stage, StageSummary};
use helprank::regress::ModelName;
use helprank::report::ReportFormat;

/// Review helpfulness study and helpfulness-weighted recommendation.
#[derive(Parser, Debug)]
#[command(name = "helprank", version)]
struct Cli {
    /// TOML pipeline configuration.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Output directory; also settable through HELPRANK_OUT.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, global = true, value_parser = parse_format)]
    report_format: Option<ReportFormat>,
    #[command(flatten)]
    data: DataArgs,
    /// More log output (repeatable).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Review file.
    #[arg(long, global = true)]
    reviews: Option<PathBuf>,
    /// Item (business) file with category tags.
    #[arg(long, global = true)]
    items: Option<PathBuf>,
    /// json-lines or csv.
    #[arg(long, global = true)]
    input_format: Option<InputFormat>,
    /// Built-in category list: hotel or food.
    #[arg(long, global = true, value_parser = parse_preset)]
    preset: Option<CategoryPreset>,
    /// Comma-separated category tags.
    #[arg(long, global = true, value_delimiter = ',')]
    categories: Option<Vec<String>>,
    /// Drop users left with fewer reviews after the category filter.
    #[arg(long, global = true)]
    min_reviews: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load and filter the reviews, writing corpus.csv.
    Ingest,
    /// Descriptive statistics of the filtered corpus.
    Stats,
    /// Per-review feature matrix.
    Features,
    /// Cross-validated correlation study of the feature models.
    Study {
        /// Comma-separated subset of M1,M2,M3.
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<ModelName>>,
        /// Number of cross-validation folds.
        #[arg(long)]
        folds: Option<usize>,
        /// Seed for every random step of the stage.
        #[arg(long)]
        seed: Option<u64>,
        /// Refit text statistics on each training fold.
        #[arg(long)]
        strict: bool,
    },
    /// Helpfulness weight of every rating, written to weights.csv.
    TrainHelpfulness {
        /// Seed for every random step of the stage.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train the weighted factor model and write top-N lists.
    Recommend {
        /// Precomputed weights CSV.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// List length.
        #[arg(long, short)]
        n: Option<usize>,
        /// Seed for every random step of the stage.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Cross-validated comparison of the configured recommenders.
    Evaluate {
        /// Number of cross-validation folds.
        #[arg(long)]
        folds: Option<usize>,
        /// Seed for every random step of the stage.
        #[arg(long)]
        seed: Option<u64>,
        /// List length.
        #[arg(long, short)]
        n: Option<usize>,
    },
    /// Re-emit a JSON report in the configured format.
    Report {
        /// JSON report written by an earlier run.
        #[arg(long)]
        input: PathBuf,
    },
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse()
}

fn parse_preset(s: &str) -> Result<CategoryPreset, String> {
    match s {
        "hotel" => Ok(CategoryPreset::Hotel),
        "food" => Ok(CategoryPreset::Food),
        other => Err(format!("unknown preset {other:?}; expected hotel or food")),
    }
}

fn build_config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::from_path(p)?,
        None => PipelineConfig::default(),
    };
    let d = &cli.data;
    if let Some(p) = &d.reviews {
        cfg.data.reviews = Some(p.clone());
    }
    if let Some(p) = &d.items {
        cfg.data.items = Some(p.clone());
    }
    if let Some(f) = d.input_format {
        cfg.data.format = f;
    }
    if d.preset.is_some() {
        cfg.data.preset = d.preset;
    }
    if let Some(c) = &d.categories {
        cfg.data.categories = c.clone();
    }
    if let Some(m) = d.min_reviews {
        cfg.data.min_reviews_per_user = m;
    }
    if let Ok(dir) = std::env::var("HELPRANK_OUT") {
        if !dir.is_empty() {
            cfg.output.dir = PathBuf::from(dir);
        }
    }
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(f) = cli.report_format {
        cfg.output.format = f;
    }
    match &cli.command {
        Command::Study {
            models,
            folds,
            seed,
            strict,
        } => {
            if let Some(m) = models {
                cfg.study.models = m.clone();
            }
            if let Some(k) = folds {
                cfg.study.folds = *k;
            }
            if let Some(s) = seed {
                cfg.study.seed = *s;
                cfg.study.linear.seed = *s;
                cfg.study.forest.seed = *s;
            }
            cfg.features.strict_folds |= strict;
        }
        Command::TrainHelpfulness { seed } => {
            if let Some(s) = seed {
                cfg.recommend.forest.seed = *s;
            }
        }
        Command::Recommend { weights, n, seed } => {
            if let Some(p) = weights {
                cfg.recommend.weights = Some(p.clone());
            }
            if let Some(n) = n {
                cfg.recommend.n = *n;
            }
            if let Some(s) = seed {
                cfg.recommend.mf.seed = *s;
                cfg.recommend.forest.seed = *s;
            }
        }
        Command::Evaluate { folds, seed, n } => {
            if let Some(k) = folds {
                cfg.evaluate.folds = *k;
            }
            if let Some(s) = seed {
                cfg.evaluate.seed = *s;
                cfg.recommend.mf.seed = *s;
                cfg.recommend.forest.seed = *s;
            }
            if let Some(n) = n {
                cfg.evaluate.n = *n;
            }
        }
        _ => {}
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<StageSummary, PipelineError> {
    let pipeline = Pipeline::new(build_config(cli)?)?;
    let stage = match &cli.command {
        Command::Report { input } => return pipeline.convert_report(input),
        Command::Ingest => Stage::Ingest,
        Command::Stats => Stage::Stats,
        Command::Features => Stage::Features,
        Command::Study { .. } => Stage::Study,
        Command::TrainHelpfulness { .. } => Stage::TrainHelpfulness,
        Command::Recommend { .. } => Stage::Recommend,
        Command::Evaluate { .. } => Stage::Evaluate,
    };
    pipeline.run(stage)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(summary) => {
            println!("{}", summary.message);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("helprank: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
