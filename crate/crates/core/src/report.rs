//! Tabular report files: one CSV per table with `#` header rows, or one
//! combined JSON document. Numbers carry six decimals in both forms.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::StatsReport;
use crate::eval::{EvalReport, Metric};
use crate::regress::StudyReport;

pub const DECIMALS: usize = 6;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("report json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("report csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("table {table}: row {row} has {got} cells, expected {expected}")]
    Shape {
        table: String,
        row: usize,
        got: usize,
        expected: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
    Both,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "both" => Ok(ReportFormat::Both),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

/// A table cell. Missing or non-finite numbers are empty in CSV and `null`
/// in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(Option<f64>),
    Text(String),
}

/// Rounds to the report precision; `-0` becomes `0`.
pub fn round(x: f64) -> Option<f64> {
    if !x.is_finite() {
        return None;
    }
    let v: f64 = format!("{x:.DECIMALS$}")
        .parse()
        .expect("formatted float parses");
    Some(if v == 0.0 { 0.0 } else { v })
}

impl Cell {
    pub fn num(x: f64) -> Cell {
        Cell::Num(round(x))
    }

    pub fn opt(x: Option<f64>) -> Cell {
        Cell::Num(x.and_then(round))
    }

    pub fn int(x: usize) -> Cell {
        Cell::Int(x as i64)
    }

    pub fn text(s: impl Into<String>) -> Cell {
        Cell::Text(s.into())
    }

    fn to_csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(Some(x)) => format!("{x:.DECIMALS$}"),
            Cell::Num(None) => String::new(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    fn check(&self) -> Result<(), ReportError> {
        for (i, r) in self.rows.iter().enumerate() {
            if r.len() != self.columns.len() {
                return Err(ReportError::Shape {
                    table: self.name.clone(),
                    row: i,
                    got: r.len(),
                    expected: self.columns.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// `stats`, `study` or `evaluation`; prefixes every file name.
    pub kind: String,
    /// Echoed configuration and seeds, as `key, value` text pairs.
    pub header: Vec<(String, String)>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(kind: &str) -> Self {
        Self {
            kind: kind.to_string(),
            header: Vec::new(),
            tables: Vec::new(),
        }
    }

    /// Adds a header entry, replacing any earlier value for `key`.
    pub fn with_header(mut self, key: &str, value: impl Into<String>) -> Self {
        let value = value.into();
        match self.header.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.header.push((key.to_string(), value)),
        }
        self
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    fn json_header<T: Serialize>(self, key: &str, value: &T) -> Self {
        let v = serde_json::to_string(value).expect("config serializes");
        self.with_header(key, v)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(bytes).map_err(io_err(path))
}

/// CSV text of one table, preceded by the report header as `# key: value` lines.
pub fn table_csv(report: &Report, table: &Table) -> Result<String, ReportError> {
    table.check()?;
    let mut out = String::new();
    for (k, v) in &report.header {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::to_csv))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| ReportError::Csv(e.into_error().into()))?;
    out.push_str(&String::from_utf8(bytes).expect("csv of utf-8 cells"));
    Ok(out)
}

pub fn report_json(report: &Report) -> Result<String, ReportError> {
    for t in &report.tables {
        t.check()?;
    }
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

/// Writes `<kind>_<table>.csv` files and/or `<kind>.json` under `dir` and
/// returns the paths written.
pub fn emit_report(
    report: &Report,
    format: ReportFormat,
    dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    if matches!(format, ReportFormat::Csv | ReportFormat::Both) {
        for t in &report.tables {
            let path = dir.join(format!("{}_{}.csv", report.kind, t.name));
            write_file(&path, table_csv(report, t)?.as_bytes())?;
            written.push(path);
        }
    }
    if matches!(format, ReportFormat::Json | ReportFormat::Both) {
        let path = dir.join(format!("{}.json", report.kind));
        write_file(&path, report_json(report)?.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

pub fn read_report_json(text: &str) -> Result<Report, ReportError> {
    Ok(serde_json::from_str(text)?)
}

/// Parses a CSV written by [`table_csv`] back into header pairs and a table
/// whose cells are numbers where they parse and text otherwise.
pub fn parse_table_csv(
    name: &str,
    text: &str,
) -> Result<(Vec<(String, String)>, Table), ReportError> {
    let mut header = Vec::new();
    let mut body = String::new();
    for line in text.split_inclusive('\n') {
        match line.strip_prefix("# ") {
            Some(h) if body.is_empty() => {
                let (k, v) = h
                    .trim_end_matches('\n')
                    .split_once(": ")
                    .unwrap_or((h.trim_end(), ""));
                header.push((k.to_string(), v.to_string()));
            }
            _ => body.push_str(line),
        }
    }
    let mut r = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let columns: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut table = Table {
        name: name.to_string(),
        columns,
        rows: Vec::new(),
    };
    for rec in r.records() {
        let rec = rec?;
        table.rows.push(
            rec.iter()
                .map(|s| {
                    if s.is_empty() {
                        Cell::Num(None)
                    } else if let Ok(i) = s.parse::<i64>() {
                        Cell::Int(i)
                    } else if let Ok(x) = s.parse::<f64>() {
                        Cell::Num(Some(x))
                    } else {
                        Cell::text(s)
                    }
                })
                .collect(),
        );
    }
    Ok((header, table))
}

pub fn stats_table(stats: &StatsReport) -> Report {
    let mut t = Table::new(
        "table",
        &["variable", "count", "min", "max", "mean", "std", "median"],
    );
    for r in &stats.rows {
        t.push(vec![
            Cell::text(&r.variable),
            Cell::int(r.count),
            Cell::opt(r.min),
            Cell::opt(r.max),
            Cell::opt(r.mean),
            Cell::opt(r.std),
            Cell::opt(r.median),
        ]);
    }
    let mut rep = Report::new("stats").json_header("estimator", &stats.estimator);
    rep.tables.push(t);
    rep
}

pub fn study_tables(study: &StudyReport) -> Report {
    let mut rep = Report::new("study")
        .json_header("config", &study.config)
        .with_header("seed", study.config.seed.to_string())
        .with_header("reviews", study.reviews.to_string())
        .with_header("strict_folds", study.strict_folds.to_string());

    let mut corr = Table::new(
        "correlations",
        &[
            "model",
            "regressor",
            "label",
            "pearson",
            "pearson_p",
            "spearman",
            "spearman_p",
        ],
    );
    for r in &study.correlations {
        corr.push(vec![
            Cell::text(r.model.to_string()),
            Cell::text(format!("{:?}", r.regressor).to_lowercase()),
            Cell::text(&r.label),
            Cell::opt(r.pearson),
            Cell::opt(r.pearson_p),
            Cell::opt(r.spearman),
            Cell::opt(r.spearman_p),
        ]);
    }
    rep.tables.push(corr);

    let mut coef = Table::new(
        "coefficients",
        &["model", "standardized", "term", "weight", "p_value"],
    );
    for c in &study.coefficients {
        let std = Cell::text(c.standardized.to_string());
        coef.push(vec![
            Cell::text(c.model.to_string()),
            std.clone(),
            Cell::text("bias"),
            Cell::num(c.bias),
            Cell::Num(None),
        ]);
        for (k, f) in c.features.iter().enumerate() {
            coef.push(vec![
                Cell::text(c.model.to_string()),
                std.clone(),
                Cell::text(f.name()),
                Cell::num(c.weights[k]),
                Cell::opt(c.p_values.as_ref().map(|p| p[k])),
            ]);
        }
    }
    rep.tables.push(coef);

    let mut imp = Table::new("importances", &["model", "feature", "importance"]);
    for t in &study.importances {
        for (f, v) in t.features.iter().zip(&t.importances) {
            imp.push(vec![
                Cell::text(t.model.to_string()),
                Cell::text(f.name()),
                Cell::num(*v),
            ]);
        }
    }
    rep.tables.push(imp);

    let mut cols = vec!["variable"];
    cols.extend(study.variables.iter().map(String::as_str));
    let mut pm = Table::new("pearson_matrix", &cols);
    for (name, row) in study.variables.iter().zip(&study.pearson_matrix) {
        let mut cells = vec![Cell::text(name)];
        cells.extend(row.iter().map(|v| Cell::opt(*v)));
        pm.push(cells);
    }
    rep.tables.push(pm);
    rep
}

pub fn eval_tables(ev: &EvalReport, params: &[(String, String)]) -> Report {
    let mut rep = Report::new("evaluation")
        .json_header("config", &ev.config)
        .with_header("folds", ev.folds.to_string())
        .with_header("seed", ev.seed.to_string())
        .with_header("observations", ev.observations.to_string())
        .with_header("baseline", ev.baseline.clone())
        .with_header("ranked_users", ev.ranked_users.to_string())
        .with_header("excluded_users", ev.excluded_users.to_string());
    for (k, v) in params {
        rep = rep.with_header(k, v.clone());
    }

    let mut cols = vec!["metric"];
    cols.extend(ev.algorithms.iter().map(String::as_str));
    let mut grid = Table::new("metrics", &cols);
    for m in Metric::ALL {
        let mut row = vec![Cell::text(m.name())];
        row.extend(ev.values.iter().map(|v| Cell::num(v.get(m))));
        grid.push(row);
    }
    rep.tables.push(grid);

    let mut cmp = Table::new(
        "comparisons",
        &[
            "metric",
            "algorithm",
            "baseline",
            "relative_diff_pct",
            "statistic",
            "p_value",
            "n_effective",
            "degenerate",
            "significant",
        ],
    );
    for c in &ev.comparisons {
        cmp.push(vec![
            Cell::text(c.metric.name()),
            Cell::text(&c.algorithm),
            Cell::text(&c.baseline),
            Cell::opt(c.relative_diff_pct),
            Cell::opt(c.statistic),
            Cell::num(c.p_value),
            Cell::int(c.n_effective),
            Cell::text(c.degenerate.to_string()),
            Cell::text(c.significant.to_string()),
        ]);
    }
    rep.tables.push(cmp);

    let mut cols = vec!["fold", "algorithm"];
    cols.extend(Metric::ALL.iter().map(|m| m.name()));
    let mut folds = Table::new("folds", &cols);
    for f in &ev.per_fold {
        let mut row = vec![Cell::int(f.fold), Cell::text(&f.algorithm)];
        row.extend(Metric::ALL.iter().map(|m| Cell::num(f.values.get(*m))));
        folds.push(row);
    }
    rep.tables.push(folds);
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Report {
        let mut t = Table::new("t", &["name", "n", "x"]);
        t.push(vec![Cell::text("a,b"), Cell::int(3), Cell::num(1.0 / 3.0)]);
        t.push(vec![Cell::text("c"), Cell::int(0), Cell::num(f64::NAN)]);
        t.push(vec![Cell::text("d"), Cell::int(1), Cell::num(-1e-9)]);
        let mut r = Report::new("demo").with_header("seed", "7");
        r.tables.push(t);
        r
    }

    #[test]
    fn csv_and_json_agree() {
        let r = sample();
        let csv = table_csv(&r, &r.tables[0]).unwrap();
        assert!(
            csv.starts_with("# seed: 7\nname,n,x\n\"a,b\",3,0.333333\nc,0,\nd,1,0.000000\n"),
            "{csv}"
        );
        let (header, table) = parse_table_csv("t", &csv).unwrap();
        let back = read_report_json(&report_json(&r).unwrap()).unwrap();
        assert_eq!(header, back.header);
        assert_eq!(table, back.tables[0]);
        assert_eq!(back, r);
    }

    #[test]
    fn shape_errors() {
        let mut r = sample();
        r.tables[0].rows[0].pop();
        assert!(report_json(&r).is_err());
    }

    #[test]
    fn emits_files() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&sample(), ReportFormat::Both, dir.path()).unwrap();
        let names: Vec<String> = files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, ["demo_t.csv", "demo.json"]);
    }

    proptest! {
        #[test]
        fn rounding_matches_text(x in -1e6f64..1e6) {
            let v = round(x).unwrap();
            prop_assert_eq!(format!("{v:.6}").parse::<f64>().unwrap(), v);
            prop_assert!((v - x).abs() <= 5e-7 + 1e-9 * x.abs());
        }
    }
}
