use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn helprank(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_helprank"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("HELPRANK_OUT")
        .output()
        .expect("binary runs")
}

fn hotel() -> String {
    fixtures().join("hotel.toml").display().to_string()
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[test]
fn stats_reproduces_golden_rows() {
    let dir = tempfile::tempdir().unwrap();
    ok(&helprank(&["-c", &hotel(), "stats"], dir.path()));
    let rows: BTreeSet<String> = data_rows(&dir.path().join("stats_table.csv"))
        .into_iter()
        .collect();
    let golden = fs::read_to_string(fixtures().join("stats_golden.csv")).unwrap();
    for line in golden.lines() {
        assert!(rows.contains(line), "missing {line}");
    }
    assert!(dir.path().join("stats.json").exists());
}

#[test]
fn study_is_deterministic_and_has_six_rows() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "-c",
        &hotel(),
        "study",
        "--models",
        "M1,M2,M3",
        "--folds",
        "5",
        "--seed",
        "7",
    ];
    ok(&helprank(&args, a.path()));
    ok(&helprank(&args, b.path()));
    for name in [
        "study_correlations.csv",
        "study_coefficients.csv",
        "study_importances.csv",
        "study.json",
    ] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
    let rows = data_rows(&a.path().join("study_correlations.csv"));
    assert_eq!(rows.len(), 1 + 6);
}

#[test]
fn identical_algorithms_compare_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let base = fs::read_to_string(fixtures().join("hotel.toml")).unwrap();
    let fx = fixtures().display().to_string();
    let cfg = base
        .replace("\"yelp_", &format!("\"{fx}/yelp_"))
        .replace(
            "[evaluate]\n",
            "[evaluate]\nalgorithms = [\n  { name = \"A\", method = \"plain-mf\" },\n  { name = \"B\", method = \"plain-mf\" },\n]\n",
        );
    let path = dir.path().join("twins.toml");
    fs::write(&path, cfg).unwrap();
    let out = dir.path().join("out");
    ok(&helprank(&["-c", path.to_str().unwrap(), "evaluate"], &out));
    let rows = data_rows(&out.join("evaluation_comparisons.csv"));
    let header: Vec<&str> = rows[0].split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    assert_eq!(rows.len(), 1 + 8);
    for row in &rows[1..] {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[col("relative_diff_pct")], "0.000000", "{row}");
        assert_eq!(f[col("p_value")], "1.000000", "{row}");
        assert_eq!(f[col("degenerate")], "true", "{row}");
        assert_eq!(f[col("significant")], "false", "{row}");
    }
}

#[test]
fn report_converts_json_to_matching_csv() {
    let dir = tempfile::tempdir().unwrap();
    let json_dir = dir.path().join("json");
    ok(&helprank(
        &["-c", &hotel(), "--report-format", "json", "stats"],
        &json_dir,
    ));
    let csv_dir = dir.path().join("csv");
    let input = json_dir.join("stats.json");
    ok(&helprank(
        &[
            "-c",
            &hotel(),
            "--report-format",
            "csv",
            "report",
            "--input",
            input.to_str().unwrap(),
        ],
        &csv_dir,
    ));
    let both_dir = dir.path().join("both");
    ok(&helprank(
        &["-c", &hotel(), "--report-format", "csv", "stats"],
        &both_dir,
    ));
    assert_eq!(
        fs::read(csv_dir.join("stats_table.csv")).unwrap(),
        fs::read(both_dir.join("stats_table.csv")).unwrap()
    );
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_helprank"))
        .args(["-c", &hotel(), "ingest"])
        .env("HELPRANK_OUT", dir.path())
        .output()
        .unwrap();
    ok(&status);
    assert!(dir.path().join("corpus.csv").exists());

    // the flag wins over the variable
    let flag = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_helprank"))
        .args(["-c", &hotel(), "ingest", "--out"])
        .arg(flag.path())
        .env("HELPRANK_OUT", dir.path().join("unused"))
        .output()
        .unwrap();
    ok(&status);
    assert!(flag.path().join("corpus.csv").exists());
    assert!(!dir.path().join("unused").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| helprank(args, dir.path()).status.code();
    assert_eq!(code(&["frobnicate"]), Some(1));
    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["stats"]), Some(1));
    assert_eq!(
        code(&["--reviews", "/nonexistent/reviews.jsonl", "stats"]),
        Some(1)
    );
    let missing = dir.path().join("missing.toml");
    assert_eq!(code(&["-c", missing.to_str().unwrap(), "stats"]), Some(1));

    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "not json\n").unwrap();
    let o = helprank(&["--reviews", bad.to_str().unwrap(), "ingest"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr).into_owned();
    assert!(err.lines().any(|l| l.starts_with("helprank: ")), "{err}");
}

#[test]
fn recommend_writes_ranked_lists() {
    let dir = tempfile::tempdir().unwrap();
    ok(&helprank(
        &["-c", &hotel(), "recommend", "-n", "3", "--seed", "7"],
        dir.path(),
    ));
    let rows = data_rows(&dir.path().join("recommendations.csv"));
    assert_eq!(rows[0], "user_id,rank,item_id,score");
    let users: BTreeSet<&str> = rows[1..]
        .iter()
        .map(|r| r.split(',').next().unwrap())
        .collect();
    assert_eq!(users.len(), 32);
    assert!(rows[1..].iter().all(|r| {
        let rank: usize = r.split(',').nth(1).unwrap().parse().unwrap();
        (1..=3).contains(&rank)
    }));
    assert!(dir.path().join("model.factors").exists());
}
