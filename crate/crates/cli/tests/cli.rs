use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use serde_json::Value;
use spellforge_core::features::Catalog;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spellforge"))
        .args(args)
        .env_remove("SPELLFORGE_THREADS")
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn ok(args: &[&str]) -> Output {
    let o = run(args);
    assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

const LADDER: &str = r#"{
  "n_bootstrap": 100,
  "entries": [
    {"name": "constant", "label": "Constant", "learner": "ols"},
    {"name": "heuristic", "label": "Heuristic", "learner": "ols", "inputs": {"groups": ["heuristic"]}},
    {"name": "lasso", "label": "All", "learner": "lasso", "inputs": {"groups": ["all"]},
     "grid": {"lambda": {"min_ratio": 0.01, "count": 8}}}
  ]
}"#;

/// Cohort, features and a trained ladder shared by the tests.
struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Fixture {
    fn cohort(&self) -> PathBuf {
        self.root.join("cohort")
    }
    fn features(&self) -> PathBuf {
        self.root.join("features/features.csv")
    }
    fn trained(&self) -> PathBuf {
        self.root.join("train")
    }
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let ladder = root.join("ladder.json");
        std::fs::write(&ladder, LADDER).unwrap();
        ok(&["synth", "--n", "400", "--seed", "5", "--out", s(&root.join("cohort"))]);
        ok(&["features", "--cohort", s(&root.join("cohort")), "--out", s(&root.join("features"))]);
        ok(&[
            "train",
            "--cohort",
            s(&root.join("cohort")),
            "--features",
            s(&root.join("features/features.csv")),
            "--ladder",
            s(&ladder),
            "--out",
            s(&root.join("train")),
        ]);
        Fixture { _dir: dir, root }
    })
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["synth", "--n", "150", "--seed", "9", "--out", s(&a)]);
    ok(&["synth", "--n", "150", "--seed", "9", "--out", s(&b)]);
    let outputs = |p: &Path| -> Vec<String> {
        json(&p.join("manifest.json"))["outputs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|o| o["sha256"].as_str().unwrap().to_string())
            .collect()
    };
    assert_eq!(outputs(&a), outputs(&b));
    assert_eq!(outputs(&a).len(), 6);
    let m = json(&a.join("manifest.json"));
    assert_eq!(m["command"], "synth");
    assert_eq!(m["seeds"][0], 9);
    assert!(m["config_sha256"].is_string());
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{ not json").unwrap();
    let o = run(&["synth", "--config", s(&cfg), "--out", s(&dir.path().join("o"))]);
    assert_eq!(code(&o), 2);
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
}

#[test]
fn zero_threads_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--threads", "0", "synth", "--n", "10", "--out", s(dir.path())]);
    assert_eq!(code(&o), 2);
}

#[test]
fn thread_count_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_spellforge"))
        .args(["synth", "--n", "20", "--out", s(dir.path())])
        .env("SPELLFORGE_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(json(&dir.path().join("manifest.json"))["threads"], 1);
}

#[test]
fn features_match_catalog_layout() {
    let f = fixture();
    let text = std::fs::read_to_string(f.features()).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(header[0], "person_id");
    assert_eq!(header.len() - 1, Catalog::shipped().column_count());
    assert_eq!(text.lines().count(), 401);
    let cols = json(&f.root.join("features/features.columns.json"));
    assert_eq!(cols.as_array().unwrap().len(), header.len() - 1);
}

#[test]
fn missing_persons_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixture().cohort().join("spells.csv"), dir.path().join("spells.csv")).unwrap();
    let o = run(&["features", "--cohort", s(dir.path()), "--out", s(&dir.path().join("o"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn empty_catalog_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cat = dir.path().join("catalog.json");
    std::fs::write(&cat, "[]").unwrap();
    let o = run(&[
        "features",
        "--cohort",
        s(&fixture().cohort()),
        "--catalog",
        s(&cat),
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn train_writes_report_models_and_split() {
    let t = fixture().trained();
    let r = json(&t.join("report.json"));
    let entries = r["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 3);
    assert_eq!(r["n"], 400);
    assert_eq!(r["n_train"], 320);
    for name in ["constant", "heuristic", "lasso"] {
        assert!(t.join(format!("models/{name}.json")).exists());
    }
    let split = json(&t.join("split.json"));
    assert_eq!(split["train"].as_array().unwrap().len(), 320);
    assert_eq!(split["holdout"].as_array().unwrap().len(), 80);
    let lasso = &entries[2];
    assert!(lasso["selected"]["lambda"].as_f64().unwrap() > 0.0);
}

#[test]
fn unknown_learner_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let ladder = dir.path().join("l.json");
    std::fs::write(&ladder, r#"{"entries": [{"name": "x", "label": "X", "learner": "random-forest"}]}"#).unwrap();
    let f = fixture();
    let o = run(&[
        "train",
        "--cohort",
        s(&f.cohort()),
        "--features",
        s(&f.features()),
        "--ladder",
        s(&ladder),
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unknown_bundled_ladder_exits_2() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["train", "--cohort", s(&f.cohort()), "--ladder", "table9", "--out", s(dir.path())]);
    assert_eq!(code(&o), 2);
}

#[test]
fn evaluate_on_holdout() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "evaluate",
        "--cohort",
        s(&f.cohort()),
        "--features",
        s(&f.features()),
        "--model",
        s(&f.trained().join("models/lasso.json")),
        "--split",
        s(&f.trained().join("split.json")),
        "--n-bootstrap",
        "200",
        "--out",
        s(dir.path()),
    ]);
    let e = json(&dir.path().join("evaluation.json"));
    assert_eq!(e["rows"], "holdout");
    assert_eq!(e["report"]["n"], 80);
    let report = json(&f.trained().join("report.json"));
    let trained_mse = report["entries"][2]["holdout"]["mse"].as_f64().unwrap();
    assert!((e["report"]["mse"].as_f64().unwrap() - trained_mse).abs() < 1e-12);
}

#[test]
fn cluster_above_every_prediction_is_empty() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "cluster",
        "--model",
        s(&f.trained().join("models/heuristic.json")),
        "--features",
        s(&f.features()),
        "--threshold",
        "1000",
        "--out",
        s(dir.path()),
    ]);
    let c = json(&dir.path().join("clusters.json"));
    assert_eq!(c["n_at_risk"], 0);
    assert_eq!(c["k"], 0);
    assert!(c["report"].is_null());
}

#[test]
fn cluster_groups_cover_the_at_risk_set() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "cluster",
        "--model",
        s(&f.trained().join("models/lasso.json")),
        "--features",
        s(&f.features()),
        "--threshold",
        "0.5",
        "--k",
        "3",
        "--out",
        s(dir.path()),
    ]);
    let c = json(&dir.path().join("clusters.json"));
    let n = c["n_clustered"].as_u64().unwrap();
    assert!(n >= 3, "only {n} people above 0.5");
    let labels = c["report"]["labels"].as_array().unwrap();
    assert_eq!(labels.len() as u64, n);
    assert!(labels.iter().all(|l| (1..=3).contains(&l.as_u64().unwrap())));
    let summary = std::fs::read_to_string(dir.path().join("clusters_summary.csv")).unwrap();
    assert!(summary.starts_with("variable,group1_mean,group1_sd"));
}

#[test]
fn report_renders_table_and_density() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let o = ok(&["report", "--report", s(&f.trained().join("report.json")), "--out", s(dir.path())]);
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("Heuristic"));
    assert_eq!(std::fs::read_to_string(dir.path().join("report.txt")).unwrap(), table);
    let density = std::fs::read_to_string(dir.path().join("density_any-is.csv")).unwrap();
    let rows: Vec<Vec<&str>> = density.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 52);
    let total: f64 = rows.iter().map(|r| r[4].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
    let count: u64 = rows.iter().map(|r| r[3].parse::<u64>().unwrap()).sum();
    assert_eq!(count, 400);
}

#[test]
fn empty_report_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = json(&fixture().trained().join("report.json"));
    r["entries"] = Value::Array(vec![]);
    let p = dir.path().join("r.json");
    std::fs::write(&p, r.to_string()).unwrap();
    let o = run(&["report", "--report", s(&p), "--out", s(&dir.path().join("o"))]);
    assert_eq!(code(&o), 2);
}
