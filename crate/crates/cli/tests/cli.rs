use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lhvpov"))
}

fn spec(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("specs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Csv {
    fn parse(text: &str) -> Csv {
        let mut lines = text.lines();
        let header = lines.next().unwrap().split(',').map(String::from).collect();
        let rows = lines
            .map(|l| l.split(',').map(|f| f.parse::<f64>().unwrap()).collect())
            .collect();
        Csv { header, rows }
    }

    fn column(&self, name: &str) -> Vec<f64> {
        let k = self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[k]).collect()
    }
}

#[test]
fn simulate_columns_agree_and_are_normalised() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("table.csv");
    let spec = spec("trine_d2.toml");
    let res = run(&[
        "simulate",
        "--spec",
        spec.to_str().unwrap(),
        "--runs",
        "200000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    let csv = Csv::parse(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(csv.header, ["outcome_a", "outcome_b", "lhv-runs", "lhv-runs_se", "closed", "born"]);
    assert_eq!(csv.rows.len(), 6);
    let (runs, se, closed, born) =
        (csv.column("lhv-runs"), csv.column("lhv-runs_se"), csv.column("closed"), csv.column("born"));
    for k in 0..6 {
        assert!((closed[k] - born[k]).abs() < 1e-10);
        assert!((runs[k] - closed[k]).abs() <= 4.0 * se[k], "entry {k}: {} vs {}", runs[k], closed[k]);
    }
    for col in [&runs, &closed, &born] {
        assert!((col.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn simulate_is_reproducible_for_a_fixed_seed() {
    let spec = spec("projective_d2.toml");
    let args = ["simulate", "--spec", spec.to_str().unwrap(), "--runs", "20000", "--seed", "7"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["simulate", "--spec", spec.to_str().unwrap(), "--runs", "20000", "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn channel_flag_adds_pullback_column() {
    let spec = spec("projective_d2.toml");
    let channel = self::spec("depolarizing_half.toml");
    let res = run(&[
        "simulate",
        "--spec",
        spec.to_str().unwrap(),
        "--channel-a",
        channel.to_str().unwrap(),
        "--runs",
        "20000",
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    let csv = Csv::parse(&stdout(&res));
    let pulled = csv.column("born-pullback");
    // Z on Alice and X on Bob are unbiased, so every entry is 1/4 with or without noise
    assert!(pulled.iter().all(|p| (p - 0.25).abs() < 1e-12));
}

#[test]
fn unknown_estimator_is_rejected() {
    let spec = spec("projective_d2.toml");
    let res = run(&["simulate", "--spec", spec.to_str().unwrap(), "--estimators", "closed,nope"]);
    assert!(!res.status.success());
    assert!(stderr(&res).contains("nope"), "{}", stderr(&res));
}

#[test]
fn incomplete_spec_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(spec("projective_d2.toml"))
        .unwrap()
        .replace("[[0.0, 0.0], [1.0, 0.0]]]", "[[0.0, 0.0], [0.9, 0.0]]]");
    std::fs::write(&path, text).unwrap();
    let res = run(&["simulate", "--spec", path.to_str().unwrap()]);
    assert!(!res.status.success());
    let err = stderr(&res);
    assert!(err.contains("not-complete") && err.contains("alice.elements"), "{err}");
}

#[test]
fn integrals_table_and_domain_error() {
    let res = run(&["integrals", "--d", "2..3", "--samples", "20000"]);
    assert!(res.status.success());
    let text = stdout(&res);
    let row = text.lines().find(|l| l.trim_start().starts_with("2 ")).unwrap();
    assert!(row.contains("0.375000000") && row.contains("0.291666667") && row.contains("0.416666667"), "{row}");

    let res = run(&["integrals", "--d", "1"]);
    assert!(!res.status.success());
    assert!(stderr(&res).contains("d >= 2"));
}

#[test]
fn verify_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let res = run(&["verify", "--d", "2..3", "--samples", "20000", "--pairs", "5", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}\n{}", stdout(&res), stderr(&res));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["status"] != "fail"));
}

#[test]
fn verify_detects_wrong_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let res = run(&[
        "verify",
        "--d",
        "2",
        "--samples",
        "20000",
        "--alpha-override",
        "0.9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(1), "{}", stdout(&res));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let failing: Vec<_> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["status"] == "fail")
        .map(|c| c["name"].as_str().unwrap().to_string())
        .collect();
    assert!(failing.iter().any(|n| n == "closed_vs_born"), "{failing:?}");
}

#[test]
fn verify_rejects_out_of_range_dimension() {
    let res = run(&["verify", "--d", "1..3"]);
    assert!(!res.status.success());
}
