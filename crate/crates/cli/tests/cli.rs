use std::fs;
use std::process::{Command, Output};

use twistlab::emit::{emit, render, Format, CSV_HEADER};
use twistlab::CliError;

fn twistlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twistlab")).args(args).output().expect("binary runs")
}

fn strip_wall_time(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn sweep_csv_has_header_and_rows() {
    let out = twistlab(&["sweep", "--quantity", "pi1_l2", "--n", "2,4,8"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.count(), 3);
}

#[test]
fn same_seed_gives_identical_csv() {
    let args = ["--seed", "11", "sweep", "--quantity", "id_norm", "--n", "2..5"];
    let first = twistlab(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let a = String::from_utf8(first.stdout).unwrap();
    let b = String::from_utf8(twistlab(&args).stdout).unwrap();
    assert!(!a.is_empty());
    assert_eq!(strip_wall_time(&a), strip_wall_time(&b));
}

#[test]
fn svg_parses_with_one_data_and_one_fit_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plot.svg");
    let out = twistlab(&[
        "--format", "svg", "--out", path.to_str().unwrap(),
        "sweep", "--quantity", "pi1_l2", "--n", "2..6",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = fs::read_to_string(&path).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let paths: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("path")).collect();
    assert_eq!(paths.len(), 2);
    assert!(paths.iter().any(|p| p.attribute("class") == Some("fit")));
    assert!(!svg.contains("href"));
}

#[test]
fn empty_records_are_rejected() {
    for f in [Format::Csv, Format::Json, Format::Svg] {
        assert!(matches!(render(&[], f, false), Err(CliError::Empty(_))));
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    assert!(emit(&[], Format::Csv, false, &path).is_err());
    assert!(!path.exists());
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# sweep settings\nseed = 5\nquantity = pi1_linf\nn = 4,8\n").unwrap();
    let out = twistlab(&[
        "--seed", "1", "--config", cfg.to_str().unwrap(),
        "sweep", "--quantity", "pi1_l2", "--n", "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.starts_with("pi1_linf,")));
}

#[test]
fn check_exit_status_reflects_result() {
    let out = twistlab(&["check", "--suite", "norm_identities,rank_one", "--trials", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.lines().filter(|l| l.starts_with("PASS")).count(), 2);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["passed"], true);

    let bad = twistlab(&["check", "--suite", "no_such_suite"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn asym_report_has_expected_keys() {
    let out = twistlab(&["asym", "--group", "signed", "--n", "4", "--samples", "6", "--restarts", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["group", "n", "samples", "mean_norm", "std_error", "upper_envelope", "rich", "commutant_dim"] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }
    assert_eq!(doc["group"], "signed_permutations");
}

#[test]
fn norm_of_identity_curve_point() {
    let out = twistlab(&["norm", "--a", "0,0", "--b", "3,4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["kp_norm"].as_f64().is_some());
}

#[test]
fn oracle_fixtures_verify() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fx.json");
    assert!(twistlab(&["oracle", "--out", path.to_str().unwrap()]).status.success());
    let out = twistlab(&["oracle", "--verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}
