use std::path::Path;
use std::process::{Command, Output};

use pdqre::qre::{solve_qre, SolverConfig};

fn pdqre(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdqre"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = pdqre(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn error_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).expect("stderr is one JSON document")
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

#[test]
fn help_lists_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let help = String::from_utf8(ok(dir.path(), &["qre-sweep", "--help"]).stdout).unwrap();
    for needle in ["[default: 10]", "[default: 0.01]", "[default: 21]", "[default: stationarity]"] {
        assert!(help.contains(needle), "missing {needle}");
    }
    let help = String::from_utf8(ok(dir.path(), &["simulate", "--help"]).stdout).unwrap();
    assert!(help.contains("[default: 1000]") && help.contains("[default: 0.2]"));
}

#[test]
fn nash_curve_writes_one_row_per_gamma() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["nash-curve", "--gamma-step", "0.01", "--out", "c.csv"]);
    let r = rows(&dir.path().join("c.csv"));
    // 101 uniform nodes plus the 1/9 anchor (gamma = 1 is already a node).
    assert_eq!(r.len(), 102);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("c.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["grid_size"], 102);
    assert_eq!(manifest["subcommand"], "nash-curve");

    ok(dir.path(), &["nash-curve", "--gamma-step", "0.01", "--no-anchors", "--curve", "printed", "--out", "p.csv"]);
    let p = csv::Reader::from_path(dir.path().join("p.csv")).unwrap().headers().unwrap().clone();
    assert_eq!(rows(&dir.path().join("p.csv")).len(), 101);
    assert!(p.iter().all(|h| !h.starts_with("stationarity")));
}

#[test]
fn empty_grid_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = pdqre(dir.path(), &["nash-curve", "--gamma-step", "0", "--out", "c.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"]["kind"], "invalid-input");
    assert!(!dir.path().join("c.csv").exists());
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = pdqre(dir.path(), &["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "usage");
}

#[test]
fn invalid_strategy_reports_game_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = pdqre(dir.path(), &["simulate", "--alpha1", "2", "--out", "s.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let kind = error_json(&out)["error"]["kind"].clone();
    assert!(kind == "game" || kind == "simulation", "{kind}");
}

#[test]
fn classify_uses_saved_sweep() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["qre-sweep", "--lambda-end", "4", "--out", "s.csv"]);
    ok(dir.path(), &["classify", "--sweep", "s.csv", "--out", "c.json", "--records-csv", "r.csv"]);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("c.json")).unwrap()).unwrap();
    assert_eq!(report["boundary"]["total"], 28);
    assert_eq!(report["boundary"]["consistent"], 27);
    assert_eq!(rows(&dir.path().join("r.csv")).len(), 28);
    // The sweep file is recorded as an input with its digest.
    let inputs = report["manifest"]["inputs"].as_array().unwrap();
    assert!(inputs.iter().any(|i| i["path"].as_str().unwrap().ends_with("s.csv")));
}

#[test]
fn classify_rejects_missing_or_short_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = pdqre(dir.path(), &["classify", "--sweep", "absent.csv", "--out", "c.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"]["kind"], "insufficient-sweep");

    ok(dir.path(), &["qre-sweep", "--lambda-end", "2", "--out", "s.csv"]);
    let out = pdqre(dir.path(), &["classify", "--sweep", "s.csv", "--out", "c.json"]);
    assert_eq!(error_json(&out)["error"]["kind"], "insufficient-sweep");
}

#[test]
fn classify_reports_parse_errors_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let header = pdqre::data::BUNDLED_TABLE.lines().next().unwrap();
    let table = format!("{header}\nExp_1\t18.89%\tabc\t0.22\t36.67%\t0.34\t0.43\n");
    std::fs::write(dir.path().join("t.tsv"), table).unwrap();
    let out = pdqre(dir.path(), &["classify", "--data", "t.tsv", "--out", "c.json"]);
    let err = error_json(&out);
    assert_eq!(err["error"]["kind"], "parse");
    let msg = err["error"]["message"].as_str().unwrap();
    assert!(msg.contains("row 2") && msg.contains("alpha before"), "{msg}");
}

#[test]
fn objective_grid_is_zero_at_centre_for_zero_lambda() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["objective-grid", "--lambda", "0", "--points", "11", "--out", "g.csv"]);
    let r = rows(&dir.path().join("g.csv"));
    assert_eq!(r.len(), 121);
    let centre = r.iter().find(|x| &x[0] == "0.5" && &x[1] == "0.5").unwrap();
    assert_eq!(centre[2].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn objective_grid_minima_sit_near_equilibria() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["objective-grid", "--lambda", "4", "--points", "101", "--out", "g.csv"]);
    let nodes: Vec<[f64; 3]> = rows(&dir.path().join("g.csv"))
        .iter()
        .map(|x| [x[0].parse().unwrap(), x[1].parse().unwrap(), x[2].parse().unwrap()])
        .collect();
    let best = nodes.iter().min_by(|a, b| a[2].total_cmp(&b[2])).unwrap();
    let eq = solve_qre(4.0, &SolverConfig::default()).unwrap();
    assert_eq!(eq.len(), 1);
    assert!((best[0] - eq[0].alpha).abs() <= 0.01 && (best[1] - eq[0].gamma).abs() <= 0.01, "{best:?} vs {:?}", eq[0]);
}

#[test]
fn simulate_prints_summary_and_writes_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["simulate", "--rounds", "5000", "--seed", "3", "--out", "s.csv"]);
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary.is_object());
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let data = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(data, 5001);
    assert!(dir.path().join("s.csv.manifest.json").exists());

    let out = ok(dir.path(), &["simulate", "--rounds", "200", "--group-size", "4", "--out", "g.csv"]);
    assert!(serde_json::from_slice::<serde_json::Value>(&out.stdout).is_ok());
    let out = pdqre(dir.path(), &["simulate", "--rounds", "200", "--group-size", "3", "--out", "g.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn single_lambda_sweep_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["qre-sweep", "--lambda", "20", "--out", "one.csv"]);
    let r = rows(&dir.path().join("one.csv"));
    assert_eq!(r.len(), 1);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("one.report.json")).unwrap()).unwrap();
    assert_eq!(report["lambda_count"], 1);
}
