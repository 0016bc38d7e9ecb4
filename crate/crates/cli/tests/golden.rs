mod common;

use common::{body, check_schema, hslab, run_report};

#[test]
fn eigen_report_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_report(&["eigen"], &dir.path().join("e.json"));
    check_schema(&r).unwrap();
    assert_eq!(r["summary"]["violated"], 0);
    assert_eq!(r["meta"]["artifact_version"], "1");
}

#[test]
fn schema_check_rejects_drift() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = run_report(&["eigen"], &dir.path().join("e.json"));
    r["records"][0]["extra"] = serde_json::json!(1);
    assert!(check_schema(&r).unwrap_err().contains("extra"));
    let mut r2 = run_report(&["eigen"], &dir.path().join("e.json"));
    r2["summary"]["total"] = serde_json::json!(0);
    assert!(check_schema(&r2).is_err());
}

#[test]
fn same_seed_same_body() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["bmo", "lower-bound", "--budget", "low", "--seed", "7"];
    let a = run_report(&args, &dir.path().join("a.json"));
    let b = run_report(&args, &dir.path().join("b.json"));
    assert_eq!(body(&a), body(&b));
    let c = run_report(&["bmo", "lower-bound", "--budget", "low", "--seed", "8"], &dir.path().join("c.json"));
    assert_ne!(body(&a), body(&c));
}

#[test]
fn csv_has_seed_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e.csv");
    let res = hslab(&["eigen", "--format", "csv", "--seed", "11", "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    let text = std::fs::read_to_string(out).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(&rows.headers().unwrap()[0], "seed");
    let n = rows.records().map(|r| assert_eq!(&r.unwrap()[0], "11")).count();
    assert_eq!(n, 34);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "suite = \"eigen\"\nsamples = 3\n").unwrap();
    let res = hslab(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("samples"));
    assert_eq!(hslab(&["liouville", "classify", "--family", "nope"]).status.code(), Some(2));
    assert_eq!(hslab(&["bmo", "sideways"]).status.code(), Some(2));
}

#[test]
fn config_file_selects_suite() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    let out = dir.path().join("r.json");
    std::fs::write(&cfg, format!("suite = \"eigen\"\nseed = 3\noutput_path = {:?}\n", out.to_str().unwrap())).unwrap();
    assert!(hslab(&["--config", cfg.to_str().unwrap()]).status.success());
    let r: serde_json::Value = serde_json::from_slice(&std::fs::read(out).unwrap()).unwrap();
    assert_eq!(r["meta"]["config"]["seed"], 3);
}

#[test]
fn cutoff_profile_csv() {
    let res = hslab(&["liouville", "cutoff", "--r", "1", "--big-r", "2", "--eps", "0.5", "--points", "11"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let mut rows = csv::Reader::from_reader(res.stdout.as_slice());
    let vals: Vec<(f64, f64, f64)> = rows.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(vals.len(), 11);
    assert_eq!(vals[0].1, 1.0);
    assert!(vals.windows(2).all(|w| w[1].1 <= w[0].1));
    assert_eq!(vals.last().unwrap().1, 0.0);
}
