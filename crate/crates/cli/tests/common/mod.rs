#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use serde_json::{Map, Value};

pub fn hslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hslab")).args(args).output().expect("hslab runs")
}

/// Runs `hslab` writing JSON to `out` and returns the parsed report.
pub fn run_report(args: &[&str], out: &Path) -> Value {
    let mut all: Vec<&str> = args.to_vec();
    let o = out.to_str().expect("utf-8 path");
    all.extend(["--format", "json", "--out", o]);
    let res = hslab(&all);
    assert!(res.status.code().is_some_and(|c| c <= 1), "hslab {all:?} failed: {}", String::from_utf8_lossy(&res.stderr));
    serde_json::from_slice(&std::fs::read(out).expect("report written")).expect("report is JSON")
}

/// `records` and `summary` in the form the CLI treats as reproducible.
pub fn body(report: &Value) -> String {
    serde_json::to_string(&serde_json::json!({ "records": report["records"], "summary": report["summary"] })).unwrap()
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "bool",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn check_fields(obj: &Map<String, Value>, want: &Map<String, Value>, measured: &Map<String, Value>, what: &str) -> Result<(), String> {
    for (k, t) in want {
        let Some(v) = obj.get(k) else { continue };
        match t.as_str().unwrap() {
            "any" => {}
            "measured" => {
                let m = v.as_object().ok_or(format!("{what}.{k} is not an object"))?;
                exact_keys(m, measured, &format!("{what}.{k}"))?;
                check_fields(m, measured, measured, &format!("{what}.{k}"))?;
            }
            t if t == type_name(v) => {}
            t => return Err(format!("{what}.{k}: expected {t}, found {}", type_name(v))),
        }
    }
    Ok(())
}

fn exact_keys(obj: &Map<String, Value>, want: &Map<String, Value>, what: &str) -> Result<(), String> {
    let mut a: Vec<&String> = obj.keys().collect();
    let mut b: Vec<&String> = want.keys().collect();
    a.sort();
    b.sort();
    if a == b {
        Ok(())
    } else {
        Err(format!("{what}: keys {a:?}, expected {b:?}"))
    }
}

/// Checks `report` against the checked-in schema.
pub fn check_schema(report: &Value) -> Result<(), String> {
    let golden: Value = serde_json::from_str(include_str!("../golden/report_schema.json")).unwrap();
    let g = |k: &str| golden[k].as_object().unwrap().clone();
    let top = report.as_object().ok_or("report is not an object")?;
    let mut keys: Vec<&str> = top.keys().map(String::as_str).collect();
    keys.sort();
    let mut want: Vec<&str> = golden["top"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    want.sort();
    if keys != want {
        return Err(format!("top-level keys {keys:?}, expected {want:?}"));
    }
    let measured = g("measured");
    let meta = report["meta"].as_object().ok_or("meta is not an object")?;
    exact_keys(meta, &g("meta"), "meta")?;
    check_fields(meta, &g("meta"), &measured, "meta")?;
    for (i, r) in meta["runtimes"].as_array().unwrap().iter().enumerate() {
        let r = r.as_object().ok_or("runtime is not an object")?;
        exact_keys(r, &g("runtime"), &format!("runtimes[{i}]"))?;
        check_fields(r, &g("runtime"), &measured, &format!("runtimes[{i}]"))?;
    }
    let summary = report["summary"].as_object().ok_or("summary is not an object")?;
    exact_keys(summary, &g("summary"), "summary")?;
    check_fields(summary, &g("summary"), &measured, "summary")?;
    let (req, opt) = (g("record_required"), g("record_optional"));
    let verdicts: Vec<&str> = golden["verdicts"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    let records = report["records"].as_array().ok_or("records is not an array")?;
    if records.len() as u64 != summary["total"].as_u64().unwrap_or(u64::MAX) {
        return Err("summary.total differs from the record count".into());
    }
    for (i, r) in records.iter().enumerate() {
        let what = format!("records[{i}]");
        let r = r.as_object().ok_or(format!("{what} is not an object"))?;
        for k in req.keys() {
            if !r.contains_key(k) {
                return Err(format!("{what}: missing {k}"));
            }
        }
        if let Some(k) = r.keys().find(|k| !req.contains_key(*k) && !opt.contains_key(*k)) {
            return Err(format!("{what}: unexpected key {k}"));
        }
        check_fields(r, &req, &measured, &what)?;
        check_fields(r, &opt, &measured, &what)?;
        if !verdicts.contains(&r["verdict"].as_str().unwrap()) {
            return Err(format!("{what}: unknown verdict {}", r["verdict"]));
        }
    }
    Ok(())
}
