//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any FAIL.
//!
//! Runs `hslab all` twice at the default budget with a fixed seed, judges
//! criteria 1 to 8 from the first report and compares the two for criterion 9.

mod common;

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::Instant;

use serde_json::Value;

use common::{body, check_schema, run_report};

const SEED: &str = "20240601";

struct Report<'a> {
    records: &'a [Value],
    runtimes: HashMap<String, f64>,
}

impl<'a> Report<'a> {
    fn new(v: &'a Value) -> Self {
        let runtimes = v["meta"]["runtimes"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| (r["name"].as_str().unwrap().to_string(), r["seconds"].as_f64().unwrap()))
            .collect();
        Self { records: v["records"].as_array().unwrap(), runtimes }
    }

    fn select(&self, suite: &str, prefix: &str) -> Vec<&'a Value> {
        self.records.iter().filter(|r| r["suite"] == suite && r["name"].as_str().unwrap().starts_with(prefix)).collect()
    }

    fn seconds(&self, step: &str) -> f64 {
        self.runtimes.get(step).copied().unwrap_or(f64::NAN)
    }
}

fn verdict(r: &Value) -> &str {
    if r.get("error").is_some() {
        "error"
    } else {
        r["verdict"].as_str().unwrap()
    }
}

/// Failure message unless `count` records exist and all hold.
fn all_hold(rs: &[&Value], count: usize, what: &str) -> Result<(), String> {
    if rs.len() != count {
        return Err(format!("{what}: {} records, expected {count}", rs.len()));
    }
    match rs.iter().find(|r| verdict(r) != "holds") {
        Some(r) => Err(format!("{what}: {} is {}", r["name"], verdict(r))),
        None => Ok(()),
    }
}

fn none_violated(rs: &[&Value], count: usize, what: &str) -> Result<(), String> {
    if rs.len() != count {
        return Err(format!("{what}: {} records, expected {count}", rs.len()));
    }
    match rs.iter().find(|r| matches!(verdict(r), "violated" | "error")) {
        Some(r) => Err(format!("{what}: {} is {}", r["name"], verdict(r))),
        None => Ok(()),
    }
}

fn under(seconds: f64, limit: f64, what: &str) -> Result<(), String> {
    if seconds < limit {
        Ok(())
    } else {
        Err(format!("{what} took {seconds:.1}s, limit {limit}s"))
    }
}

fn ac1(r: &Report) -> Result<String, String> {
    all_hold(&r.select("eigen", "neumann/"), 11, "neumann")?;
    all_hold(&r.select("eigen", "neumann-reference/"), 2, "reference")?;
    let t = r.seconds("eigen/neumann") + r.seconds("eigen/neumann-reference");
    under(t, 1.0, "eigenvalues")?;
    Ok(format!("n = 2..12 bracketed, mu_2 and mu_3 match references, {t:.2}s"))
}

fn ac2(r: &Report) -> Result<String, String> {
    all_hold(&r.select("eigen", "bessel/"), 21, "bessel")?;
    let t = r.seconds("eigen/bessel");
    under(t, 5.0, "bessel")?;
    Ok(format!("nu = 0.5..10 brackets, interlacing and residuals, {t:.2}s"))
}

fn ac3(r: &Report) -> Result<String, String> {
    all_hold(&r.select("bmo", "log-inverse/"), 6, "log-inverse")?;
    all_hold(&r.select("bmo", "lower-bound/"), 6, "lower-bound")?;
    let shared = r.seconds("bmo/log-inverse");
    let worst = (3..=8).map(|n| r.seconds(&format!("bmo/lower-bound/n={n}")) + shared).fold(0.0, f64::max);
    under(worst, 60.0, "slowest dimension")?;
    Ok(format!("closed forms and 10^4-ball lower bounds for n = 3..8, slowest {worst:.1}s"))
}

fn ac4(r: &Report) -> Result<String, String> {
    let d = r.select("bmo", "doubling/");
    none_violated(&d, 27, "doubling")?;
    if let Some(x) = d.iter().find(|x| x["details"]["balls"] != 100) {
        return Err(format!("{} ran {} balls", x["name"], x["details"]["balls"]));
    }
    all_hold(&r.select("bmo", "reverse-holder/"), 9, "reverse-holder")?;
    let inc: u64 = d.iter().map(|x| x["details"]["inconclusive"].as_u64().unwrap()).sum();
    Ok(format!("2700 doubling checks without violation ({inc} inconclusive), 9 reverse-Hölder bands"))
}

fn ac5(r: &Report) -> Result<String, String> {
    all_hold(&r.select("ineq", "hardy-gaussian"), 1, "hardy-gaussian")?;
    let c: Vec<&Value> = r.select("ineq", "corpus/").into_iter().filter(|x| x["name"] != "corpus/implication").collect();
    none_violated(&c, 1000, "corpus")?;
    all_hold(&r.select("ineq", "corpus/implication"), 1, "implication")?;
    let t = r.seconds("ineq/corpus") + r.seconds("ineq/hardy-gaussian");
    under(t, 120.0, "inequality corpus")?;
    Ok(format!("1000 reports on 100 functions without violation, Gaussian closed form, {t:.1}s"))
}

fn ac6(r: &Report) -> Result<String, String> {
    all_hold(&r.select("ineq", "carleman/"), 6, "carleman")?;
    Ok("tau = 3..8 finite ratios, nonnegative chain slack".into())
}

fn ac7(r: &Report) -> Result<String, String> {
    let cases = ["holo-one", "holo-z1", "holo-z1sq-exp", "plh-const", "plh-re-z1", "plh-re-z1sq-exp"];
    let mut worst: f64 = 0.0;
    for c in cases {
        all_hold(&r.select("hartogs", &format!("{c}/")), 2, c)?;
        worst = worst.max(r.seconds(&format!("hartogs/{c}")));
    }
    all_hold(&r.select("hartogs", "newtonian/"), 2, "newtonian")?;
    worst = worst.max(r.seconds("hartogs/newtonian"));
    under(worst, 60.0, "slowest case")?;
    Ok(format!("six cases within 1e-2 and refining, slope and decay bound hold, slowest {worst:.1}s"))
}

fn ac8(r: &Report) -> Result<String, String> {
    all_hold(&r.select("liouville", "capacity/"), 18, "capacity")?;
    none_violated(&r.select("liouville", "cutoff/"), 50, "cutoff")?;
    all_hold(&r.select("liouville", "classify/"), 3, "classify")?;
    Ok("capacity n = 3..8, 50 cutoff bounds, three families classified at T and 10T".into())
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temp dir");
    let t = Instant::now();
    let args = ["all", "--seed", SEED, "--budget", "default"];
    let first = run_report(&args, &dir.path().join("first.json"));
    let t_first = t.elapsed().as_secs_f64();
    let second = run_report(&args, &dir.path().join("second.json"));
    let report = Report::new(&first);

    type Check = fn(&Report) -> Result<String, String>;
    let checks: [(&str, Check); 8] = [
        ("AC1 neumann eigenvalues", ac1),
        ("AC2 bessel roots", ac2),
        ("AC3 bmo sandwich", ac3),
        ("AC4 doubling and reverse holder", ac4),
        ("AC5 inequality corpus", ac5),
        ("AC6 carleman", ac6),
        ("AC7 hartogs desk scale", ac7),
        ("AC8 liouville", ac8),
    ];
    let mut failed = 0;
    let mut line = |name: &str, res: Result<String, String>| match res {
        Ok(msg) => println!("PASS {name}: {msg}"),
        Err(msg) => {
            failed += 1;
            println!("FAIL {name}: {msg}");
        }
    };
    for (name, f) in checks {
        line(name, f(&report));
    }
    let ac9 = check_schema(&first).and_then(|_| check_schema(&second)).and_then(|_| {
        let (a, b) = (body(&first), body(&second));
        if a == b {
            Ok(format!("two `all` runs give identical {}-byte bodies, schema matches golden, first run {t_first:.0}s", a.len()))
        } else {
            Err("report bodies differ between runs".into())
        }
    });
    line("AC9 determinism", ac9);
    println!("{} criteria, {failed} failed, {:.0}s", checks.len() + 1, t.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
