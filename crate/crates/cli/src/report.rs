//! Report records and their JSON and CSV serializations.
//!
//! Everything that may differ between two runs with the same configuration
//! (start time, runtimes) lives in `meta`; `records` and `summary` are
//! reproducible byte for byte.

use std::io::Write;
use std::time::Instant;

use hslab::funcspace::Verdict;
use hslab::ineqlab::InequalityReport;
use hslab::quadcore::MeasuredValue;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;

pub const ARTIFACT_VERSION: &str = "1";

/// One check: what was claimed, what was measured and the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub suite: String,
    pub name: String,
    /// The statement the check tests, in plain notation.
    pub anchor: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lhs: Option<MeasuredValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhs: Option<MeasuredValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<MeasuredValue>,
    /// Set when the check could not run; such records count as errors.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

impl Record {
    pub fn new(suite: &str, name: impl Into<String>, anchor: impl Into<String>, verdict: Verdict) -> Self {
        Self {
            suite: suite.to_string(),
            name: name.into(),
            anchor: anchor.into(),
            verdict,
            lhs: None,
            rhs: None,
            value: None,
            error: None,
            details: Value::Null,
        }
    }

    /// `holds` when `ok`, `violated` otherwise.
    pub fn pass(suite: &str, name: impl Into<String>, anchor: impl Into<String>, ok: bool) -> Self {
        Self::new(suite, name, anchor, if ok { Verdict::Holds } else { Verdict::Violated })
    }

    pub fn from_inequality(suite: &str, name: impl Into<String>, anchor: impl Into<String>, r: &InequalityReport) -> Self {
        Self::new(suite, name, anchor, r.verdict).sides(r.lhs, r.rhs)
    }

    pub fn failed(suite: &str, name: impl Into<String>, anchor: impl Into<String>, err: &anyhow::Error) -> Self {
        let mut r = Self::new(suite, name, anchor, Verdict::Inconclusive);
        r.error = Some(format!("{err:#}"));
        r
    }

    pub fn sides(mut self, lhs: MeasuredValue, rhs: MeasuredValue) -> Self {
        self.lhs = Some(lhs);
        self.rhs = Some(rhs);
        self
    }

    pub fn value(mut self, v: MeasuredValue) -> Self {
        self.value = Some(v);
        self
    }

    pub fn details<T: Serialize>(mut self, d: &T) -> Self {
        self.details = serde_json::to_value(d).unwrap_or(Value::Null);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub holds: usize,
    pub violated: usize,
    pub inconclusive: usize,
    pub errors: usize,
}

impl Summary {
    pub fn of(records: &[Record]) -> Self {
        let mut s = Self { total: records.len(), ..Self::default() };
        for r in records {
            if r.error.is_some() {
                s.errors += 1;
                continue;
            }
            match r.verdict {
                Verdict::Holds => s.holds += 1,
                Verdict::Violated => s.violated += 1,
                Verdict::Inconclusive => s.inconclusive += 1,
            }
        }
        s
    }

    pub fn success(&self) -> bool {
        self.violated == 0 && self.errors == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Runtime {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub artifact_version: String,
    pub tool: String,
    /// Seconds since the Unix epoch at start.
    pub started_at: u64,
    pub total_seconds: f64,
    pub runtimes: Vec<Runtime>,
    pub config: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub meta: Meta,
    pub records: Vec<Record>,
    pub summary: Summary,
}

/// Collects records and per-step runtimes while a suite runs.
pub struct Collector {
    pub records: Vec<Record>,
    pub runtimes: Vec<Runtime>,
}

impl Default for Collector {
    fn default() -> Self {
        Self::new()
    }
}

impl Collector {
    pub fn new() -> Self {
        Self { records: Vec::new(), runtimes: Vec::new() }
    }

    /// Runs `f`, records its runtime under `name` and appends its records, or
    /// one error record carrying `anchor` if it fails.
    pub fn step<F>(&mut self, suite: &str, name: &str, anchor: &str, f: F)
    where
        F: FnOnce() -> anyhow::Result<Vec<Record>>,
    {
        let t = Instant::now();
        let out = f();
        self.runtimes.push(Runtime { name: format!("{suite}/{name}"), seconds: t.elapsed().as_secs_f64() });
        match out {
            Ok(rs) => self.records.extend(rs),
            Err(e) => self.records.push(Record::failed(suite, name, anchor, &e)),
        }
    }

    pub fn finish(self, config: &RunConfig, started_at: u64, total_seconds: f64) -> SuiteReport {
        let summary = Summary::of(&self.records);
        SuiteReport {
            meta: Meta {
                artifact_version: ARTIFACT_VERSION.to_string(),
                tool: format!("hslab {}", env!("CARGO_PKG_VERSION")),
                started_at,
                total_seconds,
                runtimes: self.runtimes,
                config: serde_json::to_value(config).unwrap_or(Value::Null),
            },
            records: self.records,
            summary,
        }
    }
}

impl SuiteReport {
    /// `records` and `summary` only, as compact JSON.
    pub fn body_json(&self) -> String {
        serde_json::to_string(&serde_json::json!({ "records": self.records, "summary": self.summary })).expect("serializable")
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> anyhow::Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        Ok(())
    }

    /// One row per record; the seed is repeated on every row.
    pub fn write_csv<W: Write>(&self, w: W, seed: u64) -> anyhow::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "seed", "suite", "name", "verdict", "lhs", "lhs_err", "rhs", "rhs_err", "value", "value_err", "error", "anchor",
        ])?;
        let num = |m: Option<MeasuredValue>| m.map(|v| (v.value.to_string(), v.err.to_string())).unwrap_or_default();
        for r in &self.records {
            let (l, le) = num(r.lhs);
            let (h, he) = num(r.rhs);
            let (v, ve) = num(r.value);
            let verdict = serde_json::to_value(r.verdict)?.as_str().unwrap_or_default().to_string();
            out.write_record([
                seed.to_string(),
                r.suite.clone(),
                r.name.clone(),
                verdict,
                l,
                le,
                h,
                he,
                v,
                ve,
                r.error.clone().unwrap_or_default(),
                r.anchor.clone(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_counts_match_records() {
        let recs = vec![
            Record::pass("s", "a", "x", true),
            Record::pass("s", "b", "x", false),
            Record::new("s", "c", "x", Verdict::Inconclusive),
            Record::failed("s", "d", "x", &anyhow::anyhow!("boom")),
        ];
        let s = Summary::of(&recs);
        assert_eq!((s.total, s.holds, s.violated, s.inconclusive, s.errors), (4, 1, 1, 1, 1));
        assert!(!s.success());
    }

    #[test]
    fn failed_step_becomes_error_record() {
        let mut c = Collector::new();
        c.step("s", "ok", "x", || Ok(vec![Record::pass("s", "ok", "x", true)]));
        c.step("s", "bad", "y", || anyhow::bail!("no"));
        assert_eq!(c.records.len(), 2);
        assert_eq!(c.records[1].error.as_deref(), Some("no"));
        assert_eq!(c.runtimes.len(), 2);
    }
}
