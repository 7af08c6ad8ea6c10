//! Run reports: JSON payload, text summary and CSV sample table.

use super::{Tolerances, SCHEMA_VERSION};
use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
    /// Informational output without a verdict.
    Info,
    Error,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Info => "info",
            Verdict::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandResult {
    pub index: usize,
    pub check: String,
    pub verdict: Verdict,
    pub assertive: bool,
    pub passed: bool,
    pub data: Value,
    /// `(point, ratio)` rows for the CSV table.
    pub samples: Vec<(Vec<f64>, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub results: Vec<CommandResult>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn to_value(&self) -> Value {
        let results: Vec<Value> = self
            .results
            .iter()
            .map(|r| {
                json!({
                    "index": r.index,
                    "check": r.check,
                    "verdict": r.verdict.as_str(),
                    "assertive": r.assertive,
                    "passed": r.passed,
                    "data": r.data,
                })
            })
            .collect();
        json!({
            "schema_version": SCHEMA_VERSION,
            "scenario": self.scenario,
            "environment": {
                "seed": self.seed,
                "version": env!("CARGO_PKG_VERSION"),
                "tolerances": serde_json::to_value(&self.tolerances).expect("tolerances serialize"),
            },
            "passed": self.passed(),
            "results": results,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario {} (seed {})", self.scenario, self.seed);
        for r in &self.results {
            let mark = if !r.assertive {
                " "
            } else if r.passed {
                "+"
            } else {
                "!"
            };
            let _ = writeln!(out, "{mark} [{}] {:<22} {:<12} {}", r.index, r.check, r.verdict.as_str(), summary(&r.data));
        }
        let _ = writeln!(out, "{}", if self.passed() { "all assertive checks passed" } else { "assertive check failed" });
        out
    }

    /// `command,sample,x1..xn,ratio` rows from every command that sampled ratios.
    pub fn to_csv(&self) -> String {
        let width = self.results.iter().flat_map(|r| r.samples.iter()).map(|s| s.0.len()).max().unwrap_or(0);
        let mut out = String::from("command,sample");
        for i in 1..=width {
            let _ = write!(out, ",x{i}");
        }
        out.push_str(",ratio\n");
        for r in &self.results {
            for (k, (x, q)) in r.samples.iter().enumerate() {
                let _ = write!(out, "{},{k}", r.index);
                for v in x {
                    let _ = write!(out, ",{v:e}");
                }
                let _ = writeln!(out, ",{}", fmt_num(*q));
            }
        }
        out
    }
}

fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        num(v).as_str().unwrap_or("nan").to_string()
    }
}

// scalar fields worth a glance in the text summary
fn summary(data: &Value) -> String {
    let Value::Object(map) = data else { return String::new() };
    let mut parts = Vec::new();
    for (k, v) in map {
        match v {
            Value::Number(n) if n.is_f64() => {
                let f = n.as_f64().unwrap_or(f64::NAN);
                parts.push(if f != 0.0 && f.abs() < 1e-3 { format!("{k}={f:.3e}") } else { format!("{k}={f:.4}") });
            }
            Value::Number(n) => parts.push(format!("{k}={n}")),
            Value::String(s) => parts.push(format!("{k}={s}")),
            Value::Bool(b) => parts.push(format!("{k}={b}")),
            _ => {}
        }
    }
    parts.join(" ")
}

/// JSON number, with non-finite values as the strings `inf`, `-inf`, `nan`.
pub(crate) fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub(crate) fn vecv(v: &crate::Point) -> Value {
    Value::Array(v.iter().map(|x| num(*x)).collect())
}
