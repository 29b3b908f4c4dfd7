//! Scenario runners. Each runner is a pure function of its parameters and
//! the run context and returns an [`ExperimentReport`].

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::capacity::ScoreOptions;
use crate::error::Result;

mod comparability;
mod counterexample;
mod cross_lemmas;
mod independence;
mod marcinkiewicz;
mod superadditivity;
mod two_measure;

pub use comparability::{run_comparability, ComparabilityParams, SigmaGeometry};
pub use counterexample::{run_counterexample, CounterexampleParams};
pub use cross_lemmas::{run_cross_lemmas, CrossLemmaParams};
pub use independence::{run_independence_check, IndependenceParams};
pub use marcinkiewicz::{marcinkiewicz_statistics, run_marcinkiewicz_check, MarcinkiewiczParams, MarcinkiewiczStats};
pub use superadditivity::{run_superadditivity_sweep, SweepParams};
pub use two_measure::{run_two_measure_sum, TwoMeasureParams};

/// Names and one-line descriptions of the registered experiments.
pub const REGISTRY: [(&str, &str); 7] = [
    ("superadditivity_sweep", "capacity of unions of separated discs on a line or circle"),
    ("marcinkiewicz_check", "far-field sums and the nine-tenths selection rule"),
    ("counterexample", "dyadic Garnett sum with linear growth and unbounded Cauchy operator"),
    ("two_measure_sum", "norm of the sum of two normalized measures"),
    ("independence_check", "growth-against-capacity constant versus operator norm of families"),
    ("comparability", "norm ratio under per-disc mass redistribution"),
    ("cross_lemmas", "cross families: containment and capacity-to-length ratios"),
];

/// Settings shared by every runner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunContext {
    pub seed: u64,
    pub max_atoms: u64,
    pub max_triples: u64,
    pub score: ScoreOptions,
}

impl Default for RunContext {
    fn default() -> Self {
        RunContext {
            seed: 0,
            max_atoms: 1 << 18,
            max_triples: crate::curvature::DEFAULT_TRIPLE_CAP as u64,
            score: ScoreOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Follows from a proved statement; failure is a hard error.
    Theorem,
    /// Depends on unquantified constants; recorded, not enforced.
    Trend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub passed: bool,
    pub detail: String,
}

/// One row of the case table: parameters first, then measured values.
pub type Case = Map<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub seed: u64,
    pub config_echo: Value,
    pub summary: Map<String, Value>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    /// Parts of the run skipped because a resource cap was hit.
    pub truncated: Vec<String>,
    pub cases: Vec<Case>,
    pub plots: Vec<PlotData>,
    pub runtime_seconds: f64,
}

impl ExperimentReport {
    pub(crate) fn new(name: &str, seed: u64, config_echo: Value) -> Self {
        ExperimentReport {
            name: name.to_string(),
            seed,
            config_echo,
            summary: Map::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            truncated: Vec::new(),
            cases: Vec::new(),
            plots: Vec::new(),
            runtime_seconds: 0.0,
        }
    }

    pub(crate) fn check(&mut self, name: impl Into<String>, kind: CheckKind, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            kind,
            passed,
            detail: detail.into(),
        });
    }

    pub(crate) fn stat(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.summary.insert(key.into(), value.into());
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Every theorem-backed check passed.
    pub fn theorem_checks_pass(&self) -> bool {
        self.checks.iter().filter(|c| c.kind == CheckKind::Theorem).all(|c| c.passed)
    }

    pub fn summary_f64(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(Value::as_f64)
    }

    /// Case table as CSV: the header is the union of case keys in
    /// first-seen order; missing cells are empty.
    pub fn cases_csv(&self) -> Result<String> {
        let mut header: Vec<&str> = Vec::new();
        for case in &self.cases {
            for k in case.keys() {
                if !header.contains(&k.as_str()) {
                    header.push(k);
                }
            }
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&header)?;
        for case in &self.cases {
            w.write_record(header.iter().map(|k| case.get(*k).map(cell).unwrap_or_default()))?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| crate::Error::InvalidInput(e.to_string()))?)
            .expect("csv output is utf-8"))
    }
}

impl PlotData {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| v.to_string()))?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| crate::Error::InvalidInput(e.to_string()))?)
            .expect("csv output is utf-8"))
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Builds a case row from key/value pairs in the given order.
macro_rules! case {
    ($($k:expr => $v:expr),* $(,)?) => {{
        let mut m = serde_json::Map::new();
        $( m.insert($k.to_string(), serde_json::json!($v)); )*
        m
    }};
}
pub(crate) use case;

/// Elapsed wall time in seconds since `start`.
pub(crate) fn elapsed(start: std::time::Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

/// Spearman rank correlation; ties share their mean rank.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let mean = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = mean;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
