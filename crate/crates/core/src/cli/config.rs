//! Run configuration documents.
//!
//! A document names one experiment and carries its parameters in a
//! `[parameters]` table. Every key is checked: unknown keys anywhere are
//! rejected by name.
//!
//! ```toml
//! experiment = "marcinkiewicz_check"
//! seed = 3
//!
//! [caps]
//! max_atoms = 100000
//!
//! [parameters]
//! lambda0 = 1.2
//! random_configs = 20
//! ```

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{
    self, ComparabilityParams, CounterexampleParams, CrossLemmaParams, ExperimentReport, IndependenceParams,
    MarcinkiewiczParams, RunContext, SweepParams, TwoMeasureParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Caps {
    pub max_atoms: u64,
    pub max_triples: u64,
}

impl Default for Caps {
    fn default() -> Self {
        let ctx = RunContext::default();
        Caps {
            max_atoms: ctx.max_atoms,
            max_triples: ctx.max_triples,
        }
    }
}

/// Typed parameters of one registered experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentParams {
    SuperadditivitySweep(SweepParams),
    MarcinkiewiczCheck(MarcinkiewiczParams),
    Counterexample(CounterexampleParams),
    TwoMeasureSum(TwoMeasureParams),
    IndependenceCheck(IndependenceParams),
    Comparability(ComparabilityParams),
    CrossLemmas(CrossLemmaParams),
}

fn typed<T: DeserializeOwned>(table: toml::Table, source: &str) -> Result<T> {
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::InvalidConfiguration(locate(source, e.message())))
}

/// Appends the line and column of an offending parameter key, when the
/// message names one and it can be found in the source.
fn locate(source: &str, message: &str) -> String {
    let key = message.split('`').nth(1);
    let position = key.and_then(|k| {
        source.lines().enumerate().find_map(|(i, line)| {
            let trimmed = line.trim_start();
            let rest = trimmed.strip_prefix(k)?;
            rest.trim_start()
                .starts_with('=')
                .then(|| (i + 1, line.len() - trimmed.len() + 1))
        })
    });
    match position {
        Some((line, col)) => format!("in [parameters]: {message} at line {line}, column {col}"),
        None => format!("in [parameters]: {message}"),
    }
}

impl ExperimentParams {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentParams::SuperadditivitySweep(_) => "superadditivity_sweep",
            ExperimentParams::MarcinkiewiczCheck(_) => "marcinkiewicz_check",
            ExperimentParams::Counterexample(_) => "counterexample",
            ExperimentParams::TwoMeasureSum(_) => "two_measure_sum",
            ExperimentParams::IndependenceCheck(_) => "independence_check",
            ExperimentParams::Comparability(_) => "comparability",
            ExperimentParams::CrossLemmas(_) => "cross_lemmas",
        }
    }

    /// Defaults for a registered name.
    pub fn default_for(name: &str) -> Result<Self> {
        Self::from_table(name, toml::Table::new(), "")
    }

    fn from_table(name: &str, table: toml::Table, source: &str) -> Result<Self> {
        Ok(match name {
            "superadditivity_sweep" => ExperimentParams::SuperadditivitySweep(typed(table, source)?),
            "marcinkiewicz_check" => ExperimentParams::MarcinkiewiczCheck(typed(table, source)?),
            "counterexample" => ExperimentParams::Counterexample(typed(table, source)?),
            "two_measure_sum" => ExperimentParams::TwoMeasureSum(typed(table, source)?),
            "independence_check" => ExperimentParams::IndependenceCheck(typed(table, source)?),
            "comparability" => ExperimentParams::Comparability(typed(table, source)?),
            "cross_lemmas" => ExperimentParams::CrossLemmas(typed(table, source)?),
            other => {
                let known: Vec<&str> = experiments::REGISTRY.iter().map(|(n, _)| *n).collect();
                return Err(Error::InvalidConfiguration(format!(
                    "unknown experiment `{other}`, expected one of {}",
                    known.join(", ")
                )));
            }
        })
    }

    fn to_table(&self) -> toml::Table {
        let table = match self {
            ExperimentParams::SuperadditivitySweep(p) => toml::Table::try_from(p),
            ExperimentParams::MarcinkiewiczCheck(p) => toml::Table::try_from(p),
            ExperimentParams::Counterexample(p) => toml::Table::try_from(p),
            ExperimentParams::TwoMeasureSum(p) => toml::Table::try_from(p),
            ExperimentParams::IndependenceCheck(p) => toml::Table::try_from(p),
            ExperimentParams::Comparability(p) => toml::Table::try_from(p),
            ExperimentParams::CrossLemmas(p) => toml::Table::try_from(p),
        };
        table.expect("parameter structs serialize to tables")
    }

    pub fn run(&self, ctx: &RunContext) -> Result<ExperimentReport> {
        match self {
            ExperimentParams::SuperadditivitySweep(p) => experiments::run_superadditivity_sweep(p, ctx),
            ExperimentParams::MarcinkiewiczCheck(p) => experiments::run_marcinkiewicz_check(p, ctx),
            ExperimentParams::Counterexample(p) => experiments::run_counterexample(p, ctx),
            ExperimentParams::TwoMeasureSum(p) => experiments::run_two_measure_sum(p, ctx),
            ExperimentParams::IndependenceCheck(p) => experiments::run_independence_check(p, ctx),
            ExperimentParams::Comparability(p) => experiments::run_comparability(p, ctx),
            ExperimentParams::CrossLemmas(p) => experiments::run_cross_lemmas(p, ctx),
        }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentParams,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub caps: Caps,
    /// Summation block length of the operator kernels.
    pub worker_block: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    experiment: String,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_output_dir")]
    output_dir: PathBuf,
    #[serde(default)]
    caps: Caps,
    #[serde(default = "default_block")]
    worker_block: usize,
    #[serde(default)]
    parameters: toml::Table,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_block() -> usize {
    crate::cauchy::DEFAULT_BLOCK
}

impl RunConfig {
    /// Configuration with every default for the named experiment.
    pub fn with_defaults(name: &str) -> Result<Self> {
        Ok(RunConfig {
            experiment: ExperimentParams::default_for(name)?,
            seed: 0,
            output_dir: default_output_dir(),
            caps: Caps::default(),
            worker_block: default_block(),
        })
    }

    pub fn context(&self) -> RunContext {
        let mut ctx = RunContext {
            seed: self.seed,
            max_atoms: self.caps.max_atoms,
            max_triples: self.caps.max_triples,
            ..RunContext::default()
        };
        ctx.score.norm.block = self.worker_block;
        ctx
    }

    /// Canonical document with all defaults written out.
    pub fn to_toml(&self) -> String {
        let doc = Document {
            experiment: self.experiment.name().to_string(),
            seed: self.seed,
            output_dir: self.output_dir.clone(),
            caps: self.caps,
            worker_block: self.worker_block,
            parameters: self.experiment.to_table(),
        };
        toml::to_string(&doc).expect("configuration serializes")
    }

    /// Canonical form as JSON, for report echoes.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "experiment": self.experiment.name(),
            "seed": self.seed,
            "output_dir": self.output_dir,
            "caps": self.caps,
            "worker_block": self.worker_block,
        });
        let params = serde_json::to_value(self.experiment.to_table()).expect("tables serialize");
        v["parameters"] = params;
        v
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let doc: Document = toml::from_str(text).map_err(|e| Error::InvalidConfiguration(e.to_string()))?;
    if doc.seed > i64::MAX as u64 {
        return Err(Error::InvalidConfiguration("seed must fit in a signed 64-bit integer".into()));
    }
    if doc.caps.max_atoms == 0 || doc.caps.max_triples == 0 {
        return Err(Error::InvalidConfiguration("caps must be positive".into()));
    }
    if doc.worker_block == 0 {
        return Err(Error::InvalidConfiguration("worker_block must be positive".into()));
    }
    Ok(RunConfig {
        experiment: ExperimentParams::from_table(&doc.experiment, doc.parameters, text)?,
        seed: doc.seed,
        output_dir: doc.output_dir,
        caps: doc.caps,
        worker_block: doc.worker_block,
    })
}
