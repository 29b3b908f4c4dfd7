//! Run orchestration behind the `caplab` binary.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::experiments::{ExperimentReport, REGISTRY};

mod config;

pub use config::{parse_config, Caps, ExperimentParams, RunConfig};

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    /// A theorem-backed check failed.
    pub const CHECK_FAILED: i32 = 2;
    /// A resource cap or iteration budget was hit.
    pub const RESOURCE: i32 = 3;
    pub const INVALID_CONFIG: i32 = 4;
    /// Reading the configuration or writing outputs failed.
    pub const IO: i32 = 1;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::InvalidConfiguration(_) | Error::InvalidInput(_)) => exit::INVALID_CONFIG,
            CliError::Core(_) => exit::RESOURCE,
            CliError::Io { .. } => exit::IO,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(parse_config(&text)?)
}

/// First eight hex digits of the SHA-256 of the canonical configuration.
pub fn config_hash(config: &RunConfig) -> String {
    let digest = Sha256::digest(config.to_toml().as_bytes());
    digest.iter().take(4).map(|b| format!("{b:02x}")).collect()
}

pub fn output_dir_for(config: &RunConfig) -> PathBuf {
    config.output_dir.join(format!(
        "{}_s{}_{}",
        config.experiment.name(),
        config.seed,
        config_hash(config)
    ))
}

#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub report: ExperimentReport,
    pub files: Vec<String>,
    pub status: i32,
}

/// Runs the configured experiment and writes `report.json`, `cases.csv` and
/// one `plotdata_<name>.csv` per plot into the run directory.
pub fn run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let mut report = config.experiment.run(&config.context())?;
    report.config_echo = config.to_json();
    let dir = output_dir_for(config);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let write = |name: &str, body: &str| -> Result<(), CliError> {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io_err(&path))
    };
    let mut files = vec!["cases.csv".to_string()];
    write("cases.csv", &report.cases_csv()?)?;
    for plot in &report.plots {
        let name = format!("plotdata_{}.csv", plot.name);
        write(&name, &plot.to_csv()?)?;
        files.push(name);
    }
    let status = if !report.theorem_checks_pass() {
        exit::CHECK_FAILED
    } else if !report.truncated.is_empty() {
        exit::RESOURCE
    } else {
        exit::OK
    };
    let mut json = serde_json::to_value(&report).expect("reports serialize");
    json["files"] = serde_json::json!(files);
    json["exit_status"] = serde_json::json!(status);
    write("report.json", &(serde_json::to_string_pretty(&json).expect("json") + "\n"))?;
    files.insert(0, "report.json".to_string());
    Ok(RunOutcome {
        dir,
        report,
        files,
        status,
    })
}

/// One line per registered experiment: name, then a short description.
pub fn list_experiments() -> String {
    REGISTRY
        .iter()
        .map(|(name, what)| format!("{name}  {what}\n"))
        .collect()
}
