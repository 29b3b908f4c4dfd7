use std::path::PathBuf;
use std::process::ExitCode;

use caplab::cli::{self, exit, CliError};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "caplab", version, about = "Analytic capacity and Cauchy operator experiments")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file.
    Run {
        config: PathBuf,
        /// Override the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List registered experiments.
    List,
    /// Print a configuration with every default filled in.
    EchoConfig { config: PathBuf },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match execute(args.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::List => {
            print!("{}", cli::list_experiments());
            Ok(exit::OK)
        }
        Command::EchoConfig { config } => {
            print!("{}", cli::load_config(&config)?.to_toml());
            Ok(exit::OK)
        }
        Command::Run { config, seed, out } => {
            let mut cfg = cli::load_config(&config)?;
            if let Some(s) = seed {
                if s > i64::MAX as u64 {
                    return Err(caplab::Error::InvalidConfiguration("seed must fit in a signed 64-bit integer".into()).into());
                }
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let outcome = cli::run(&cfg)?;
            println!("{}", outcome.dir.display());
            for c in &outcome.report.checks {
                println!("{} {:?} {}: {}", if c.passed { "pass" } else { "FAIL" }, c.kind, c.name, c.detail);
            }
            for t in &outcome.report.truncated {
                println!("truncated: {t}");
            }
            Ok(outcome.status)
        }
    }
}
