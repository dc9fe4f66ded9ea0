//! `bsa`: reproduces the Bell-state-analyzer benchmark tables and sweeps as
//! deterministic CSV files.

mod config;
mod output;
mod scenarios;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bsa_core::error::CoreError;
use config::{Mode, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "bsa",
    about = "Success rates and fidelity of linear-optical Bell-state analyzers \
             under loss, dark counts, detector arrays, and down-conversion sources",
    version
)]
struct Cli {
    /// TOML config file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV files (overrides config; env: BSA_OUT_DIR).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Which solver columns to fill where applicable.
    #[arg(long, global = true, value_parser = parse_mode, default_value = "both")]
    mode: Mode,
    /// Worker threads (env: BSA_WORKERS; default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "exact" => Ok(Mode::Exact),
        "approx" => Ok(Mode::Approx),
        "both" => Ok(Mode::Both),
        other => Err(format!("invalid mode '{other}' (exact|approx|both)")),
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Maximum success rates with unity fidelity, as exact rationals.
    Table1,
    /// Detector-efficiency sweep with exact and closed-form curves.
    Sweep,
    /// Detector-array curves plus exact splitter-tree points.
    Arrays,
    /// Down-conversion auxiliary source: per-pair-number and tau curves.
    Spdc,
    /// Approximation-vs-exact deviation report.
    Validate,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Table1 => "table1",
            Command::Sweep => "sweep",
            Command::Arrays => "arrays",
            Command::Spdc => "spdc",
            Command::Validate => "validate",
        }
    }
}

fn effective_out_dir(cli: &Cli, cfg: &RunConfig) -> PathBuf {
    if let Some(dir) = &cli.out {
        return dir.clone();
    }
    if let Ok(dir) = std::env::var("BSA_OUT_DIR") {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    cfg.output
        .as_ref()
        .and_then(|o| o.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn effective_workers(cli: &Cli) -> Option<usize> {
    cli.workers.or_else(|| {
        std::env::var("BSA_WORKERS").ok().and_then(|w| w.parse().ok())
    })
}

fn run() -> anyhow::Result<Vec<PathBuf>> {
    let cli = Cli::parse();
    let cfg = RunConfig::load(cli.config.as_ref()).map_err(ConfigError::wrap)?;
    let dir = effective_out_dir(&cli, &cfg);
    if let Some(workers) = effective_workers(&cli) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| ConfigError::wrap(anyhow::anyhow!("worker pool: {e}")))?;
    }
    scenarios::run_scenario(cli.command.name(), &dir, &cfg, cli.mode)
}

/// Marker for errors that should exit with code 2.
#[derive(Debug)]
struct ConfigError(anyhow::Error);

impl ConfigError {
    fn wrap(e: anyhow::Error) -> anyhow::Error {
        anyhow::Error::new(ConfigError(e))
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for ConfigError {}

fn main() -> ExitCode {
    match run() {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = if e.downcast_ref::<ConfigError>().is_some() {
                2
            } else if matches!(
                e.downcast_ref::<CoreError>(),
                Some(CoreError::ResourceCeiling { .. })
            ) {
                3
            } else {
                1
            };
            ExitCode::from(code)
        }
    }
}
