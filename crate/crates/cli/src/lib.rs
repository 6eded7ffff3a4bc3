// Copyright 2026 The coopra Authors
// SPDX-License-Identifier: Apache-2.0

//! Command-line front end for `coopra-core`.
//!
//! Every subcommand reads an optional JSON configuration (see
//! [`config::Config`]), applies command-line overrides and writes one table
//! as CSV or JSON. With `--out` a run manifest is written next to the output.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;
pub mod validate;

use config::Config;
use output::{Format, Provenance, RunManifest, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] coopra_core::Error),
}

#[derive(Debug, Parser)]
#[command(
    name = "coopra",
    version,
    about = "Randomized cooperative access for a cognitive radio PU/SU pair"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stability-region boundaries over a lambda_p grid.
    Region(CommonArgs),
    /// Closed-form delays over a rate grid and a list of a values.
    Delay(CommonArgs),
    /// Monte-Carlo run at the configured point and policy.
    Simulate(CommonArgs),
    /// Delay-optimal a at the configured rates.
    Optimize(CommonArgs),
    /// Throughput-delay sweep with optimized a and simulated baselines.
    Sweep(CommonArgs),
    /// Closed-form versus simulation battery; exits nonzero on failure.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON configuration file.
    #[arg(value_name = "CONFIG", conflicts_with = "config")]
    pub config_path: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Add simulated columns where supported.
    #[arg(long)]
    pub simulate: bool,
    #[arg(long, value_name = "N")]
    pub horizon: Option<u64>,
    #[arg(long, value_name = "N")]
    pub warmup: Option<u64>,
    #[arg(long, value_name = "N")]
    pub reps: Option<u32>,
    /// Master seed; overrides COOPRA_SEED and the config file.
    #[arg(long, value_name = "N", env = "COOPRA_SEED")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, value_name = "DELTA")]
    pub margin: Option<f64>,
    /// Worker threads (defaults to all cores). Does not affect results.
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Corrupt a closed form to confirm the battery notices.
    #[arg(long, value_enum)]
    pub inject_fault: Option<validate::Fault>,
}

impl CommonArgs {
    /// Loads the config file (if any) and applies the overrides.
    pub fn resolve(&self) -> Result<Config, CliError> {
        let mut cfg = match self.config_path.as_ref().or(self.config.as_ref()) {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        if let Some(h) = self.horizon {
            cfg.sim.horizon = h;
        }
        if let Some(w) = self.warmup {
            cfg.sim.warmup = Some(w);
        }
        if let Some(r) = self.reps {
            cfg.sim.replications = r;
        }
        if let Some(s) = self.seed {
            cfg.sim.seed = s;
        }
        if let Some(m) = self.margin {
            cfg.optimize.margin = m;
        }
        Ok(cfg)
    }
}

fn config_digest(cfg: &Config) -> String {
    output::sha256_hex(
        serde_json::to_string(cfg)
            .expect("config serializes")
            .as_bytes(),
    )
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn emit(
    command: &str,
    args: &CommonArgs,
    cfg: &Config,
    table: &Table,
    stdout: &mut String,
) -> Result<(), CliError> {
    let prov = Provenance {
        command: command.to_string(),
        seed: cfg.sim.seed,
        config_sha256: config_digest(cfg),
    };
    let rendered = output::render(table, args.format, &prov);
    match &args.out {
        Some(path) => {
            write_file(path, &rendered.text)?;
            let timestamp_unix = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            let manifest = RunManifest {
                tool_version: output::TOOL_VERSION,
                command,
                config: cfg,
                seed: cfg.sim.seed,
                timestamp_unix,
                output: &path.display().to_string(),
                output_sha256: output::sha256_hex(rendered.text.as_bytes()),
            };
            let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
            text.push('\n');
            write_file(&manifest_path(path), &text)?;
        }
        None => stdout.push_str(&rendered.text),
    }
    Ok(())
}

/// Runs a parsed command line. Returns the process exit code and whatever
/// should go to standard output.
pub fn execute(cli: &Cli) -> Result<(i32, String), CliError> {
    let threads = match &cli.command {
        Command::Validate(v) => v.common.threads,
        Command::Region(a)
        | Command::Delay(a)
        | Command::Simulate(a)
        | Command::Optimize(a)
        | Command::Sweep(a) => a.threads,
    };
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(|| dispatch(cli)),
        None => dispatch(cli),
    }
}

fn dispatch(cli: &Cli) -> Result<(i32, String), CliError> {
    let mut stdout = String::new();
    let (name, args, table) = match &cli.command {
        Command::Region(a) => ("region", a, commands::region(&a.resolve()?)?),
        Command::Delay(a) => {
            let cfg = a.resolve()?;
            ("delay", a, commands::delay(&cfg, cfg.sim.seed, a.simulate)?)
        }
        Command::Simulate(a) => {
            let cfg = a.resolve()?;
            ("simulate", a, commands::simulate(&cfg, cfg.sim.seed)?)
        }
        Command::Optimize(a) => ("optimize", a, commands::optimize(&a.resolve()?)?),
        Command::Sweep(a) => ("sweep", a, commands::sweep(&a.resolve()?)?),
        Command::Validate(v) => {
            let cfg = v.common.resolve()?;
            let report = validate::run_battery(&cfg, cfg.sim.seed, v.inject_fault)?;
            stdout.push_str(&report.human());
            let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
            json.push('\n');
            match &v.common.out {
                Some(path) => write_file(path, &json)?,
                None => stdout.push_str(&json),
            }
            let code = if report.status == validate::Status::Fail {
                1
            } else {
                0
            };
            return Ok((code, stdout));
        }
    };
    let cfg = args.resolve()?;
    emit(name, args, &cfg, &table, &mut stdout)?;
    Ok((0, stdout))
}
