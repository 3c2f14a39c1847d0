//! Argument parsing and dispatch.
//!
//! Exit codes: 0 on success, 2 for configuration problems (including clap
//! usage errors), 3 for runtime failures after the configuration was
//! accepted.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_f64_list, ConfigError, SimConfig};
use crate::experiments::{self, RunError};

#[derive(Parser, Debug)]
#[command(
    name = "thzsim",
    version,
    about = "Wideband terahertz massive-MIMO simulation experiments",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Combining gain across the band for one fixed arrival direction.
    Gain(RunArgs),
    /// CDFs of dictionary quantization gain and spatial-frequency error.
    CdfDict(RunArgs),
    /// Channel-estimation NMSE versus average SNR for selected estimators.
    Nmse(RunArgs),
    /// NMSE of joint recovery for a multi-antenna user.
    NmseMu(RunArgs),
    /// Perfect-CSI rates for digital, delay-augmented, and narrowband combining.
    RateLos(RunArgs),
    /// Rate with estimated CSI versus the perfect-CSI rate.
    RateIcsi(RunArgs),
    /// Waterfilled multi-stream rates through analog beam front ends.
    RateSvd(RunArgs),
    /// Plane-wave combiner rates on spherical-wavefront channels.
    Nearfield(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gain(_) => "gain",
            Command::CdfDict(_) => "cdf-dict",
            Command::Nmse(_) => "nmse",
            Command::NmseMu(_) => "nmse-mu",
            Command::RateLos(_) => "rate-los",
            Command::RateIcsi(_) => "rate-icsi",
            Command::RateSvd(_) => "rate-svd",
            Command::Nearfield(_) => "nearfield",
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Gain(a)
            | Command::CdfDict(a)
            | Command::Nmse(a)
            | Command::NmseMu(a)
            | Command::RateLos(a)
            | Command::RateIcsi(a)
            | Command::RateSvd(a)
            | Command::Nearfield(a) => a,
        }
    }
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Flat `key = value` configuration file; missing keys keep defaults.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Master seed. Fixed machinery uses it directly; trial streams are
    /// derived from it by counter offset.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output CSV path; defaults to `<subcommand>.csv`.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Monte Carlo trials per sweep point.
    #[arg(long)]
    pub trials: Option<usize>,

    /// Desk-scale preset: 16x16 array, 32 subcarriers.
    #[arg(long)]
    pub desk: bool,

    /// SNR sweep in dB, e.g. `-15:5:10` or `0,5,10`.
    #[arg(long = "snr-db", value_name = "LIST", allow_hyphen_values = true)]
    pub snr_db: Option<String>,

    /// Trailing configuration overrides, applied last.
    #[arg(value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug)]
pub enum AppError {
    Config(ConfigError),
    Run(RunError),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Run(_) => 3,
        }
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Config(e) => write!(f, "configuration error: {e}"),
            AppError::Run(e) => write!(f, "runtime error: {e}"),
        }
    }
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Config(e)
    }
}

impl From<RunError> for AppError {
    fn from(e: RunError) -> Self {
        AppError::Run(e)
    }
}

/// Resolve the configuration for one invocation (defaults, preset, file,
/// flags, overrides, in that order) and validate it.
pub fn resolve_config(args: &RunArgs) -> Result<SimConfig, ConfigError> {
    let mut cfg = SimConfig::default();
    if args.desk {
        cfg.apply_desk();
    }
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    if let Some(list) = &args.snr_db {
        cfg.snr_db = parse_f64_list("snr_db", list, None)?;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    for ov in &args.overrides {
        cfg.apply_override(ov)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> Result<(), AppError> {
    let args = cli.command.args();
    let cfg = resolve_config(args)?;
    let table = match &cli.command {
        Command::Gain(_) => experiments::gain::run(&cfg)?,
        Command::CdfDict(_) => experiments::cdf_dict::run(&cfg)?,
        Command::Nmse(_) => experiments::nmse::run(&cfg)?,
        Command::NmseMu(_) => experiments::nmse_mu::run(&cfg)?,
        Command::RateLos(_) => experiments::rate_los::run(&cfg)?,
        Command::RateIcsi(_) => experiments::rate_icsi::run(&cfg)?,
        Command::RateSvd(_) => experiments::rate_svd::run(&cfg)?,
        Command::Nearfield(_) => experiments::nearfield::run(&cfg)?,
    };
    let text = table.render(cli.command.name(), &cfg);
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", cli.command.name())));
    std::fs::write(&out, text)
        .map_err(|e| RunError(format!("cannot write `{}`: {e}", out.display())))?;
    Ok(())
}
