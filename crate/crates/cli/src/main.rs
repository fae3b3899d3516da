//! `stickslip`: command-line runner for the contact-process crate.
//!
//! One JSON configuration fully determines a run. The subcommand must
//! match the mode declared in the configuration, which keeps shell
//! history self-describing while letting configs stay the single source
//! of truth. Products land in an output directory digested into
//! `manifest.json`; rerunning an unchanged configuration reproduces
//! every byte.
//!
//! Exit codes: 0 success, 1 filesystem trouble, 2 configuration errors,
//! 3 failures inside the computation itself.

mod config;
mod run;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Debug)]
pub(crate) enum CliError {
    /// Filesystem trouble: unreadable config, unwritable output.
    Io(String),
    /// Malformed configuration, or one inconsistent with the command.
    Config(String),
    /// The computation itself reported a failure.
    Analysis(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Analysis(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(msg) => write!(f, "io: {msg}"),
            CliError::Config(msg) => write!(f, "config: {msg}"),
            CliError::Analysis(msg) => write!(f, "analysis: {msg}"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "stickslip",
    version,
    about = "Event-driven stick-slip contact dynamics: simulation, transport, and analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Event-driven simulation of a finite contact population.
    Simulate(RunArgs),
    /// Upwind transport of the deformation density.
    Evolve(RunArgs),
    /// Stationary profile with its self-consistent sliding speed.
    Stationary(RunArgs),
    /// Moment-system trajectories and the fixed-point report.
    Moments(RunArgs),
    /// Fixed-point stability classification only.
    Classify(RunArgs),
    /// Simulate an event catalog and fit its released-energy exponent.
    Grfit(RunArgs),
    /// Parse and check a configuration without running anything.
    Validate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to runs/<config digest>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace the master seed of a stochastic mode.
    #[arg(long)]
    seed: Option<u64>,
}

impl Command {
    /// Mode the subcommand expects; `None` for the pure check.
    fn expected_mode(&self) -> Option<&'static str> {
        match self {
            Command::Simulate(_) => Some("simulate"),
            Command::Evolve(_) => Some("evolve"),
            Command::Stationary(_) => Some("stationary"),
            Command::Moments(_) => Some("moments"),
            Command::Classify(_) => Some("classify"),
            Command::Grfit(_) => Some("grfit"),
            Command::Validate(_) => None,
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Simulate(a)
            | Command::Evolve(a)
            | Command::Stationary(a)
            | Command::Moments(a)
            | Command::Classify(a)
            | Command::Grfit(a)
            | Command::Validate(a) => a,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_cli(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

/// Cap rayon's pool when STICKSLIP_THREADS is set. Must run before any
/// parallel work touches the global pool.
fn init_threads() -> Result<(), CliError> {
    let Some(raw) = std::env::var_os("STICKSLIP_THREADS") else {
        return Ok(());
    };
    let text = raw
        .to_str()
        .ok_or_else(|| CliError::Config("STICKSLIP_THREADS must be valid UTF-8".into()))?;
    let threads: usize = text.trim().parse().map_err(|_| {
        CliError::Config(format!(
            "STICKSLIP_THREADS must be a positive integer, got {text:?}"
        ))
    })?;
    if threads == 0 {
        return Err(CliError::Config(
            "STICKSLIP_THREADS must be a positive integer, got 0".into(),
        ));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot configure the thread pool: {e}")))
}

fn run_cli(command: &Command) -> Result<(), CliError> {
    init_threads()?;
    let args = command.args();
    let raw = std::fs::read(&args.config)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg: RunConfig = serde_json::from_slice(&raw)
        .map_err(|e| CliError::Config(format!("cannot parse {}: {e}", args.config.display())))?;
    cfg.validate().map_err(CliError::Config)?;

    let Some(expected) = command.expected_mode() else {
        println!("{}: {} configuration OK", args.config.display(), cfg.mode.name());
        return Ok(());
    };
    if cfg.mode.name() != expected {
        return Err(CliError::Config(format!(
            "mode mismatch: the command is {expected} but the configuration declares {}",
            cfg.mode.name()
        )));
    }
    if let Some(seed) = args.seed {
        cfg.mode.override_seed(seed).map_err(CliError::Config)?;
    }
    // The default directory is keyed by the effective configuration,
    // seed override included, so distinct runs never collide.
    let out_dir = match &args.out {
        Some(dir) => dir.clone(),
        None => default_out_dir(&cfg)?,
    };
    run::execute(&cfg, &out_dir)?;
    println!("{}", out_dir.display());
    Ok(())
}

fn default_out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let bytes = serde_json::to_vec(cfg)
        .map_err(|e| CliError::Config(format!("cannot encode the configuration: {e}")))?;
    let digest = hex::encode(Sha256::digest(&bytes));
    Ok(PathBuf::from("runs").join(&digest[..12]))
}
