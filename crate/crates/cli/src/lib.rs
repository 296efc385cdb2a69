//! `sketchvis` command line: `serve`, `eval` and `replay`.
//!
//! Every command prints one JSON object per line on stdout; failures print
//! `{"error": {"kind", "message"}}` on stderr. Exit codes are listed in
//! [`exit`].

pub mod demo;
pub mod eval;
pub mod replay;
pub mod serve;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use sketchvis_core::prompt::{ProviderConfig, ProviderError, ProviderMode};

pub mod exit {
    /// Success: clean evaluation, matching replay, clean shutdown.
    pub const OK: u8 = 0;
    /// Record-level evaluation errors, or a replay divergence.
    pub const FAILED: u8 = 1;
    /// Unreadable input (corpus, flow log, fixtures) or invalid arguments.
    pub const INPUT: u8 = 2;
    /// The service or provider could not be started.
    pub const STARTUP: u8 = 3;
}

#[derive(Debug, Parser)]
#[command(name = "sketchvis", version, about = "Sketch-and-text chart authoring service and tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP session service until interrupted.
    Serve(ServeArgs),
    /// Evaluate a corpus of utterance/spec pairs and write reports.
    Eval(EvalArgs),
    /// Re-execute a recorded session log against mock fixtures.
    Replay(ReplayArgs),
}

/// Provider overrides. Flags win over `SKETCHVIS_*` variables, which win
/// over defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct ProviderArgs {
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Name of the environment variable that holds the API credential.
    #[arg(long)]
    pub credential_var: Option<String>,
    #[arg(long)]
    pub timeout_secs: Option<u64>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    /// Directory of mock fixtures (`<envelope digest>.txt`).
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    /// Answer from fixtures only; never contact a model.
    #[arg(long)]
    pub mock: bool,
}

impl ProviderArgs {
    /// Layers the flags over `base` (usually read from the environment).
    pub fn apply(&self, mut cfg: ProviderConfig, default_fixtures: Option<PathBuf>) -> Result<ProviderConfig, ProviderError> {
        if let Some(v) = &self.endpoint {
            cfg.endpoint = v.clone();
        }
        if let Some(v) = &self.model {
            cfg.model = v.clone();
        }
        if let Some(v) = &self.credential_var {
            cfg.credential_var = v.clone();
        }
        if let Some(v) = self.timeout_secs {
            cfg.timeout_secs = v;
        }
        if let Some(v) = self.max_retries {
            cfg.max_retries = v;
        }
        if let Some(dir) = &self.fixtures {
            cfg.fixture_dir = Some(dir.clone());
            cfg.mode = ProviderMode::Mock;
        }
        if self.mock {
            cfg.mode = ProviderMode::Mock;
            if cfg.fixture_dir.is_none() {
                cfg.fixture_dir = default_fixtures;
            }
        }
        cfg.check()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long)]
    pub bind: Option<std::net::IpAddr>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[command(flatten)]
    pub provider: ProviderArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// JSON-lines corpus: `{id, utterance, dataset, spec}` per line.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output directory for `report.json` and `report.csv`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub parallel: usize,
    /// With `--mock` and no fixture directory, `<corpus dir>/fixtures` is used.
    #[command(flatten)]
    pub provider: ProviderArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// Session log (`<data dir>/sessions/<id>.jsonl`).
    #[arg(long)]
    pub flow: PathBuf,
    /// Mock fixtures the replay answers from.
    #[arg(long)]
    pub fixtures: PathBuf,
    /// Replay against this running service instead of an in-process one.
    #[arg(long)]
    pub server: Option<String>,
}

pub fn emit(value: &Value) {
    println!("{value}");
}

pub fn emit_error(kind: &str, message: impl std::fmt::Display) {
    eprintln!("{}", json!({ "error": { "kind": kind, "message": message.to_string() } }));
}

pub fn env_lookup(key: &str) -> Option<String> {
    std::env::var(key).ok().filter(|v| !v.is_empty())
}

pub fn init_tracing() {
    let filter = tracing_subscriber::EnvFilter::try_from_env("SKETCHVIS_LOG").unwrap_or_else(|_| "warn".into());
    let _ = tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).try_init();
}

pub async fn run(cli: Cli) -> u8 {
    match cli.command {
        Command::Serve(args) => serve::run(args, env_lookup).await,
        Command::Eval(args) => eval::run(args, env_lookup).await,
        Command::Replay(args) => replay::run(args).await,
    }
}
