//! `mementolens`: harvest CDX indexes, classify replays, chart replayability,
//! scrape account pages and probe URLs.

mod commands;
mod config;
mod context;
mod net;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use mementolens::{Granularity, Timestamp};

use crate::config::{Config, FileConfig, Overrides};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FATAL: u8 = 1;
pub const EXIT_PARTIAL: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "mementolens", version, about = "Replayability analysis for archived Instagram account pages")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// TOML settings file. Defaults to ./mementolens.toml when present.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// TOML file of `[[endpoint]]` tables replacing the built-in archives.
    #[arg(long, global = true)]
    pub endpoints: Option<PathBuf>,
    /// Response cache directory [env: MEMENTOLENS_CACHE].
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Requests per second per archive host [env: MEMENTOLENS_RATE].
    #[arg(long, global = true)]
    pub rate: Option<f64>,
    /// Attempts per request, the first included.
    #[arg(long, global = true)]
    pub retries: Option<u32>,
    /// Maximum redirects followed when resolving a replay.
    #[arg(long, global = true)]
    pub hop_limit: Option<u32>,
    /// Directory holding `runs/`.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads per subcommand.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Ignore cached responses and fetch again.
    #[arg(long, global = true)]
    pub refresh: bool,
    /// Serve requests from a recorded cassette directory instead of the
    /// network. Repeatable; later directories win on conflicts.
    #[arg(long, global = true, value_name = "DIR")]
    pub replay_cassette: Vec<PathBuf>,
    /// Record every exchange into a cassette directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub record_cassette: Option<PathBuf>,
    /// More logging on stderr; repeat for debug output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List captures of every account in a dataset and store them in a run.
    Fetch(FetchArgs),
    /// Classify the fetched captures of a run into classified.csv.
    Classify(RunArg),
    /// Replayability series and login-redirect onset for a run.
    Analyze(AnalyzeArgs),
    /// Earliest login-wall redirect across one or more classified runs.
    Onset(OnsetArgs),
    /// Extract profile and post metadata from account-page mementos.
    Scrape(ScrapeArgs),
    /// Check whether URLs are archived and, optionally, still live.
    Probe(ProbeArgs),
    /// Summarize a run and verify that its outputs re-parse losslessly.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct FetchArgs {
    /// `top25` or a path to a handle list.
    #[arg(long)]
    pub dataset: String,
    #[arg(long, default_value = "wayback")]
    pub endpoint: String,
    /// Earliest capture, 14-digit timestamp.
    #[arg(long)]
    pub from: Option<Timestamp>,
    /// Latest capture, 14-digit timestamp.
    #[arg(long)]
    pub to: Option<Timestamp>,
    /// Defaults to `{dataset}-{endpoint}`.
    #[arg(long)]
    pub run_id: Option<String>,
}

#[derive(Args, Debug)]
pub struct RunArg {
    #[arg(long)]
    pub run: String,
}

#[derive(Args, Debug, Clone)]
pub struct LoginWindow {
    /// First day of the login-page capture series.
    #[arg(long, requires = "login_to")]
    pub login_from: Option<NaiveDate>,
    /// Last day of the login-page capture series.
    #[arg(long, requires = "login_from")]
    pub login_to: Option<NaiveDate>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub run: String,
    #[arg(long, default_value = "month")]
    pub granularity: Granularity,
    #[command(flatten)]
    pub login: LoginWindow,
}

#[derive(Args, Debug)]
pub struct OnsetArgs {
    /// Classified runs to pool. onset.json goes into the first.
    #[arg(long, required = true)]
    pub run: Vec<String>,
    /// Archive for the login-page series. Defaults to the first run's.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[command(flatten)]
    pub login: LoginWindow,
}

#[derive(Args, Debug)]
pub struct ScrapeArgs {
    pub urims: Vec<String>,
    /// File of URI-Ms, one per line; `#` starts a comment.
    #[arg(long)]
    pub batch: Option<PathBuf>,
    /// Skip the status check of every image resource.
    #[arg(long)]
    pub no_probe: bool,
    #[arg(long, default_value = "scrape")]
    pub run: String,
}

#[derive(Args, Debug)]
pub struct ProbeArgs {
    /// File of URLs, one per line.
    #[arg(long)]
    pub urls: PathBuf,
    #[arg(long, default_value = "wayback")]
    pub endpoint: String,
    /// Also request every URL from the live web.
    #[arg(long)]
    pub live: bool,
    /// Required together with --live.
    #[arg(long)]
    pub i_understand_live_probing: bool,
    #[arg(long, default_value = "probe")]
    pub run: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[arg(long)]
    pub run: String,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

/// Failure of a subcommand, with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn fatal(message: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_FATAL,
            message: message.to_string(),
        }
    }
}

fn overrides(g: &Global) -> Overrides {
    Overrides {
        endpoints: g.endpoints.clone(),
        cache_dir: g.cache_dir.clone(),
        rate: g.rate,
        retries: g.retries,
        hop_limit: g.hop_limit,
        output_dir: g.output_dir.clone(),
        workers: g.workers,
    }
}

fn load_config(g: &Global) -> Result<Config, Failure> {
    let file = match &g.config {
        Some(p) => config::load_file(p).map_err(|e| Failure::usage(e.to_string()))?,
        None => {
            let default = PathBuf::from(config::DEFAULT_CONFIG);
            if default.is_file() {
                config::load_file(&default).map_err(|e| Failure::usage(e.to_string()))?
            } else {
                FileConfig::default()
            }
        }
    };
    Config::resolve(file, |k| std::env::var(k).ok(), &overrides(g)).map_err(|e| Failure::usage(e.to_string()))
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let cfg = load_config(&cli.global)?;
    let g = &cli.global;
    match cli.command {
        Command::Fetch(a) => commands::fetch(&cfg, g, a),
        Command::Classify(a) => commands::classify(&cfg, g, a),
        Command::Analyze(a) => commands::analyze(&cfg, g, a),
        Command::Onset(a) => commands::onset(&cfg, g, a),
        Command::Scrape(a) => commands::scrape(&cfg, g, a),
        Command::Probe(a) => commands::probe(&cfg, g, a),
        Command::Report(a) => commands::report(&cfg, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let level = match cli.global.verbose {
        0 => tracing::Level::WARN,
        1 => tracing::Level::INFO,
        _ => tracing::Level::DEBUG,
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_max_level(level)
        .with_target(false)
        .init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("mementolens: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
