//! Settings from a TOML file, then `MEMENTOLENS_*` environment variables,
//! then command-line flags; later sources win.

use std::path::{Path, PathBuf};

use mementolens::{ArchiveEndpoint, EndpointRegistry};
use serde::Deserialize;

pub const ENV_CACHE: &str = "MEMENTOLENS_CACHE";
pub const ENV_RATE: &str = "MEMENTOLENS_RATE";
pub const DEFAULT_CONFIG: &str = "mementolens.toml";

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub endpoints: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub rate: Option<f64>,
    pub retries: Option<u32>,
    pub hop_limit: Option<u32>,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub probe_images: Option<bool>,
}

/// The overridable subset of [`FileConfig`], as given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub endpoints: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub rate: Option<f64>,
    pub retries: Option<u32>,
    pub hop_limit: Option<u32>,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Config {
    pub registry: EndpointRegistry,
    pub cache_dir: PathBuf,
    /// Requests per second per archive host.
    pub rate: f64,
    /// Attempts per request, the first included.
    pub retries: u32,
    pub hop_limit: u32,
    pub output_dir: PathBuf,
    pub workers: usize,
    pub probe_images: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("{name} must be positive, got {value}")]
    NotPositive { name: &'static str, value: String },
    #[error("{ENV_RATE}={0:?} is not a number")]
    BadEnvRate(String),
    #[error(transparent)]
    Endpoints(#[from] mementolens::cdx_client::EndpointError),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryFile {
    endpoint: Vec<ArchiveEndpoint>,
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_file(path: &Path) -> Result<FileConfig, ConfigError> {
    toml::from_str(&read(path)?).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// `[[endpoint]]` tables, one per archive.
pub fn load_registry(path: &Path) -> Result<EndpointRegistry, ConfigError> {
    let file: RegistryFile = toml::from_str(&read(path)?).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    Ok(EndpointRegistry::new(file.endpoint)?)
}

impl Config {
    pub fn resolve(
        file: FileConfig,
        env: impl Fn(&str) -> Option<String>,
        flags: &Overrides,
    ) -> Result<Config, ConfigError> {
        let env_rate = match env(ENV_RATE) {
            Some(s) => Some(s.trim().parse::<f64>().map_err(|_| ConfigError::BadEnvRate(s))?),
            None => None,
        };
        let endpoints = flags.endpoints.clone().or(file.endpoints);
        let registry = match endpoints {
            Some(p) => load_registry(&p)?,
            None => EndpointRegistry::builtin(),
        };
        let cfg = Config {
            registry,
            cache_dir: flags
                .cache_dir
                .clone()
                .or_else(|| env(ENV_CACHE).map(PathBuf::from))
                .or(file.cache_dir)
                .unwrap_or_else(|| PathBuf::from(".mementolens-cache")),
            rate: flags.rate.or(env_rate).or(file.rate).unwrap_or(1.0),
            retries: flags.retries.or(file.retries).unwrap_or(3),
            hop_limit: flags.hop_limit.or(file.hop_limit).unwrap_or(mementolens::classifier::DEFAULT_HOP_LIMIT),
            output_dir: flags
                .output_dir
                .clone()
                .or(file.output_dir)
                .unwrap_or_else(|| PathBuf::from(".")),
            workers: flags.workers.or(file.workers).unwrap_or(4),
            probe_images: file.probe_images.unwrap_or(true),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |name, value: String| Err(ConfigError::NotPositive { name, value });
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return bad("rate", self.rate.to_string());
        }
        if self.retries == 0 {
            return bad("retries", "0".into());
        }
        if self.hop_limit == 0 {
            return bad("hop_limit", "0".into());
        }
        if self.workers == 0 {
            return bad("workers", "0".into());
        }
        Ok(())
    }
}
