//! Run configuration: command-line flags over environment variables over the
//! config file over defaults. Clap resolves flag-or-env; this module layers
//! the result over the file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use fhir_sculptor::conversion::BackendConfig;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Rules,
    Remote,
}

/// Contents of a `--config` TOML file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub backend: Option<BackendKind>,
    pub tables: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub remote: BackendConfig,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text =
            std::fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
        let config: FileConfig =
            toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Args)]
pub struct BackendArgs {
    /// Conversion backend.
    #[arg(long, env = "FHIR_SCULPTOR_BACKEND", value_enum)]
    pub backend: Option<BackendKind>,
    /// Chat-completion endpoint URL (remote backend).
    #[arg(long, env = "FHIR_SCULPTOR_ENDPOINT")]
    pub endpoint: Option<String>,
    /// Model identifier (remote backend).
    #[arg(long, env = "FHIR_SCULPTOR_MODEL")]
    pub model: Option<String>,
    /// Most backend requests outstanding at once.
    #[arg(long = "max-inflight", env = "FHIR_SCULPTOR_MAX_INFLIGHT")]
    pub max_inflight: Option<usize>,
    /// Name of the environment variable holding the API key.
    #[arg(long, env = "FHIR_SCULPTOR_API_KEY_ENV")]
    pub api_key_env: Option<String>,
    /// Per-request timeout in seconds.
    #[arg(long, env = "FHIR_SCULPTOR_TIMEOUT")]
    pub timeout: Option<f64>,
    /// Retries after a transient failure.
    #[arg(long, env = "FHIR_SCULPTOR_MAX_RETRIES")]
    pub max_retries: Option<u32>,
    /// First retry delay in milliseconds; doubles per retry.
    #[arg(long, env = "FHIR_SCULPTOR_RETRY_BACKOFF_MS")]
    pub retry_backoff_ms: Option<u64>,
    /// Sampling temperature.
    #[arg(long, env = "FHIR_SCULPTOR_TEMPERATURE")]
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    /// Directory of code tables (routes.csv, forms.csv, timing.csv, units.csv,
    /// optional medications.csv, reasons.csv, frequency_rules.csv).
    #[arg(long, env = "FHIR_SCULPTOR_TABLES")]
    pub tables: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TemplateArgs {
    /// Directory of prompt templates (layout.txt and one TOML file per element).
    #[arg(long, env = "FHIR_SCULPTOR_TEMPLATES")]
    pub templates: Option<PathBuf>,
}

/// Everything `convert` needs, after precedence is applied.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub backend: BackendKind,
    pub backend_config: BackendConfig,
    pub tables: Option<PathBuf>,
    pub templates: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(
        file: FileConfig,
        backend: &BackendArgs,
        tables: &TableArgs,
        templates: &TemplateArgs,
    ) -> Result<Self> {
        let mut c = file.remote;
        if let Some(v) = &backend.endpoint {
            c.endpoint = Some(v.clone());
        }
        if let Some(v) = &backend.model {
            c.model = Some(v.clone());
        }
        if let Some(v) = backend.max_inflight {
            c.max_in_flight = v;
        }
        if let Some(v) = &backend.api_key_env {
            c.api_key_env = v.clone();
        }
        if let Some(v) = backend.timeout {
            c.timeout_secs = v;
        }
        if let Some(v) = backend.max_retries {
            c.max_retries = v;
        }
        if let Some(v) = backend.retry_backoff_ms {
            c.retry_backoff_ms = v;
        }
        if let Some(v) = backend.temperature {
            c.temperature = v;
        }
        let run = RunConfig {
            backend: backend.backend.or(file.backend).unwrap_or(BackendKind::Rules),
            backend_config: c,
            tables: tables.tables.clone().or(file.tables),
            templates: templates.templates.clone().or(file.templates),
        };
        run.backend_config.validate()?;
        if run.backend == BackendKind::Remote {
            run.backend_config.validate_remote()?;
        }
        for dir in [&run.tables, &run.templates].into_iter().flatten() {
            if !dir.is_dir() {
                bail!("{} is not a directory", dir.display());
            }
        }
        Ok(run)
    }
}
