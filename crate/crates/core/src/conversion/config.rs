use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_API_KEY_ENV: &str = "FHIR_SCULPTOR_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("max in-flight requests must be at least 1")]
    MaxInFlight,
    #[error("request timeout must be a positive number of seconds")]
    Timeout,
    #[error("temperature must be a finite number >= 0")]
    Temperature,
    #[error("the remote backend needs an endpoint URL")]
    MissingEndpoint,
    #[error("the remote backend needs a model identifier")]
    MissingModel,
    #[error("the remote backend needs a credential variable name")]
    MissingCredentialName,
    #[error("environment variable {0} holding the API key is not set")]
    MissingCredential(String),
    #[error("cannot build the HTTP client: {0}")]
    Client(String),
}

/// Client settings for model backends. The API key itself is never part of
/// the configuration; only the name of the variable holding it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct BackendConfig {
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub api_key_env: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub max_in_flight: usize,
    pub temperature: f64,
    /// First retry delay; each further retry doubles it.
    pub retry_backoff_ms: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            endpoint: None,
            model: None,
            api_key_env: DEFAULT_API_KEY_ENV.to_string(),
            timeout_secs: 60.0,
            max_retries: 3,
            max_in_flight: 8,
            temperature: 0.0,
            retry_backoff_ms: 1000,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_in_flight < 1 {
            return Err(ConfigError::MaxInFlight);
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(ConfigError::Timeout);
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(ConfigError::Temperature);
        }
        Ok(())
    }

    /// Checks the settings the remote backend needs, without reading the key.
    pub fn validate_remote(&self) -> Result<(), ConfigError> {
        self.validate()?;
        if self.endpoint.as_deref().is_none_or(|e| e.trim().is_empty()) {
            return Err(ConfigError::MissingEndpoint);
        }
        if self.model.as_deref().is_none_or(|m| m.trim().is_empty()) {
            return Err(ConfigError::MissingModel);
        }
        if self.api_key_env.trim().is_empty() {
            return Err(ConfigError::MissingCredentialName);
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    /// Delay before retry number `attempt` (0-based): base, 2×base, 4×base, ...
    pub fn backoff(&self, attempt: u32) -> Duration {
        Duration::from_millis(self.retry_backoff_ms.saturating_mul(1u64 << attempt.min(20)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_backoff_is_one_two_four_seconds() {
        let c = BackendConfig::default();
        assert_eq!(c.max_retries, 3);
        assert_eq!(c.temperature, 0.0);
        let delays: Vec<u64> = (0..3).map(|a| c.backoff(a).as_secs()).collect();
        assert_eq!(delays, [1, 2, 4]);
    }

    #[test]
    fn invariants() {
        let c = BackendConfig {
            max_in_flight: 0,
            ..BackendConfig::default()
        };
        assert_eq!(c.validate(), Err(ConfigError::MaxInFlight));
        assert_eq!(
            BackendConfig::default().validate_remote(),
            Err(ConfigError::MissingEndpoint)
        );
    }

    #[test]
    fn reads_kebab_case_toml() {
        let c: BackendConfig = toml::from_str("endpoint = \"http://x\"\nmax-in-flight = 4\n").unwrap();
        assert_eq!(c.max_in_flight, 4);
        assert_eq!(c.endpoint.as_deref(), Some("http://x"));
        assert_eq!(c.max_retries, 3);
    }
}
