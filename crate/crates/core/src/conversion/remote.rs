use std::fmt;

use async_trait::async_trait;
use reqwest::StatusCode;
use serde_json::{json, Value};

use super::config::{BackendConfig, ConfigError};
use super::runner::{Backend, BackendError, ElementRequest};

/// Chat-completion client: POSTs `{model, temperature, messages}` and reads
/// the first choice's message content.
pub struct RemoteBackend {
    client: reqwest::Client,
    endpoint: String,
    model: String,
    temperature: f64,
    api_key: String,
}

impl fmt::Debug for RemoteBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RemoteBackend")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .field("temperature", &self.temperature)
            .field("api_key", &"<redacted>")
            .finish()
    }
}

impl RemoteBackend {
    /// Reads the API key from the environment variable named in `config`.
    pub fn from_env(config: &BackendConfig) -> Result<Self, ConfigError> {
        config.validate_remote()?;
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| ConfigError::MissingCredential(config.api_key_env.clone()))?;
        Self::with_key(config, api_key)
    }

    pub fn with_key(config: &BackendConfig, api_key: String) -> Result<Self, ConfigError> {
        config.validate_remote()?;
        let client = reqwest::Client::builder()
            .timeout(config.timeout())
            .build()
            .map_err(|e| ConfigError::Client(e.to_string()))?;
        Ok(RemoteBackend {
            client,
            endpoint: config.endpoint.clone().unwrap_or_default(),
            model: config.model.clone().unwrap_or_default(),
            temperature: config.temperature,
            api_key,
        })
    }
}

fn classify(status: StatusCode) -> fn(String) -> BackendError {
    if status == StatusCode::TOO_MANY_REQUESTS || status == StatusCode::REQUEST_TIMEOUT || status.is_server_error() {
        BackendError::Transient
    } else {
        BackendError::Fatal
    }
}

#[async_trait]
impl Backend for RemoteBackend {
    async fn complete(&self, request: &ElementRequest) -> Result<String, BackendError> {
        let body = json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.prompt},
            ],
        });
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .await
            .map_err(|e| {
                let transient = e.is_timeout() || e.is_connect() || e.is_request();
                let message = e.without_url().to_string();
                if transient {
                    BackendError::Transient(message)
                } else {
                    BackendError::Fatal(message)
                }
            })?;
        let status = response.status();
        if !status.is_success() {
            return Err(classify(status)(format!("HTTP {status}")));
        }
        let payload: Value = response
            .json()
            .await
            .map_err(|e| BackendError::Fatal(format!("response body is not JSON: {}", e.without_url())))?;
        payload
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| BackendError::Fatal("response has no choices[0].message.content".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn debug_hides_the_key() {
        let config = BackendConfig {
            endpoint: Some("http://127.0.0.1:1/v1/chat/completions".into()),
            model: Some("m".into()),
            ..BackendConfig::default()
        };
        let backend = RemoteBackend::with_key(&config, "sk-secret-value".into()).unwrap();
        assert!(!format!("{backend:?}").contains("sk-secret-value"));
    }

    #[test]
    fn missing_variable_fails_before_any_request() {
        let config = BackendConfig {
            endpoint: Some("http://127.0.0.1:1".into()),
            model: Some("m".into()),
            api_key_env: "FHIR_SCULPTOR_TEST_UNSET_VARIABLE".into(),
            ..BackendConfig::default()
        };
        assert_eq!(
            RemoteBackend::from_env(&config).unwrap_err(),
            ConfigError::MissingCredential("FHIR_SCULPTOR_TEST_UNSET_VARIABLE".into())
        );
    }

    #[test]
    fn status_classes() {
        assert_eq!(
            classify(StatusCode::TOO_MANY_REQUESTS)("x".into()),
            BackendError::Transient("x".into())
        );
        assert_eq!(
            classify(StatusCode::BAD_GATEWAY)("x".into()),
            BackendError::Transient("x".into())
        );
        assert_eq!(
            classify(StatusCode::UNAUTHORIZED)("x".into()),
            BackendError::Fatal("x".into())
        );
    }
}
