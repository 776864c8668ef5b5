use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};

use async_trait::async_trait;
use futures::stream::{self, StreamExt};
use thiserror::Error;
use tokio::sync::Semaphore;

use super::config::{BackendConfig, ConfigError};
use super::kind::{ElementKind, PerKind};
use super::prompt::PromptLibrary;
use super::result::{assemble, ConversionResult};
use super::rules_backend::RulesBackend;
use crate::terminology::TableSet;

/// One element conversion request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementRequest {
    pub input_id: String,
    pub kind: ElementKind,
    /// The free text being converted.
    pub input: String,
    /// Instructions, sent as the system message.
    pub system: String,
    /// The fully rendered prompt, sent as the user message.
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    /// Worth retrying: timeouts, rate limits, server errors.
    #[error("transient backend failure: {0}")]
    Transient(String),
    #[error("backend failure: {0}")]
    Fatal(String),
}

#[async_trait]
pub trait Backend: Send + Sync {
    async fn complete(&self, request: &ElementRequest) -> Result<String, BackendError>;

    /// A backend that cannot take concurrent calls returns `Some(1)`.
    fn max_in_flight(&self) -> Option<usize> {
        None
    }
}

#[async_trait]
impl Backend for RulesBackend {
    async fn complete(&self, request: &ElementRequest) -> Result<String, BackendError> {
        Ok(self.respond(request.kind, &request.input))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BatchError {
    #[error("duplicate input id `{0}`")]
    DuplicateId(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchProgress<'a> {
    pub input_id: &'a str,
    pub completed: usize,
    pub total: usize,
}

/// Shared state for one conversion run.
struct Run<'a> {
    backend: &'a dyn Backend,
    prompts: &'a PromptLibrary,
    tables: &'a TableSet,
    config: &'a BackendConfig,
    permits: Semaphore,
}

impl Run<'_> {
    /// Calls the backend, holding an in-flight permit per attempt and
    /// backing off between transient failures.
    async fn call(&self, request: &ElementRequest) -> Result<String, String> {
        let mut attempt = 0;
        loop {
            let outcome = {
                let _permit = self.permits.acquire().await.expect("semaphore is never closed");
                match tokio::time::timeout(self.config.timeout(), self.backend.complete(request)).await {
                    Ok(outcome) => outcome,
                    Err(_) => Err(BackendError::Transient(format!(
                        "timed out after {}s",
                        self.config.timeout_secs
                    ))),
                }
            };
            match outcome {
                Ok(text) => return Ok(text),
                Err(BackendError::Transient(message)) if attempt < self.config.max_retries => {
                    let delay = self.config.backoff(attempt);
                    tracing::warn!(input = %request.input_id, kind = %request.kind, attempt, ?delay, %message, "retrying");
                    tokio::time::sleep(delay).await;
                    attempt += 1;
                }
                Err(BackendError::Transient(message)) => {
                    return Err(format!("backend unavailable after {} attempts: {message}", attempt + 1))
                }
                Err(err) => return Err(err.to_string()),
            }
        }
    }

    async fn convert(&self, input_id: &str, text: &str) -> ConversionResult {
        let calls = ElementKind::ALL.map(|kind| {
            let spec = self.prompts.get(kind);
            let request = ElementRequest {
                input_id: input_id.to_string(),
                kind,
                input: text.to_string(),
                system: spec.instructions.clone(),
                prompt: self.prompts.render(kind, text),
            };
            async move { self.call(&request).await }
        });
        let mut outcomes = futures::future::join_all(calls).await.into_iter();
        let outcomes = PerKind::from_fn(|_| outcomes.next().expect("one outcome per kind"));
        assemble(input_id, text, outcomes, self.tables)
    }
}

fn in_flight_cap(backend: &dyn Backend, config: &BackendConfig) -> usize {
    backend
        .max_in_flight()
        .map_or(config.max_in_flight, |b| b.min(config.max_in_flight))
        .max(1)
}

/// Converts one input: five concurrent element calls, then extraction,
/// merge and validation.
pub async fn convert_statement(
    backend: &dyn Backend,
    prompts: &PromptLibrary,
    tables: &TableSet,
    config: &BackendConfig,
    input_id: &str,
    text: &str,
) -> Result<ConversionResult, ConfigError> {
    config.validate()?;
    let run = Run {
        backend,
        prompts,
        tables,
        config,
        permits: Semaphore::new(in_flight_cap(backend, config)),
    };
    Ok(run.convert(input_id, text).await)
}

/// Converts a corpus of `(id, text)` pairs with at most `max_in_flight`
/// backend calls outstanding. Results come back in input order; failures
/// stay inside their own result.
pub async fn run_batch(
    corpus: &[(String, String)],
    backend: &dyn Backend,
    prompts: &PromptLibrary,
    tables: &TableSet,
    config: &BackendConfig,
    progress: &(dyn Fn(BatchProgress<'_>) + Sync),
) -> Result<Vec<ConversionResult>, BatchError> {
    config.validate()?;
    let mut seen = HashSet::new();
    for (id, _) in corpus {
        if !seen.insert(id.as_str()) {
            return Err(BatchError::DuplicateId(id.clone()));
        }
    }
    let cap = in_flight_cap(backend, config);
    let run = Run {
        backend,
        prompts,
        tables,
        config,
        permits: Semaphore::new(cap),
    };
    let completed = AtomicUsize::new(0);
    let total = corpus.len();
    let run = &run;
    let completed = &completed;
    let results = stream::iter(corpus)
        .map(|(id, text)| async move {
            let result = run.convert(id, text).await;
            let done = completed.fetch_add(1, Ordering::SeqCst) + 1;
            progress(BatchProgress {
                input_id: id,
                completed: done,
                total,
            });
            result
        })
        .buffered(cap)
        .collect()
        .await;
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixtures() -> (PromptLibrary, TableSet) {
        let tables = TableSet::bundled();
        (PromptLibrary::bundled(&tables).unwrap(), tables)
    }

    #[tokio::test]
    async fn rules_backend_matches_direct_conversion() {
        let (prompts, tables) = fixtures();
        let backend = RulesBackend::default();
        let text = "clonazepam 0.5 mg Tablet PO Q4H for headache";
        let r = convert_statement(&backend, &prompts, &tables, &BackendConfig::default(), "1", text)
            .await
            .unwrap();
        assert_eq!(r, backend.convert("1", text));
    }

    #[tokio::test]
    async fn empty_corpus_and_duplicates() {
        let (prompts, tables) = fixtures();
        let backend = RulesBackend::default();
        let config = BackendConfig::default();
        let none = run_batch(&[], &backend, &prompts, &tables, &config, &|_| {})
            .await
            .unwrap();
        assert!(none.is_empty());
        let dup = vec![("a".to_string(), "x".to_string()), ("a".to_string(), "y".to_string())];
        let err = run_batch(&dup, &backend, &prompts, &tables, &config, &|_| {})
            .await
            .unwrap_err();
        assert_eq!(err, BatchError::DuplicateId("a".into()));
    }
}
