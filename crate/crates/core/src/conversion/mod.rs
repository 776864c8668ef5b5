//! Per-element prompts, model-output extraction, backends and the batch
//! runner that turns free text into validated resources.

mod config;
mod extract;
mod kind;
mod prompt;
#[cfg(feature = "remote")]
mod remote;
mod result;
mod rules_backend;
#[cfg(feature = "runtime")]
mod runner;

pub use config::{BackendConfig, ConfigError, DEFAULT_API_KEY_ENV};
pub use extract::{extract_json, FormatFailure};
pub use kind::{ElementKind, PerKind, UnknownKind};
pub use prompt::{
    build_prompt, codes_directly, render_code_list, Example, PromptError, PromptLibrary, PromptSpec, DIRECTIVE,
    MARKERS, SECTION_HEADINGS,
};
#[cfg(feature = "remote")]
pub use remote::RemoteBackend;
pub use result::{assemble, ConversionResult, ElementOutcome};
pub use rules_backend::RulesBackend;
#[cfg(feature = "runtime")]
pub use runner::{convert_statement, run_batch, Backend, BackendError, BatchError, BatchProgress, ElementRequest};
