mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fhir_sculptor::conversion::ElementKind;
use fhir_sculptor::eval::ReportFormat;

use config::{BackendArgs, TableArgs, TemplateArgs};

/// Convert free-text medication sigs to FHIR R5 MedicationStatement resources,
/// validate them and score them against gold.
#[derive(Debug, Parser)]
#[command(name = "fhir-sculptor", version)]
struct Cli {
    /// TOML config file; flags and environment variables take precedence.
    #[arg(long, global = true, env = "FHIR_SCULPTOR_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ValidateFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvalFormat {
    Table,
    Json,
    Csv,
}

impl From<EvalFormat> for ReportFormat {
    fn from(f: EvalFormat) -> Self {
        match f {
            EvalFormat::Table => ReportFormat::Table,
            EvalFormat::Json => ReportFormat::Json,
            EvalFormat::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert a JSON-lines corpus ({"id", "text"} per line) into conversion results.
    /// Exits 2 when any input produced no resource.
    Convert {
        #[arg(long = "in")]
        input: PathBuf,
        /// Results file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        tables: TableArgs,
        #[command(flatten)]
        templates: TemplateArgs,
        /// No progress lines on standard error.
        #[arg(long)]
        quiet: bool,
    },
    /// Validate resources: JSON-lines of resources, corpus records or conversion
    /// results, or a single JSON document or array. Exits 2 when any is invalid.
    Validate {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        tables: TableArgs,
        #[arg(long, value_enum, default_value = "text")]
        format: ValidateFormat,
    },
    /// Score conversion results against a gold corpus.
    Evaluate {
        /// Conversion results (JSON lines).
        #[arg(long = "in")]
        input: PathBuf,
        /// Corpus with gold resources (JSON lines).
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: EvalFormat,
        /// Report file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the prompt sent for one element kind.
    Prompt {
        /// medication, route, schedule, dosage or reason.
        #[arg(value_parser = parse_kind)]
        kind: ElementKind,
        /// Input text inserted at the end of the prompt.
        #[arg(default_value = "")]
        text: String,
        #[command(flatten)]
        tables: TableArgs,
        #[command(flatten)]
        templates: TemplateArgs,
    },
}

fn parse_kind(s: &str) -> Result<ElementKind, String> {
    s.parse()
        .map_err(|e: fhir_sculptor::conversion::UnknownKind| e.to_string())
}

fn main() -> ExitCode {
    let filter = tracing_subscriber::EnvFilter::try_from_env("FHIR_SCULPTOR_LOG")
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn"));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();

    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
