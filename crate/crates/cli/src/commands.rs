use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use fhir_sculptor::conversion::{run_batch, Backend, BatchProgress, PromptLibrary, RemoteBackend, RulesBackend};
use fhir_sculptor::corpus::{gold_resources, read_corpus, read_results};
use fhir_sculptor::eval::{compute_metrics, join, render_report};
use fhir_sculptor::sig::{RuleTable, SigParser};
use fhir_sculptor::terminology::TableSet;
use fhir_sculptor::validator::{validate_value, ValidationReport};
use serde_json::{json, Value};

use crate::config::{BackendKind, FileConfig, RunConfig};
use crate::{Cli, Command, ValidateFormat};

/// Exit status when the command ran but some input failed.
const PARTIAL: u8 = 2;

pub fn run(cli: Cli) -> Result<ExitCode> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Convert {
            input,
            out,
            backend,
            tables,
            templates,
            quiet,
        } => {
            let config = RunConfig::resolve(file, &backend, &tables, &templates)?;
            convert(&config, &input, out.as_deref(), quiet)
        }
        Command::Validate { input, tables, format } => {
            let tables = load_tables(tables.tables.as_deref().or(file.tables.as_deref()))?;
            validate(&tables, &input, format)
        }
        Command::Evaluate {
            input,
            gold,
            format,
            out,
        } => evaluate(&input, &gold, format.into(), out.as_deref()),
        Command::Prompt {
            kind,
            text,
            tables,
            templates,
        } => {
            let tables = load_tables(tables.tables.as_deref().or(file.tables.as_deref()))?;
            let prompts = load_prompts(templates.templates.as_deref().or(file.templates.as_deref()), &tables)?;
            print!("{}", prompts.render(kind, &text));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Writes to `out`, or standard output when absent.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn load_tables(dir: Option<&Path>) -> Result<TableSet> {
    match dir {
        None => Ok(TableSet::bundled()),
        Some(dir) => {
            anyhow::ensure!(dir.is_dir(), "{} is not a directory", dir.display());
            TableSet::load_dir(dir).with_context(|| format!("cannot load code tables from {}", dir.display()))
        }
    }
}

fn load_rules(dir: Option<&Path>) -> Result<RuleTable> {
    match dir.map(|d| d.join("frequency_rules.csv")).filter(|p| p.exists()) {
        None => Ok(RuleTable::bundled()),
        Some(path) => RuleTable::load(&path).with_context(|| format!("cannot load {}", path.display())),
    }
}

fn load_prompts(dir: Option<&Path>, tables: &TableSet) -> Result<PromptLibrary> {
    match dir {
        None => Ok(PromptLibrary::bundled(tables)?),
        Some(dir) => {
            anyhow::ensure!(dir.is_dir(), "{} is not a directory", dir.display());
            PromptLibrary::load_dir(dir, tables)
                .with_context(|| format!("cannot load prompt templates from {}", dir.display()))
        }
    }
}

fn convert(config: &RunConfig, input: &Path, out: Option<&Path>, quiet: bool) -> Result<ExitCode> {
    let records = read_corpus(&read(input)?).with_context(|| format!("invalid corpus {}", input.display()))?;
    let tables = load_tables(config.tables.as_deref())?;
    let prompts = load_prompts(config.templates.as_deref(), &tables)?;
    // Built before any request so a missing credential fails fast.
    let backend: Box<dyn Backend> = match config.backend {
        BackendKind::Rules => Box::new(RulesBackend::new(SigParser::new(
            tables.clone(),
            load_rules(config.tables.as_deref())?,
        ))),
        BackendKind::Remote => Box::new(RemoteBackend::from_env(&config.backend_config)?),
    };
    let corpus: Vec<(String, String)> = records.into_iter().map(|r| (r.id, r.text)).collect();

    let progress = |p: BatchProgress<'_>| {
        if !quiet {
            eprintln!("[{}/{}] {}", p.completed, p.total, p.input_id);
        }
    };
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    let results = runtime.block_on(run_batch(
        &corpus,
        backend.as_ref(),
        &prompts,
        &tables,
        &config.backend_config,
        &progress,
    ))?;

    let mut text = String::new();
    for result in &results {
        text.push_str(&result.to_json_line());
        text.push('\n');
    }
    emit(out, &text)?;

    let missing = results.iter().filter(|r| r.resource.is_none()).count();
    let invalid = results
        .iter()
        .filter(|r| r.validation.as_ref().is_some_and(|v| !v.valid))
        .count();
    let failures: usize = results.iter().map(|r| r.format_failures()).sum();
    eprintln!(
        "converted {} inputs: {} resources, {} invalid, {} format failures",
        results.len(),
        results.len() - missing,
        invalid,
        failures
    );
    Ok(if missing == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(PARTIAL)
    })
}

/// Splits an input file into documents: one JSON document or array, or JSON lines.
fn documents(text: &str) -> Vec<(String, Result<Value, String>)> {
    if text.trim().is_empty() {
        return Vec::new();
    }
    if let Ok(value) = serde_json::from_str::<Value>(text) {
        let values = match value {
            Value::Array(items) => items,
            other => vec![other],
        };
        return values
            .into_iter()
            .enumerate()
            .map(|(i, v)| (label(&v, &format!("#{}", i + 1)), Ok(v)))
            .collect();
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let fallback = format!("line {}", i + 1);
            match serde_json::from_str::<Value>(l) {
                Ok(v) => (label(&v, &fallback), Ok(v)),
                Err(e) => (fallback, Err(format!("not JSON: {e}"))),
            }
        })
        .collect()
}

fn label(value: &Value, fallback: &str) -> String {
    ["inputId", "id"]
        .iter()
        .find_map(|k| value.get(k).and_then(Value::as_str))
        .map_or_else(|| fallback.to_string(), str::to_string)
}

/// The resource inside a document: the document itself, a corpus record's
/// gold, or a conversion result's resource.
fn resource_of(value: &Value) -> Result<&Value, String> {
    if value.get("resourceType").is_some() {
        return Ok(value);
    }
    for key in ["gold", "resource"] {
        if let Some(inner) = value.get(key) {
            return if inner.is_null() {
                Err(format!("`{key}` is null"))
            } else {
                Ok(inner)
            };
        }
    }
    Ok(value)
}

fn validate(tables: &TableSet, input: &Path, format: ValidateFormat) -> Result<ExitCode> {
    let docs = documents(&read(input)?);
    let mut invalid = 0;
    let mut out = String::new();
    let mut reports = Vec::new();
    for (label, doc) in &docs {
        let checked: Result<ValidationReport, String> = doc.as_ref().map_err(Clone::clone).and_then(|v| {
            let resource = resource_of(v)?;
            Ok(validate_value(resource, tables))
        });
        let ok = checked.as_ref().is_ok_and(|r| r.valid);
        if !ok {
            invalid += 1;
        }
        match format {
            ValidateFormat::Text => match &checked {
                Ok(report) => {
                    out.push_str(&format!(
                        "{label}: {}\n",
                        if report.valid { "valid" } else { "invalid" }
                    ));
                    for issue in &report.issues {
                        out.push_str(&format!("  {issue}\n"));
                    }
                }
                Err(message) => out.push_str(&format!("{label}: invalid\n  {message}\n")),
            },
            ValidateFormat::Json => reports.push(match &checked {
                Ok(report) => json!({ "document": label, "valid": report.valid, "issues": report.issues }),
                Err(message) => json!({ "document": label, "valid": false, "error": message }),
            }),
        }
    }
    match format {
        ValidateFormat::Text => out.push_str(&format!("{} documents, {} invalid\n", docs.len(), invalid)),
        ValidateFormat::Json => {
            out = serde_json::to_string_pretty(&reports)?;
            out.push('\n');
        }
    }
    emit(None, &out)?;
    Ok(if invalid == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(PARTIAL)
    })
}

fn evaluate(
    input: &Path,
    gold: &Path,
    format: fhir_sculptor::eval::ReportFormat,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let results = read_results(&read(input)?).with_context(|| format!("invalid results file {}", input.display()))?;
    let records = read_corpus(&read(gold)?).with_context(|| format!("invalid gold corpus {}", gold.display()))?;
    let gold = gold_resources(&records)?;
    let pairs = join(gold, results)?;
    let report = compute_metrics(&pairs)?;
    let mut text = render_report(&report, format);
    if !text.ends_with('\n') {
        text.push('\n');
    }
    emit(out, &text)?;
    Ok(ExitCode::SUCCESS)
}
