//! Local validation of MedicationStatement resources and fragments.
//!
//! Checks run in a fixed order: structure, datatype, code binding (including
//! out-of-vocabulary codes), display names, cardinality. Display mismatches
//! are warnings; everything else is an error.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::{
    self, display_path, CodeableConcept, Coding, Document, Dosage, Dose, Fragment, MedicationStatement, ParseError,
    Quantity, ShapeKind, TimeUnit, Timing,
};
use crate::terminology::{systems, Binding, DisplayCheck, TableSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    Structure,
    Datatype,
    CodeBinding,
    DisplayName,
    Cardinality,
    OovCode,
}

impl IssueKind {
    pub const ALL: [IssueKind; 6] = [
        IssueKind::Structure,
        IssueKind::Datatype,
        IssueKind::CodeBinding,
        IssueKind::DisplayName,
        IssueKind::Cardinality,
        IssueKind::OovCode,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IssueKind::Structure => "structure",
            IssueKind::Datatype => "datatype",
            IssueKind::CodeBinding => "code_binding",
            IssueKind::DisplayName => "display_name",
            IssueKind::Cardinality => "cardinality",
            IssueKind::OovCode => "oov_code",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub severity: Severity,
    pub path: String,
    pub kind: IssueKind,
    pub message: String,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let severity = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "{severity} [{}] {}: {}",
            self.kind.as_str(),
            display_path(&self.path),
            self.message
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
    pub valid: bool,
}

impl ValidationReport {
    fn from_issues(mut issues: Vec<ValidationIssue>) -> Self {
        // Stable sort keeps traversal order within a kind.
        issues.sort_by_key(|i| kind_rank(i.kind));
        let valid = !issues.iter().any(|i| i.severity == Severity::Error);
        ValidationReport { issues, valid }
    }

    /// Adds issues found outside the document itself, keeping kind order.
    pub fn extend(&mut self, issues: impl IntoIterator<Item = ValidationIssue>) {
        let mut all = std::mem::take(&mut self.issues);
        all.extend(issues);
        *self = Self::from_issues(all);
    }

    pub fn errors(&self) -> impl Iterator<Item = &ValidationIssue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn has_kind(&self, kind: IssueKind) -> bool {
        self.issues.iter().any(|i| i.kind == kind)
    }

    /// One issue per line, or `valid` when there are none.
    pub fn to_text(&self) -> String {
        if self.issues.is_empty() {
            return "valid".to_string();
        }
        self.issues
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("\n")
    }
}

fn kind_rank(kind: IssueKind) -> u8 {
    match kind {
        IssueKind::Structure => 0,
        IssueKind::Datatype => 1,
        IssueKind::CodeBinding | IssueKind::OovCode => 2,
        IssueKind::DisplayName => 3,
        IssueKind::Cardinality => 4,
    }
}

const STATUS_CODES: [&str; 3] = ["recorded", "entered-in-error", "draft"];

struct Checker<'t> {
    tables: &'t TableSet,
    issues: Vec<ValidationIssue>,
}

impl<'t> Checker<'t> {
    fn push(&mut self, severity: Severity, kind: IssueKind, path: String, message: impl Into<String>) {
        self.issues.push(ValidationIssue {
            severity,
            path,
            kind,
            message: message.into(),
        });
    }

    fn error(&mut self, kind: IssueKind, path: String, message: impl Into<String>) {
        self.push(Severity::Error, kind, path, message);
    }

    fn unknown_keys(&mut self, path: &str, extras: &model::Extras) {
        for key in extras.keys() {
            let at = join(path, key);
            self.push(
                Severity::Warning,
                IssueKind::Structure,
                at,
                format!("unknown element `{key}` retained"),
            );
        }
    }

    fn coding(&mut self, coding: &Coding, path: &str, binding: Binding) {
        self.unknown_keys(path, &coding.extras);
        let registry = systems::SystemRegistry::bundled();
        if !registry.is_canonical(&coding.system) {
            self.error(
                IssueKind::CodeBinding,
                join(path, "system"),
                format!("unknown code system `{}`", coding.system),
            );
            return;
        }
        if let Some(allowed) = binding.fixed_systems() {
            if !allowed.contains(&coding.system.as_str()) {
                let names: Vec<&str> = allowed.iter().map(|s| systems::short_name(s)).collect();
                self.error(
                    IssueKind::CodeBinding,
                    join(path, "system"),
                    format!(
                        "system {} is not bound to this element (expected {})",
                        systems::short_name(&coding.system),
                        names.join(" or ")
                    ),
                );
                return;
            }
        }
        let Some(table) = self.tables.table_for(binding) else {
            return;
        };
        if !table.covers(&coding.system) {
            if binding.fixed_systems().is_none() {
                self.error(
                    IssueKind::CodeBinding,
                    join(path, "system"),
                    format!(
                        "system {} is not covered by the bound dictionary",
                        systems::short_name(&coding.system)
                    ),
                );
            }
            return;
        }
        match table.verify_display(coding) {
            DisplayCheck::Ok => {}
            DisplayCheck::UnknownCode => self.error(
                IssueKind::OovCode,
                join(path, "code"),
                format!(
                    "code {} does not exist in the {} table",
                    coding.code,
                    systems::short_name(&coding.system)
                ),
            ),
            DisplayCheck::Mismatch { expected } => {
                let message = match &coding.display {
                    Some(found) => format!("display \"{found}\" does not match \"{expected}\""),
                    None => format!("display missing; expected \"{expected}\""),
                };
                self.push(
                    Severity::Warning,
                    IssueKind::DisplayName,
                    join(path, "display"),
                    message,
                );
            }
        }
    }

    fn concept(&mut self, cc: &CodeableConcept, path: &str, binding: Binding) {
        self.unknown_keys(path, &cc.extras);
        for (i, coding) in cc.coding.iter().enumerate() {
            self.coding(coding, &format!("{}[{i}]", join(path, "coding")), binding);
        }
    }

    fn quantity(&mut self, q: &Quantity, path: &str) {
        self.unknown_keys(path, &q.extras);
        if !q.value.is_finite() || q.value < 0.0 {
            self.error(
                IssueKind::Datatype,
                join(path, "value"),
                format!("value {} must be a non-negative decimal", q.value),
            );
        }
        if let Some(system) = &q.system {
            if system != systems::UCUM {
                self.error(
                    IssueKind::CodeBinding,
                    join(path, "system"),
                    format!("quantity system must be {}, found `{system}`", systems::UCUM),
                );
                return;
            }
        }
        match (&q.code, &q.system) {
            (Some(_), None) => {
                self.error(
                    IssueKind::Structure,
                    join(path, "system"),
                    "quantity code requires system",
                );
            }
            (Some(code), Some(system)) => {
                let coding = Coding {
                    system: system.clone(),
                    code: code.clone(),
                    display: q.unit.clone(),
                    extras: model::Extras::new(),
                };
                match self.tables.units.verify_display(&coding) {
                    DisplayCheck::Ok => {}
                    DisplayCheck::UnknownCode => self.error(
                        IssueKind::OovCode,
                        join(path, "code"),
                        format!("unit code {code} does not exist in the UCUM table"),
                    ),
                    DisplayCheck::Mismatch { expected } => self.push(
                        Severity::Warning,
                        IssueKind::DisplayName,
                        join(path, "unit"),
                        format!(
                            "unit \"{}\" does not match \"{expected}\"",
                            q.unit.as_deref().unwrap_or("")
                        ),
                    ),
                }
            }
            _ => {}
        }
    }

    fn positive(&mut self, value: f64, path: String, what: &str) {
        if !(value.is_finite() && value > 0.0) {
            self.error(
                IssueKind::Datatype,
                path,
                format!("{what} must be positive, found {value}"),
            );
        }
    }

    fn time_unit(&mut self, unit: &str, path: String) {
        if TimeUnit::from_code(unit).is_none() {
            let allowed: Vec<&str> = TimeUnit::ALL.iter().map(|u| u.code()).collect();
            self.error(
                IssueKind::Datatype,
                path,
                format!("`{unit}` is not a time unit (expected one of {})", allowed.join(", ")),
            );
        }
    }

    fn timing(&mut self, timing: &Timing, path: &str) {
        self.unknown_keys(path, &timing.extras);
        if let Some(repeat) = &timing.repeat {
            let rp = join(path, "repeat");
            self.unknown_keys(&rp, &repeat.extras);
            if repeat.frequency == 0 {
                self.error(
                    IssueKind::Datatype,
                    join(&rp, "frequency"),
                    "frequency must be a positive integer",
                );
            }
            self.positive(repeat.period, join(&rp, "period"), "period");
            self.time_unit(&repeat.period_unit, join(&rp, "periodUnit"));
            if let Some((duration, unit)) = &repeat.duration {
                self.positive(*duration, join(&rp, "duration"), "duration");
                self.time_unit(unit, join(&rp, "durationUnit"));
            }
        }
        if let Some(code) = &timing.code {
            self.concept(code, &join(path, "code"), Binding::TimingCode);
        }
    }

    fn dose(&mut self, dose: &Dose, path: &str) {
        match dose {
            Dose::Quantity(q) => self.quantity(q, &join(path, "doseQuantity")),
            Dose::Range(r) => {
                let rp = join(path, "doseRange");
                self.unknown_keys(&rp, &r.extras);
                self.quantity(&r.low, &join(&rp, "low"));
                self.quantity(&r.high, &join(&rp, "high"));
                if r.low.value > r.high.value {
                    self.error(
                        IssueKind::Datatype,
                        rp.clone(),
                        format!("range low {} exceeds high {}", r.low.value, r.high.value),
                    );
                }
                if r.low.code != r.high.code || r.low.unit != r.high.unit {
                    self.error(IssueKind::Datatype, rp, "range bounds use different units");
                }
            }
        }
    }

    fn dosage(&mut self, dosage: &Dosage, path: &str) {
        self.unknown_keys(path, &dosage.extras);
        if let Some(route) = &dosage.route {
            self.concept(route, &join(path, "route"), Binding::Route);
        }
        if let Some(timing) = &dosage.timing {
            self.timing(timing, &join(path, "timing"));
        }
        let dose_path = format!("{}[0]", join(path, "doseAndRate"));
        self.unknown_keys(&dose_path, &dosage.dose_extras);
        if let Some(dose) = &dosage.dose {
            self.dose(dose, &dose_path);
        }
    }

    fn resource(&mut self, r: &MedicationStatement) {
        self.unknown_keys("", &r.extras);
        if !STATUS_CODES.contains(&r.status.as_str()) {
            self.error(
                IssueKind::Datatype,
                "status".into(),
                format!("status `{}` is not one of {}", r.status, STATUS_CODES.join(", ")),
            );
        }
        let med = &r.medication;
        self.unknown_keys("medication", &med.extras);
        self.concept(&med.code, "medication.code", Binding::Medication);
        if let Some(form) = &med.dose_form {
            self.concept(form, "medication.doseForm", Binding::DoseForm);
        }
        if let Some(q) = &med.total_volume {
            self.quantity(q, "medication.totalVolume");
        }
        for (i, reason) in r.reason.iter().enumerate() {
            let path = format!("reason[{i}]");
            self.unknown_keys(&path, &reason.extras);
            self.concept(&reason.concept, &join(&path, "concept"), Binding::Reason);
        }
        for (i, dosage) in r.dosage.iter().enumerate() {
            self.dosage(dosage, &format!("dosage[{i}]"));
        }
    }

    fn fragment(&mut self, f: &Fragment) {
        self.unknown_keys("", &f.extras);
        if let Some(code) = &f.code {
            self.concept(code, "code", Binding::Medication);
        }
        if let Some(form) = &f.dose_form {
            self.concept(form, "doseForm", Binding::DoseForm);
        }
        if let Some(q) = &f.total_volume {
            self.quantity(q, "totalVolume");
        }
        if let Some(route) = &f.route {
            self.concept(route, "route", Binding::Route);
        }
        if let Some(timing) = &f.timing {
            self.timing(timing, "timing");
        }
        if let Some(dose) = &f.dose {
            self.dose(dose, "");
        }
        for (i, reason) in f.reason.iter().enumerate() {
            let path = format!("reason[{i}]");
            self.unknown_keys(&path, &reason.extras);
            self.concept(&reason.concept, &join(&path, "concept"), Binding::Reason);
        }
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

/// Validates a parsed document against the bound tables. Never fails: every
/// finding becomes an issue.
pub fn validate(document: &Document, tables: &TableSet) -> ValidationReport {
    let mut checker = Checker {
        tables,
        issues: Vec::new(),
    };
    match document {
        Document::Resource(r) => checker.resource(r),
        Document::Fragment(f) => checker.fragment(f),
    }
    ValidationReport::from_issues(checker.issues)
}

pub fn validate_resource(resource: &MedicationStatement, tables: &TableSet) -> ValidationReport {
    let mut checker = Checker {
        tables,
        issues: Vec::new(),
    };
    checker.resource(resource);
    ValidationReport::from_issues(checker.issues)
}

/// Maps a parse failure to the issue it represents.
pub fn parse_error_issue(err: &ParseError) -> ValidationIssue {
    match err {
        ParseError::MalformedDocument(message) => ValidationIssue {
            severity: Severity::Error,
            path: String::new(),
            kind: IssueKind::Structure,
            message: format!("not valid JSON: {message}"),
        },
        ParseError::Shape { path, kind, message } => ValidationIssue {
            severity: Severity::Error,
            path: path.clone(),
            kind: match kind {
                ShapeKind::MissingField | ShapeKind::EmptyElement | ShapeKind::Unpaired => IssueKind::Structure,
                ShapeKind::WrongType => IssueKind::Datatype,
                ShapeKind::Cardinality => IssueKind::Cardinality,
            },
            message: message.clone(),
        },
    }
}

/// Parses then validates a JSON tree; shape problems are reported as issues.
pub fn validate_value(value: &Value, tables: &TableSet) -> ValidationReport {
    match model::document_from_value(value) {
        Ok(parsed) => validate(&parsed.value, tables),
        Err(err) => ValidationReport::from_issues(vec![parse_error_issue(&err)]),
    }
}

pub fn validate_json(text: &str, tables: &TableSet) -> ValidationReport {
    match model::parse(text) {
        Ok(parsed) => validate(&parsed.value, tables),
        Err(err) => ValidationReport::from_issues(vec![parse_error_issue(&err)]),
    }
}

pub fn validate_batch(documents: &[Document], tables: &TableSet) -> Vec<ValidationReport> {
    documents.iter().map(|d| validate(d, tables)).collect()
}
