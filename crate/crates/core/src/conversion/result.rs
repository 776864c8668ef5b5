use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::extract::extract_json;
use super::kind::PerKind;
use crate::model::{fragment_from_value, merge_fragments, ElementFragments, Fragment, MedicationStatement};
use crate::terminology::TableSet;
use crate::validator::{parse_error_issue, validate_resource, ValidationReport};

/// Outcome of one element conversion: the backend's raw text, or the error
/// that remained after retries.
pub type ElementOutcome = Result<String, String>;

/// Everything produced for one input, kept for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConversionResult {
    pub input_id: String,
    #[serde(with = "resource_json")]
    pub resource: Option<MedicationStatement>,
    /// JSON object extracted from each response, before fragment parsing.
    pub fragments: PerKind<Option<Value>>,
    pub raw_responses: PerKind<Option<String>>,
    pub format_failure: PerKind<bool>,
    /// Backend, extraction or fragment errors per element.
    pub errors: PerKind<Option<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub merge_error: Option<String>,
    pub validation: Option<ValidationReport>,
}

mod resource_json {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::Value;

    use crate::model::{resource_from_value, resource_to_value, MedicationStatement};

    pub fn serialize<S: Serializer>(resource: &Option<MedicationStatement>, s: S) -> Result<S::Ok, S::Error> {
        resource.as_ref().map(resource_to_value).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<MedicationStatement>, D::Error> {
        match Option::<Value>::deserialize(d)? {
            None => Ok(None),
            Some(v) => resource_from_value(&v).map(|p| Some(p.value)).map_err(D::Error::custom),
        }
    }
}

impl ConversionResult {
    pub fn empty(input_id: impl Into<String>) -> Self {
        ConversionResult {
            input_id: input_id.into(),
            resource: None,
            fragments: PerKind::default(),
            raw_responses: PerKind::default(),
            format_failure: PerKind::default(),
            errors: PerKind::default(),
            merge_error: None,
            validation: None,
        }
    }

    pub fn format_failures(&self) -> usize {
        self.format_failure.iter().filter(|(_, failed)| **failed).count()
    }

    /// One JSON-lines record.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("conversion results always serialize")
    }
}

/// Extracts, parses, merges and validates the five element responses of one
/// input. Codes are passed through untouched; anything the tables do not
/// contain shows up in the validation report.
pub fn assemble(input_id: &str, text: &str, outcomes: PerKind<ElementOutcome>, tables: &TableSet) -> ConversionResult {
    let mut result = ConversionResult::empty(input_id);
    let mut parsed: PerKind<Fragment> = PerKind::default();
    let mut fragment_issues = Vec::new();
    let mut any_parsed = false;

    for (kind, outcome) in outcomes.into_pairs() {
        let raw = match outcome {
            Ok(raw) => raw,
            Err(message) => {
                *result.errors.get_mut(kind) = Some(message);
                continue;
            }
        };
        let extracted = extract_json(&raw);
        *result.raw_responses.get_mut(kind) = Some(raw);
        let value = match extracted {
            Ok(value) => value,
            Err(failure) => {
                *result.format_failure.get_mut(kind) = true;
                *result.errors.get_mut(kind) = Some(failure.to_string());
                continue;
            }
        };
        match fragment_from_value(&value) {
            Ok(fragment) => {
                *parsed.get_mut(kind) = fragment.value;
                any_parsed = true;
            }
            Err(err) => {
                let mut issue = parse_error_issue(&err);
                issue.message = format!("{kind} fragment rejected: {}", issue.message);
                *result.errors.get_mut(kind) = Some(issue.message.clone());
                fragment_issues.push(issue);
            }
        }
        *result.fragments.get_mut(kind) = Some(value);
    }

    if any_parsed {
        let fragments = ElementFragments {
            medication: parsed.medication,
            route: parsed.route,
            schedule: parsed.schedule,
            dose: parsed.dosage,
            reason: parsed.reason,
        };
        match merge_fragments(&fragments, text) {
            Ok(resource) => {
                let mut report = validate_resource(&resource, tables);
                report.extend(fragment_issues);
                result.resource = Some(resource);
                result.validation = Some(report);
            }
            Err(err) => result.merge_error = Some(err.to_string()),
        }
    }
    result
}
