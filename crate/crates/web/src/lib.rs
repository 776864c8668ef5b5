//! Browser bindings: convert a sig with the rules backend, render an element
//! prompt, and validate a pasted resource. Every call is offline.

use fhir_sculptor::conversion::{ElementKind, PromptLibrary, RulesBackend};
use fhir_sculptor::terminology::TableSet;
use fhir_sculptor::validator::validate_json;
use wasm_bindgen::prelude::*;

fn to_js(err: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&err.to_string())
}

/// Converts one free-text sig. Returns the conversion result as pretty JSON:
/// the merged resource, per-element fragments and the validation report.
#[wasm_bindgen(js_name = convertSig)]
pub fn convert_sig(text: &str) -> Result<String, JsValue> {
    let result = RulesBackend::default().convert("demo", text);
    serde_json::to_string_pretty(&result).map_err(to_js)
}

/// The prompt sent for `kind` (medication, route, schedule, dosage, reason).
#[wasm_bindgen(js_name = renderPrompt)]
pub fn render_prompt(kind: &str, text: &str) -> Result<String, JsValue> {
    let kind: ElementKind = kind.parse().map_err(to_js)?;
    let prompts = PromptLibrary::bundled(&TableSet::bundled()).map_err(to_js)?;
    Ok(prompts.render(kind, text))
}

/// Validates a MedicationStatement and returns the report as pretty JSON.
#[wasm_bindgen(js_name = validateResource)]
pub fn validate_resource(json: &str) -> Result<String, JsValue> {
    let report = validate_json(json, &TableSet::bundled());
    serde_json::to_string_pretty(&report).map_err(to_js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converted_sig_validates() {
        let out = convert_sig("amoxicillin 500 mg capsule PO TID for 10 days").unwrap();
        let value: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(value["validation"]["valid"], true);
        let resource = serde_json::to_string(&value["resource"]).unwrap();
        let report: serde_json::Value = serde_json::from_str(&validate_resource(&resource).unwrap()).unwrap();
        assert_eq!(report["valid"], true);
    }

    #[test]
    fn prompt_ends_with_input() {
        assert!(render_prompt("route", "apply topically")
            .unwrap()
            .ends_with("## Input\napply topically"));
    }
}
