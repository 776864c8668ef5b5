//! Structural comparison on canonical forms.
//!
//! Two values are equal when their canonical JSON trees match after:
//! key order is ignored, numbers compare by value, `display` and `text`
//! strings are case-folded with whitespace collapsed, and `coding` lists are
//! compared as multisets. Codes and systems stay case-sensitive and every
//! other list (dosage, reason) keeps its order.

use serde_json::{Map, Number, Value};

use super::json::document_to_value;
use super::json::{fragment_to_value, resource_to_value};
use super::types::{Document, Fragment, MedicationStatement};

fn fold(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Normal form used for comparisons. Equal normal forms mean structurally
/// equal values, which makes the relation an equivalence.
pub fn canonical_form(value: &Value) -> Value {
    normalize(value, None)
}

fn normalize(value: &Value, key: Option<&str>) -> Value {
    match value {
        Value::Number(n) => n
            .as_f64()
            .and_then(Number::from_f64)
            .map_or_else(|| value.clone(), Value::Number),
        Value::String(s) if matches!(key, Some("display" | "text")) => Value::String(fold(s)),
        Value::Array(items) => {
            let mut out: Vec<Value> = items.iter().map(|v| normalize(v, None)).collect();
            if key == Some("coding") {
                out.sort_by_cached_key(|v| v.to_string());
            }
            Value::Array(out)
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            let mut out = Map::new();
            for k in keys {
                out.insert(k.clone(), normalize(&map[k], Some(k)));
            }
            Value::Object(out)
        }
        other => other.clone(),
    }
}

pub fn values_equal(a: &Value, b: &Value) -> bool {
    canonical_form(a) == canonical_form(b)
}

pub fn structural_equals(a: &Document, b: &Document) -> bool {
    values_equal(&document_to_value(a), &document_to_value(b))
}

pub fn resources_equal(a: &MedicationStatement, b: &MedicationStatement) -> bool {
    values_equal(&resource_to_value(a), &resource_to_value(b))
}

pub fn fragments_equal(a: &Fragment, b: &Fragment) -> bool {
    values_equal(&fragment_to_value(a), &fragment_to_value(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn numbers_by_value() {
        assert!(values_equal(&json!({"period": 4.0}), &json!({"period": 4})));
        assert!(!values_equal(&json!({"period": 4.5}), &json!({"period": 4})));
    }

    #[test]
    fn display_case_folds_code_does_not() {
        assert!(values_equal(
            &json!({"display": "Oral route"}),
            &json!({"display": "oral  route"})
        ));
        assert!(!values_equal(&json!({"code": "Q4H"}), &json!({"code": "q4h"})));
        assert!(!values_equal(
            &json!({"system": "SNOMED"}),
            &json!({"system": "snomed"})
        ));
    }

    #[test]
    fn coding_order_ignored_other_lists_kept() {
        let a = json!({"coding": [{"code": "1"}, {"code": "2"}]});
        let b = json!({"coding": [{"code": "2"}, {"code": "1"}]});
        assert!(values_equal(&a, &b));
        let a = json!({"dosage": [{"x": 1}, {"x": 2}]});
        let b = json!({"dosage": [{"x": 2}, {"x": 1}]});
        assert!(!values_equal(&a, &b));
    }

    #[test]
    fn key_order_ignored() {
        let a: Value = serde_json::from_str(r#"{"a":1,"b":2}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"b":2,"a":1}"#).unwrap();
        assert!(values_equal(&a, &b));
    }
}
