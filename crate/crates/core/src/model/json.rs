//! Canonical JSON for resources and fragments.
//!
//! Serialization uses a fixed key order, drops absent optionals and empty
//! lists, writes integral numbers without a fractional part, and appends
//! retained unknown keys (sorted) after the known ones. Parsing tracks the
//! element path so shape problems can be reported where they occur.

use std::fmt;

use serde_json::{Map, Number, Value};
use thiserror::Error;

use super::types::*;
use crate::terminology::systems;

pub const RESOURCE_TYPE: &str = "MedicationStatement";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeKind {
    MissingField,
    WrongType,
    /// A concept or element with nothing in it.
    EmptyElement,
    /// Mutually exclusive slots both filled, duplicate codings, or more list
    /// entries than the model allows.
    Cardinality,
    /// One member of a field pair (duration/durationUnit) without the other.
    Unpaired,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("malformed JSON: {0}")]
    MalformedDocument(String),
    #[error("{}: {message}", display_path(path))]
    Shape {
        path: String,
        kind: ShapeKind,
        message: String,
    },
}

impl ParseError {
    fn shape(path: &str, kind: ShapeKind, message: impl Into<String>) -> Self {
        ParseError::Shape {
            path: path.to_string(),
            kind,
            message: message.into(),
        }
    }
}

pub(crate) fn display_path(path: &str) -> &str {
    if path.is_empty() {
        "(root)"
    } else {
        path
    }
}

/// Non-fatal observations made while parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseNote {
    UnknownKey { path: String },
    SystemAlias { path: String, original: String },
}

impl fmt::Display for ParseNote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseNote::UnknownKey { path } => write!(f, "{path}: unknown key retained"),
            ParseNote::SystemAlias { path, original } => {
                write!(f, "{path}: system `{original}` normalized to canonical URI")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub value: T,
    pub notes: Vec<ParseNote>,
}

// ---------------------------------------------------------------------------
// Serialization

fn number(value: f64) -> Value {
    const EXACT_INT: f64 = 9_007_199_254_740_992.0;
    if value.fract() == 0.0 && value.abs() < EXACT_INT {
        Value::Number(Number::from(value as i64))
    } else {
        Number::from_f64(value).map_or(Value::Null, Value::Number)
    }
}

fn put_extras(map: &mut Map<String, Value>, extras: &Extras) {
    for (key, value) in extras {
        if !map.contains_key(key) {
            map.insert(key.clone(), value.clone());
        }
    }
}

fn coding_json(c: &Coding) -> Value {
    let mut m = Map::new();
    m.insert("system".into(), c.system.clone().into());
    m.insert("code".into(), c.code.clone().into());
    if let Some(d) = &c.display {
        m.insert("display".into(), d.clone().into());
    }
    put_extras(&mut m, &c.extras);
    Value::Object(m)
}

fn concept_json(cc: &CodeableConcept) -> Value {
    let mut m = Map::new();
    if let Some(t) = &cc.text {
        m.insert("text".into(), t.clone().into());
    }
    if !cc.coding.is_empty() {
        m.insert("coding".into(), cc.coding.iter().map(coding_json).collect());
    }
    put_extras(&mut m, &cc.extras);
    Value::Object(m)
}

fn reference_json(r: &CodeableReference) -> Value {
    let mut m = Map::new();
    m.insert("concept".into(), concept_json(&r.concept));
    put_extras(&mut m, &r.extras);
    Value::Object(m)
}

fn quantity_json(q: &Quantity) -> Value {
    let mut m = Map::new();
    m.insert("value".into(), number(q.value));
    if let Some(u) = &q.unit {
        m.insert("unit".into(), u.clone().into());
    }
    if let Some(s) = &q.system {
        m.insert("system".into(), s.clone().into());
    }
    if let Some(c) = &q.code {
        m.insert("code".into(), c.clone().into());
    }
    put_extras(&mut m, &q.extras);
    Value::Object(m)
}

fn range_json(r: &Range) -> Value {
    let mut m = Map::new();
    m.insert("low".into(), quantity_json(&r.low));
    m.insert("high".into(), quantity_json(&r.high));
    put_extras(&mut m, &r.extras);
    Value::Object(m)
}

fn repeat_json(r: &TimingRepeat) -> Value {
    let mut m = Map::new();
    m.insert("frequency".into(), Value::from(r.frequency));
    m.insert("period".into(), number(r.period));
    m.insert("periodUnit".into(), r.period_unit.clone().into());
    if let Some((value, unit)) = &r.duration {
        m.insert("duration".into(), number(*value));
        m.insert("durationUnit".into(), unit.clone().into());
    }
    put_extras(&mut m, &r.extras);
    Value::Object(m)
}

fn timing_json(t: &Timing) -> Value {
    let mut m = Map::new();
    if let Some(r) = &t.repeat {
        m.insert("repeat".into(), repeat_json(r));
    }
    if let Some(c) = &t.code {
        m.insert("code".into(), concept_json(c));
    }
    put_extras(&mut m, &t.extras);
    Value::Object(m)
}

fn put_dose(m: &mut Map<String, Value>, dose: &Dose) {
    match dose {
        Dose::Quantity(q) => m.insert("doseQuantity".into(), quantity_json(q)),
        Dose::Range(r) => m.insert("doseRange".into(), range_json(r)),
    };
}

fn dosage_json(d: &Dosage) -> Value {
    let mut m = Map::new();
    if let Some(r) = &d.route {
        m.insert("route".into(), concept_json(r));
    }
    if let Some(t) = &d.timing {
        m.insert("timing".into(), timing_json(t));
    }
    if d.dose.is_some() || !d.dose_extras.is_empty() {
        let mut entry = Map::new();
        if let Some(dose) = &d.dose {
            put_dose(&mut entry, dose);
        }
        put_extras(&mut entry, &d.dose_extras);
        m.insert("doseAndRate".into(), Value::Array(vec![Value::Object(entry)]));
    }
    put_extras(&mut m, &d.extras);
    Value::Object(m)
}

fn medication_json(med: &MedicationDetail) -> Value {
    let mut m = Map::new();
    m.insert("code".into(), concept_json(&med.code));
    if let Some(f) = &med.dose_form {
        m.insert("doseForm".into(), concept_json(f));
    }
    if let Some(q) = &med.total_volume {
        m.insert("totalVolume".into(), quantity_json(q));
    }
    put_extras(&mut m, &med.extras);
    Value::Object(m)
}

/// JSON tree of a resource in canonical key order.
pub fn resource_to_value(r: &MedicationStatement) -> Value {
    let mut m = Map::new();
    m.insert("resourceType".into(), RESOURCE_TYPE.into());
    m.insert("status".into(), r.status.clone().into());
    m.insert("medication".into(), medication_json(&r.medication));
    if !r.reason.is_empty() {
        m.insert("reason".into(), r.reason.iter().map(reference_json).collect());
    }
    if !r.dosage.is_empty() {
        m.insert("dosage".into(), r.dosage.iter().map(dosage_json).collect());
    }
    if let Some(text) = &r.source_text {
        let mut note = Map::new();
        note.insert("text".into(), text.clone().into());
        m.insert("note".into(), Value::Array(vec![Value::Object(note)]));
    }
    put_extras(&mut m, &r.extras);
    Value::Object(m)
}

pub fn fragment_to_value(f: &Fragment) -> Value {
    let mut m = Map::new();
    if let Some(c) = &f.code {
        m.insert("code".into(), concept_json(c));
    }
    if let Some(c) = &f.dose_form {
        m.insert("doseForm".into(), concept_json(c));
    }
    if let Some(q) = &f.total_volume {
        m.insert("totalVolume".into(), quantity_json(q));
    }
    if let Some(c) = &f.route {
        m.insert("route".into(), concept_json(c));
    }
    if let Some(t) = &f.timing {
        m.insert("timing".into(), timing_json(t));
    }
    if let Some(d) = &f.dose {
        put_dose(&mut m, d);
    }
    if !f.reason.is_empty() {
        m.insert("reason".into(), f.reason.iter().map(reference_json).collect());
    }
    put_extras(&mut m, &f.extras);
    Value::Object(m)
}

pub fn document_to_value(d: &Document) -> Value {
    match d {
        Document::Resource(r) => resource_to_value(r),
        Document::Fragment(f) => fragment_to_value(f),
    }
}

/// Canonical compact JSON text of a resource.
pub fn serialize(r: &MedicationStatement) -> String {
    resource_to_value(r).to_string()
}

pub fn serialize_fragment(f: &Fragment) -> String {
    fragment_to_value(f).to_string()
}

pub fn serialize_pretty(r: &MedicationStatement) -> String {
    serde_json::to_string_pretty(&resource_to_value(r)).expect("JSON values always serialize")
}

// ---------------------------------------------------------------------------
// Parsing

fn child(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn index(path: &str, i: usize) -> String {
    format!("{path}[{i}]")
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn wrong_type(path: &str, expected: &str, found: &Value) -> ParseError {
    ParseError::shape(
        path,
        ShapeKind::WrongType,
        format!("expected {expected}, found {}", type_name(found)),
    )
}

/// Reads an object's fields, remembering which keys were consumed so the rest
/// can be retained as extras.
struct Fields<'a> {
    path: String,
    map: &'a Map<String, Value>,
    used: Vec<&'static str>,
}

impl<'a> Fields<'a> {
    fn new(path: &str, value: &'a Value) -> Result<Self, ParseError> {
        match value {
            Value::Object(map) => Ok(Fields {
                path: path.to_string(),
                map,
                used: Vec::new(),
            }),
            other => Err(wrong_type(path, "object", other)),
        }
    }

    /// A present, non-null field.
    fn get(&mut self, key: &'static str) -> Option<(&'a Value, String)> {
        self.used.push(key);
        match self.map.get(key) {
            None | Some(Value::Null) => None,
            Some(v) => Some((v, child(&self.path, key))),
        }
    }

    fn require(&mut self, key: &'static str) -> Result<(&'a Value, String), ParseError> {
        let path = child(&self.path, key);
        self.get(key).ok_or_else(|| {
            ParseError::shape(
                &path,
                ShapeKind::MissingField,
                format!("required field `{key}` is missing"),
            )
        })
    }

    fn string(&mut self, key: &'static str) -> Result<Option<String>, ParseError> {
        match self.get(key) {
            None => Ok(None),
            Some((Value::String(s), _)) => Ok(Some(s.clone())),
            Some((other, path)) => Err(wrong_type(&path, "string", other)),
        }
    }

    fn required_string(&mut self, key: &'static str) -> Result<String, ParseError> {
        match self.require(key)? {
            (Value::String(s), _) => Ok(s.clone()),
            (other, path) => Err(wrong_type(&path, "string", other)),
        }
    }

    fn extras(self, notes: &mut Vec<ParseNote>) -> Extras {
        let mut extras = Extras::new();
        for (key, value) in self.map {
            if !self.used.iter().any(|u| u == key) {
                notes.push(ParseNote::UnknownKey {
                    path: child(&self.path, key),
                });
                extras.insert(key.clone(), value.clone());
            }
        }
        extras
    }
}

fn decimal(value: &Value, path: &str) -> Result<f64, ParseError> {
    value
        .as_f64()
        .filter(|v| v.is_finite())
        .ok_or_else(|| wrong_type(path, "decimal number", value))
}

fn array<'a>(value: &'a Value, path: &str) -> Result<&'a Vec<Value>, ParseError> {
    value.as_array().ok_or_else(|| wrong_type(path, "array", value))
}

struct Parser {
    notes: Vec<ParseNote>,
}

impl Parser {
    fn coding(&mut self, v: &Value, path: &str) -> Result<Coding, ParseError> {
        let mut f = Fields::new(path, v)?;
        let raw_system = f.required_string("system")?;
        let system = match systems::canonical_uri(&raw_system) {
            Some(uri) => {
                if uri != raw_system {
                    self.notes.push(ParseNote::SystemAlias {
                        path: child(path, "system"),
                        original: raw_system.clone(),
                    });
                }
                uri.to_string()
            }
            None => raw_system,
        };
        let code = f.required_string("code")?;
        if code.trim().is_empty() {
            return Err(ParseError::shape(
                &child(path, "code"),
                ShapeKind::EmptyElement,
                "code is empty",
            ));
        }
        let display = f.string("display")?;
        Ok(Coding {
            system,
            code,
            display,
            extras: f.extras(&mut self.notes),
        })
    }

    fn concept(&mut self, v: &Value, path: &str) -> Result<CodeableConcept, ParseError> {
        let mut f = Fields::new(path, v)?;
        let text = f.string("text")?;
        let mut coding = Vec::new();
        if let Some((list, list_path)) = f.get("coding") {
            for (i, item) in array(list, &list_path)?.iter().enumerate() {
                let item_path = index(&list_path, i);
                let c = self.coding(item, &item_path)?;
                if coding.iter().any(|o: &Coding| o.system == c.system && o.code == c.code) {
                    return Err(ParseError::shape(
                        &item_path,
                        ShapeKind::Cardinality,
                        format!("duplicate coding ({}, {})", systems::short_name(&c.system), c.code),
                    ));
                }
                coding.push(c);
            }
        }
        let cc = CodeableConcept {
            coding,
            text,
            extras: f.extras(&mut self.notes),
        };
        if cc.is_empty() {
            return Err(ParseError::shape(
                path,
                ShapeKind::EmptyElement,
                "concept has neither coding nor text",
            ));
        }
        Ok(cc)
    }

    fn reference(&mut self, v: &Value, path: &str) -> Result<CodeableReference, ParseError> {
        let mut f = Fields::new(path, v)?;
        let (concept, concept_path) = f.require("concept")?;
        let concept = self.concept(concept, &concept_path)?;
        Ok(CodeableReference {
            concept,
            extras: f.extras(&mut self.notes),
        })
    }

    fn reasons(&mut self, v: &Value, path: &str) -> Result<Vec<CodeableReference>, ParseError> {
        array(v, path)?
            .iter()
            .enumerate()
            .map(|(i, item)| self.reference(item, &index(path, i)))
            .collect()
    }

    fn quantity(&mut self, v: &Value, path: &str) -> Result<Quantity, ParseError> {
        let mut f = Fields::new(path, v)?;
        let (value, value_path) = f.require("value")?;
        let value = decimal(value, &value_path)?;
        let unit = f.string("unit")?;
        let system = match f.string("system")? {
            Some(raw) => match systems::canonical_uri(&raw) {
                Some(uri) if uri != raw => {
                    self.notes.push(ParseNote::SystemAlias {
                        path: child(path, "system"),
                        original: raw.clone(),
                    });
                    Some(uri.to_string())
                }
                _ => Some(raw),
            },
            None => None,
        };
        let code = f.string("code")?;
        Ok(Quantity {
            value,
            unit,
            system,
            code,
            extras: f.extras(&mut self.notes),
        })
    }

    fn range(&mut self, v: &Value, path: &str) -> Result<Range, ParseError> {
        let mut f = Fields::new(path, v)?;
        let (low, low_path) = f.require("low")?;
        let low = self.quantity(low, &low_path)?;
        let (high, high_path) = f.require("high")?;
        let high = self.quantity(high, &high_path)?;
        Ok(Range {
            low,
            high,
            extras: f.extras(&mut self.notes),
        })
    }

    fn repeat(&mut self, v: &Value, path: &str) -> Result<TimingRepeat, ParseError> {
        let mut f = Fields::new(path, v)?;
        let (freq, freq_path) = f.require("frequency")?;
        let frequency = freq
            .as_f64()
            .filter(|x| x.fract() == 0.0 && *x >= 0.0 && *x <= f64::from(u32::MAX))
            .map(|x| x as u32)
            .ok_or_else(|| wrong_type(&freq_path, "non-negative integer", freq))?;
        let (period, period_path) = f.require("period")?;
        let period = decimal(period, &period_path)?;
        let period_unit = f.required_string("periodUnit")?;
        let duration = f.get("duration").map(|(v, p)| decimal(v, &p)).transpose()?;
        let duration_unit = f.string("durationUnit")?;
        let duration = match (duration, duration_unit) {
            (Some(d), Some(u)) => Some((d, u)),
            (None, None) => None,
            (Some(_), None) => {
                return Err(ParseError::shape(
                    &child(path, "durationUnit"),
                    ShapeKind::Unpaired,
                    "duration given without durationUnit",
                ))
            }
            (None, Some(_)) => {
                return Err(ParseError::shape(
                    &child(path, "duration"),
                    ShapeKind::Unpaired,
                    "durationUnit given without duration",
                ))
            }
        };
        Ok(TimingRepeat {
            frequency,
            period,
            period_unit,
            duration,
            extras: f.extras(&mut self.notes),
        })
    }

    fn timing(&mut self, v: &Value, path: &str) -> Result<Timing, ParseError> {
        let mut f = Fields::new(path, v)?;
        let repeat = f.get("repeat").map(|(v, p)| self.repeat(v, &p)).transpose()?;
        let code = f.get("code").map(|(v, p)| self.concept(v, &p)).transpose()?;
        Ok(Timing {
            repeat,
            code,
            extras: f.extras(&mut self.notes),
        })
    }

    /// Reads `doseQuantity` / `doseRange` from an object that may carry one.
    fn dose_slot(&mut self, f: &mut Fields<'_>) -> Result<Option<Dose>, ParseError> {
        let quantity = f.get("doseQuantity");
        let range = f.get("doseRange");
        match (quantity, range) {
            (Some(_), Some((_, range_path))) => Err(ParseError::shape(
                &range_path,
                ShapeKind::Cardinality,
                "doseQuantity and doseRange are mutually exclusive",
            )),
            (Some((v, p)), None) => Ok(Some(Dose::Quantity(self.quantity(v, &p)?))),
            (None, Some((v, p))) => Ok(Some(Dose::Range(self.range(v, &p)?))),
            (None, None) => Ok(None),
        }
    }

    fn dosage(&mut self, v: &Value, path: &str) -> Result<Dosage, ParseError> {
        let mut f = Fields::new(path, v)?;
        let route = f.get("route").map(|(v, p)| self.concept(v, &p)).transpose()?;
        let timing = f.get("timing").map(|(v, p)| self.timing(v, &p)).transpose()?;
        let mut dose = None;
        let mut dose_extras = Extras::new();
        if let Some((list, list_path)) = f.get("doseAndRate") {
            let list = array(list, &list_path)?;
            if list.len() > 1 {
                return Err(ParseError::shape(
                    &index(&list_path, 1),
                    ShapeKind::Cardinality,
                    "at most one doseAndRate entry is supported",
                ));
            }
            if let Some(entry) = list.first() {
                let mut entry_fields = Fields::new(&index(&list_path, 0), entry)?;
                dose = self.dose_slot(&mut entry_fields)?;
                dose_extras = entry_fields.extras(&mut self.notes);
            }
        }
        Ok(Dosage {
            route,
            timing,
            dose,
            dose_extras,
            extras: f.extras(&mut self.notes),
        })
    }

    fn medication(&mut self, v: &Value, path: &str) -> Result<MedicationDetail, ParseError> {
        let mut f = Fields::new(path, v)?;
        let (code, code_path) = f.require("code")?;
        let code = self.concept(code, &code_path)?;
        let dose_form = f.get("doseForm").map(|(v, p)| self.concept(v, &p)).transpose()?;
        let total_volume = f.get("totalVolume").map(|(v, p)| self.quantity(v, &p)).transpose()?;
        Ok(MedicationDetail {
            code,
            dose_form,
            total_volume,
            extras: f.extras(&mut self.notes),
        })
    }

    /// `note` holding exactly one text-only annotation is the source text;
    /// anything else is kept as an unknown key.
    fn source_text(note: &Value) -> Option<String> {
        let list = note.as_array()?;
        match list.as_slice() {
            [Value::Object(entry)] if entry.len() == 1 => entry.get("text")?.as_str().map(str::to_string),
            _ => None,
        }
    }

    fn resource(&mut self, v: &Value) -> Result<MedicationStatement, ParseError> {
        let mut f = Fields::new("", v)?;
        match f.require("resourceType")? {
            (Value::String(t), _) if t == RESOURCE_TYPE => {}
            (other, path) => {
                return Err(ParseError::shape(
                    &path,
                    ShapeKind::WrongType,
                    format!("expected \"{RESOURCE_TYPE}\", found {other}"),
                ))
            }
        }
        let status = f.required_string("status")?;
        let (med, med_path) = f.require("medication")?;
        let medication = self.medication(med, &med_path)?;
        let reason = match f.get("reason") {
            Some((v, p)) => self.reasons(v, &p)?,
            None => Vec::new(),
        };
        let dosage = match f.get("dosage") {
            Some((v, p)) => array(v, &p)?
                .iter()
                .enumerate()
                .map(|(i, d)| self.dosage(d, &index(&p, i)))
                .collect::<Result<Vec<_>, _>>()?,
            None => Vec::new(),
        };
        let source_text = match v.get("note") {
            Some(note) => match Self::source_text(note) {
                Some(text) => {
                    f.used.push("note");
                    Some(text)
                }
                None => None,
            },
            None => None,
        };
        Ok(MedicationStatement {
            status,
            medication,
            reason,
            dosage,
            source_text,
            extras: f.extras(&mut self.notes),
        })
    }

    fn fragment(&mut self, v: &Value) -> Result<Fragment, ParseError> {
        let mut f = Fields::new("", v)?;
        let code = f.get("code").map(|(v, p)| self.concept(v, &p)).transpose()?;
        let dose_form = f.get("doseForm").map(|(v, p)| self.concept(v, &p)).transpose()?;
        let total_volume = f.get("totalVolume").map(|(v, p)| self.quantity(v, &p)).transpose()?;
        let route = f.get("route").map(|(v, p)| self.concept(v, &p)).transpose()?;
        let timing = f.get("timing").map(|(v, p)| self.timing(v, &p)).transpose()?;
        let dose = self.dose_slot(&mut f)?;
        let reason = match f.get("reason") {
            Some((v, p)) => self.reasons(v, &p)?,
            None => Vec::new(),
        };
        Ok(Fragment {
            code,
            dose_form,
            total_volume,
            route,
            timing,
            dose,
            reason,
            extras: f.extras(&mut self.notes),
        })
    }
}

fn to_value(text: &str) -> Result<Value, ParseError> {
    serde_json::from_str(text).map_err(|e| ParseError::MalformedDocument(e.to_string()))
}

pub fn resource_from_value(v: &Value) -> Result<Parsed<MedicationStatement>, ParseError> {
    let mut p = Parser { notes: Vec::new() };
    let value = p.resource(v)?;
    Ok(Parsed { value, notes: p.notes })
}

pub fn fragment_from_value(v: &Value) -> Result<Parsed<Fragment>, ParseError> {
    let mut p = Parser { notes: Vec::new() };
    let value = p.fragment(v)?;
    Ok(Parsed { value, notes: p.notes })
}

/// Top-level keys only a resource carries.
const RESOURCE_ONLY: [&str; 4] = ["status", "medication", "dosage", "note"];

/// A resource when the object carries `resourceType` or any resource-only
/// key (so a resource missing `resourceType` is reported, not reread as a
/// fragment), a fragment otherwise.
pub fn document_from_value(v: &Value) -> Result<Parsed<Document>, ParseError> {
    if v.get("resourceType").is_some() || RESOURCE_ONLY.iter().any(|k| v.get(k).is_some()) {
        resource_from_value(v).map(|p| Parsed {
            value: Document::Resource(p.value),
            notes: p.notes,
        })
    } else {
        fragment_from_value(v).map(|p| Parsed {
            value: Document::Fragment(p.value),
            notes: p.notes,
        })
    }
}

pub fn parse(text: &str) -> Result<Parsed<Document>, ParseError> {
    document_from_value(&to_value(text)?)
}

pub fn parse_resource(text: &str) -> Result<Parsed<MedicationStatement>, ParseError> {
    resource_from_value(&to_value(text)?)
}

pub fn parse_fragment(text: &str) -> Result<Parsed<Fragment>, ParseError> {
    fragment_from_value(&to_value(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terminology::systems::{GTS, SNOMED};

    #[test]
    fn route_concept_serializes_text_first() {
        let route = CodeableConcept::text("PO").with_coding(Coding::new("SNOMED", "26643006", "Oral route"));
        assert_eq!(
            concept_json(&route).to_string(),
            format!(r#"{{"text":"PO","coding":[{{"system":"{SNOMED}","code":"26643006","display":"Oral route"}}]}}"#)
        );
    }

    #[test]
    fn empty_dosage_list_is_omitted() {
        let r = MedicationStatement::new(MedicationDetail::new(CodeableConcept::text("aspirin")));
        let json = serialize(&r);
        assert!(!json.contains("dosage"));
        assert!(!json.contains("reason"));
        assert_eq!(
            json,
            r#"{"resourceType":"MedicationStatement","status":"recorded","medication":{"code":{"text":"aspirin"}}}"#
        );
    }

    #[test]
    fn two_reasons_nest_under_concept() {
        let mut r = MedicationStatement::new(MedicationDetail::new(CodeableConcept::text("ibuprofen")));
        r.reason.push(CodeableConcept::text("pain").into());
        r.reason.push(CodeableConcept::text("fever").into());
        let v = resource_to_value(&r);
        let reasons = v["reason"].as_array().unwrap();
        assert_eq!(reasons.len(), 2);
        assert_eq!(reasons[0]["concept"]["text"], "pain");
        assert_eq!(reasons[1]["concept"]["text"], "fever");
    }

    #[test]
    fn integral_numbers_drop_fraction() {
        assert_eq!(number(4.0).to_string(), "4");
        assert_eq!(number(0.5).to_string(), "0.5");
        assert_eq!(number(7.5).to_string(), "7.5");
        assert_eq!(number(-2.0).to_string(), "-2");
    }

    #[test]
    fn shorthand_timing_code_parses_with_alias() {
        let parsed =
            parse_fragment(r#"{"timing":{"code":{"coding":[{"system":"HL7","code":"Q4H","display":"Q4H"}]}}}"#)
                .unwrap();
        let code = parsed.value.timing.unwrap().code.unwrap();
        assert_eq!(code.coding.len(), 1);
        assert_eq!(code.coding[0].code, "Q4H");
        assert_eq!(code.coding[0].system, GTS);
        assert_eq!(
            parsed.notes,
            vec![ParseNote::SystemAlias {
                path: "timing.code.coding[0].system".into(),
                original: "HL7".into()
            }]
        );
    }

    #[test]
    fn empty_object_is_empty_fragment() {
        let parsed = parse("{}").unwrap();
        assert_eq!(parsed.value, Document::Fragment(Fragment::default()));
        assert!(parsed.notes.is_empty());
    }

    #[test]
    fn wrong_type_names_the_path() {
        let err = parse_fragment(r#"{"totalVolume":{"value":"abc"}}"#).unwrap_err();
        match err {
            ParseError::Shape { path, kind, .. } => {
                assert_eq!(path, "totalVolume.value");
                assert_eq!(kind, ShapeKind::WrongType);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_json() {
        assert!(matches!(parse("{not json"), Err(ParseError::MalformedDocument(_))));
    }

    #[test]
    fn unknown_keys_survive_round_trip() {
        let src = r#"{"resourceType":"MedicationStatement","status":"recorded","medication":{"code":{"text":"x","userSelected":true}},"subject":{"reference":"Patient/1"}}"#;
        let parsed = parse_resource(src).unwrap();
        assert_eq!(parsed.notes.len(), 2);
        assert_eq!(serialize(&parsed.value), src);
    }

    #[test]
    fn dose_exclusivity_and_pairing() {
        let err = parse_fragment(r#"{"doseQuantity":{"value":1},"doseRange":{"low":{"value":1},"high":{"value":2}}}"#)
            .unwrap_err();
        assert!(matches!(
            err,
            ParseError::Shape {
                kind: ShapeKind::Cardinality,
                ..
            }
        ));
        let err = parse_fragment(r#"{"timing":{"repeat":{"frequency":1,"period":1,"periodUnit":"d","duration":3}}}"#)
            .unwrap_err();
        assert!(matches!(
            err,
            ParseError::Shape {
                kind: ShapeKind::Unpaired,
                ..
            }
        ));
    }

    #[test]
    fn missing_required_field() {
        let err = parse_resource(r#"{"resourceType":"MedicationStatement","status":"recorded","medication":{}}"#)
            .unwrap_err();
        assert_eq!(
            err,
            ParseError::Shape {
                path: "medication.code".into(),
                kind: ShapeKind::MissingField,
                message: "required field `code` is missing".into()
            }
        );
        let err =
            parse_resource(r#"{"resourceType":"MedicationStatement","medication":{"code":{"text":"x"}}}"#).unwrap_err();
        assert!(matches!(err, ParseError::Shape { ref path, kind: ShapeKind::MissingField, .. } if path == "status"));
    }
}
