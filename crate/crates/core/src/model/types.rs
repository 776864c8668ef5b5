use std::collections::BTreeMap;
use std::fmt;

use serde_json::Value;

use crate::terminology::systems;

/// Keys found on input that the model does not know about, kept verbatim so a
/// parse/serialize cycle does not drop data.
pub type Extras = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq)]
pub struct Coding {
    pub system: String,
    pub code: String,
    pub display: Option<String>,
    pub extras: Extras,
}

impl Coding {
    /// Builds a coding, normalizing a shorthand system name ("SNOMED", "HL7", ...)
    /// to its canonical URI.
    pub fn new(system: &str, code: impl Into<String>, display: impl Into<String>) -> Self {
        Self {
            system: systems::canonical_uri(system).unwrap_or(system).to_string(),
            code: code.into(),
            display: Some(display.into()),
            extras: Extras::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CodeableConcept {
    pub coding: Vec<Coding>,
    pub text: Option<String>,
    pub extras: Extras,
}

impl CodeableConcept {
    pub fn text(text: impl Into<String>) -> Self {
        Self {
            text: Some(text.into()),
            ..Self::default()
        }
    }

    pub fn coded(text: Option<String>, coding: Vec<Coding>) -> Self {
        Self {
            coding,
            text,
            extras: Extras::new(),
        }
    }

    pub fn with_coding(mut self, coding: Coding) -> Self {
        self.coding.push(coding);
        self
    }

    /// At least one of `coding` or `text` must be present.
    pub fn is_empty(&self) -> bool {
        self.coding.is_empty() && self.text.is_none()
    }
}

/// R5 `CodeableReference` restricted to its `concept` branch, the shape used
/// for `reason` entries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CodeableReference {
    pub concept: CodeableConcept,
    pub extras: Extras,
}

impl From<CodeableConcept> for CodeableReference {
    fn from(concept: CodeableConcept) -> Self {
        Self {
            concept,
            extras: Extras::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub unit: Option<String>,
    pub system: Option<String>,
    pub code: Option<String>,
    pub extras: Extras,
}

impl Quantity {
    /// A quantity carrying only a value and a unit label, like Table-style
    /// `{"value": 5.0, "unit": "ML"}`.
    pub fn simple(value: f64, unit: impl Into<String>) -> Self {
        Self {
            value,
            unit: Some(unit.into()),
            system: None,
            code: None,
            extras: Extras::new(),
        }
    }

    pub fn ucum(value: f64, unit: impl Into<String>, code: impl Into<String>) -> Self {
        Self {
            value,
            unit: Some(unit.into()),
            system: Some(systems::UCUM.to_string()),
            code: Some(code.into()),
            extras: Extras::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Range {
    pub low: Quantity,
    pub high: Quantity,
    pub extras: Extras,
}

/// FHIR time units allowed for `periodUnit` and `durationUnit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TimeUnit {
    Second,
    Minute,
    Hour,
    Day,
    Week,
    Month,
    Year,
}

impl TimeUnit {
    pub const ALL: [TimeUnit; 7] = [
        TimeUnit::Second,
        TimeUnit::Minute,
        TimeUnit::Hour,
        TimeUnit::Day,
        TimeUnit::Week,
        TimeUnit::Month,
        TimeUnit::Year,
    ];

    pub fn code(self) -> &'static str {
        match self {
            TimeUnit::Second => "s",
            TimeUnit::Minute => "min",
            TimeUnit::Hour => "h",
            TimeUnit::Day => "d",
            TimeUnit::Week => "wk",
            TimeUnit::Month => "mo",
            TimeUnit::Year => "a",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|u| u.code() == code)
    }
}

impl fmt::Display for TimeUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// `Timing.repeat`. Unit fields are kept as the raw codes so that a resource
/// with an illegal unit still parses and the validator can report it.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingRepeat {
    pub frequency: u32,
    pub period: f64,
    pub period_unit: String,
    pub duration: Option<(f64, String)>,
    pub extras: Extras,
}

impl TimingRepeat {
    pub fn new(frequency: u32, period: f64, unit: TimeUnit) -> Self {
        Self {
            frequency,
            period,
            period_unit: unit.code().to_string(),
            duration: None,
            extras: Extras::new(),
        }
    }

    pub fn with_duration(mut self, duration: f64, unit: TimeUnit) -> Self {
        self.duration = Some((duration, unit.code().to_string()));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Timing {
    pub repeat: Option<TimingRepeat>,
    pub code: Option<CodeableConcept>,
    pub extras: Extras,
}

impl Timing {
    pub fn is_empty(&self) -> bool {
        self.repeat.is_none() && self.code.is_none() && self.extras.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dose {
    Quantity(Quantity),
    Range(Range),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dosage {
    pub route: Option<CodeableConcept>,
    pub timing: Option<Timing>,
    pub dose: Option<Dose>,
    /// Unknown keys found beside the dose inside `doseAndRate[0]`.
    pub dose_extras: Extras,
    pub extras: Extras,
}

impl Dosage {
    pub fn is_empty(&self) -> bool {
        self.route.is_none()
            && self.timing.is_none()
            && self.dose.is_none()
            && self.dose_extras.is_empty()
            && self.extras.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MedicationDetail {
    pub code: CodeableConcept,
    pub dose_form: Option<CodeableConcept>,
    pub total_volume: Option<Quantity>,
    pub extras: Extras,
}

impl MedicationDetail {
    pub fn new(code: CodeableConcept) -> Self {
        Self {
            code,
            dose_form: None,
            total_volume: None,
            extras: Extras::new(),
        }
    }
}

pub const DEFAULT_STATUS: &str = "recorded";

#[derive(Debug, Clone, PartialEq)]
pub struct MedicationStatement {
    pub status: String,
    pub medication: MedicationDetail,
    pub reason: Vec<CodeableReference>,
    pub dosage: Vec<Dosage>,
    pub source_text: Option<String>,
    pub extras: Extras,
}

impl MedicationStatement {
    pub fn new(medication: MedicationDetail) -> Self {
        Self {
            status: DEFAULT_STATUS.to_string(),
            medication,
            reason: Vec::new(),
            dosage: Vec::new(),
            source_text: None,
            extras: Extras::new(),
        }
    }
}

/// Partial output of one element conversion. Every slot is optional; a
/// fragment never carries `resourceType`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Fragment {
    pub code: Option<CodeableConcept>,
    pub dose_form: Option<CodeableConcept>,
    pub total_volume: Option<Quantity>,
    pub route: Option<CodeableConcept>,
    pub timing: Option<Timing>,
    pub dose: Option<Dose>,
    pub reason: Vec<CodeableReference>,
    pub extras: Extras,
}

impl Fragment {
    pub fn is_empty(&self) -> bool {
        self.code.is_none()
            && self.dose_form.is_none()
            && self.total_volume.is_none()
            && self.route.is_none()
            && self.timing.is_none()
            && self.dose.is_none()
            && self.reason.is_empty()
            && self.extras.is_empty()
    }
}

/// Either a complete resource or an element fragment.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Document {
    Resource(MedicationStatement),
    Fragment(Fragment),
}
