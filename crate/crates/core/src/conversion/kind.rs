use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The five element conversions issued per input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Medication,
    Route,
    Schedule,
    Dosage,
    Reason,
}

impl ElementKind {
    pub const ALL: [ElementKind; 5] = [
        ElementKind::Medication,
        ElementKind::Route,
        ElementKind::Schedule,
        ElementKind::Dosage,
        ElementKind::Reason,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::Medication => "medication",
            ElementKind::Route => "route",
            ElementKind::Schedule => "schedule",
            ElementKind::Dosage => "dosage",
            ElementKind::Reason => "reason",
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown element kind `{0}`; expected one of medication, route, schedule, dosage, reason")]
pub struct UnknownKind(pub String);

impl FromStr for ElementKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lowered = s.trim().to_ascii_lowercase();
        ElementKind::ALL
            .into_iter()
            .find(|k| k.as_str() == lowered)
            .ok_or_else(|| UnknownKind(s.to_string()))
    }
}

/// One value per element kind, serialized as an object keyed by kind name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerKind<T> {
    pub medication: T,
    pub route: T,
    pub schedule: T,
    pub dosage: T,
    pub reason: T,
}

impl<T> PerKind<T> {
    pub fn from_fn(mut f: impl FnMut(ElementKind) -> T) -> Self {
        PerKind {
            medication: f(ElementKind::Medication),
            route: f(ElementKind::Route),
            schedule: f(ElementKind::Schedule),
            dosage: f(ElementKind::Dosage),
            reason: f(ElementKind::Reason),
        }
    }

    pub fn get(&self, kind: ElementKind) -> &T {
        match kind {
            ElementKind::Medication => &self.medication,
            ElementKind::Route => &self.route,
            ElementKind::Schedule => &self.schedule,
            ElementKind::Dosage => &self.dosage,
            ElementKind::Reason => &self.reason,
        }
    }

    pub fn get_mut(&mut self, kind: ElementKind) -> &mut T {
        match kind {
            ElementKind::Medication => &mut self.medication,
            ElementKind::Route => &mut self.route,
            ElementKind::Schedule => &mut self.schedule,
            ElementKind::Dosage => &mut self.dosage,
            ElementKind::Reason => &mut self.reason,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (ElementKind, &T)> {
        ElementKind::ALL.into_iter().map(move |k| (k, self.get(k)))
    }

    pub fn into_pairs(self) -> [(ElementKind, T); 5] {
        [
            (ElementKind::Medication, self.medication),
            (ElementKind::Route, self.route),
            (ElementKind::Schedule, self.schedule),
            (ElementKind::Dosage, self.dosage),
            (ElementKind::Reason, self.reason),
        ]
    }

    pub fn map<U>(self, mut f: impl FnMut(ElementKind, T) -> U) -> PerKind<U> {
        PerKind {
            medication: f(ElementKind::Medication, self.medication),
            route: f(ElementKind::Route, self.route),
            schedule: f(ElementKind::Schedule, self.schedule),
            dosage: f(ElementKind::Dosage, self.dosage),
            reason: f(ElementKind::Reason, self.reason),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_names_case_insensitively() {
        assert_eq!("Route".parse::<ElementKind>(), Ok(ElementKind::Route));
        let err = "frequency".parse::<ElementKind>().unwrap_err();
        for kind in ElementKind::ALL {
            assert!(err.to_string().contains(kind.as_str()));
        }
    }

    #[test]
    fn per_kind_indexing_matches_fields() {
        let p = PerKind::from_fn(|k| k.as_str().len());
        for (kind, len) in p.iter() {
            assert_eq!(*len, kind.as_str().len());
        }
    }
}
