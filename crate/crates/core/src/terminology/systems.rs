//! Code-system registry: canonical URIs and the shorthand aliases accepted on input.

use std::collections::HashMap;
use std::sync::LazyLock;

use super::TableError;

pub const SNOMED: &str = "http://snomed.info/sct";
pub const RXNORM: &str = "http://www.nlm.nih.gov/research/umls/rxnorm";
pub const NDC: &str = "http://hl7.org/fhir/sid/ndc";
pub const UCUM: &str = "http://unitsofmeasure.org";
pub const GTS: &str = "http://terminology.hl7.org/CodeSystem/v3-GTSAbbreviation";

const BUNDLED_SYSTEMS: &str = include_str!("../../data/systems.csv");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSystemId {
    pub uri: String,
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct SystemRegistry {
    systems: Vec<CodeSystemId>,
    by_alias: HashMap<String, usize>,
}

impl SystemRegistry {
    /// Parses an alias file with header `uri,aliases` (aliases `|`-separated).
    pub fn parse(source: &str) -> Result<Self, TableError> {
        let mut registry = SystemRegistry::default();
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(source.as_bytes());
        let headers = reader.headers().map_err(|e| TableError::from_csv(&e))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["uri", "aliases"] {
            return Err(TableError::Format {
                line: 1,
                message: format!(
                    "expected header `uri,aliases`, found `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        for record in reader.records() {
            let record = record.map_err(|e| TableError::from_csv(&e))?;
            let line = record.position().map_or(0, |p| p.line());
            let uri = record.get(0).unwrap_or_default().to_string();
            if uri.is_empty() {
                return Err(TableError::Format {
                    line,
                    message: "empty system uri".into(),
                });
            }
            let aliases: Vec<String> = record
                .get(1)
                .unwrap_or_default()
                .split('|')
                .map(str::trim)
                .filter(|a| !a.is_empty())
                .map(str::to_string)
                .collect();
            let index = registry.systems.len();
            for key in std::iter::once(&uri).chain(aliases.iter()) {
                let folded = key.to_lowercase();
                if let Some(&other) = registry.by_alias.get(&folded) {
                    if other != index {
                        return Err(TableError::Format {
                            line,
                            message: format!("alias `{key}` already registered for {}", registry.systems[other].uri),
                        });
                    }
                }
                registry.by_alias.insert(folded, index);
            }
            registry.systems.push(CodeSystemId { uri, aliases });
        }
        Ok(registry)
    }

    pub fn bundled() -> &'static SystemRegistry {
        &REGISTRY
    }

    /// Canonical URI for a URI or shorthand alias (case-insensitive).
    pub fn canonical(&self, name: &str) -> Option<&str> {
        self.by_alias
            .get(&name.trim().to_lowercase())
            .map(|&i| self.systems[i].uri.as_str())
    }

    pub fn is_canonical(&self, uri: &str) -> bool {
        self.systems.iter().any(|s| s.uri == uri)
    }

    pub fn systems(&self) -> &[CodeSystemId] {
        &self.systems
    }
}

static REGISTRY: LazyLock<SystemRegistry> =
    LazyLock::new(|| SystemRegistry::parse(BUNDLED_SYSTEMS).expect("bundled systems.csv is well-formed"));

/// Canonical URI for `name` in the bundled registry.
pub fn canonical_uri(name: &str) -> Option<&'static str> {
    REGISTRY.canonical(name)
}

/// Short label used in human-readable output.
pub fn short_name(uri: &str) -> &str {
    match uri {
        SNOMED => "SNOMED",
        RXNORM => "RxNorm",
        NDC => "NDC",
        UCUM => "UCUM",
        GTS => "HL7",
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shorthand_names_resolve() {
        assert_eq!(canonical_uri("SNOMED"), Some(SNOMED));
        assert_eq!(canonical_uri("RxNORM"), Some(RXNORM));
        assert_eq!(canonical_uri("NDC"), Some(NDC));
        assert_eq!(canonical_uri("HL7"), Some(GTS));
        assert_eq!(canonical_uri(UCUM), Some(UCUM));
        assert_eq!(canonical_uri("LOINC"), None);
    }

    #[test]
    fn duplicate_alias_is_rejected() {
        let src = "uri,aliases\nhttp://a,X\nhttp://b,x\n";
        assert!(matches!(
            SystemRegistry::parse(src),
            Err(TableError::Format { line: 3, .. })
        ));
    }
}
