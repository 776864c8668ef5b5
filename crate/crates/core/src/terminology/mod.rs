//! Bounded code tables (routes, dose forms, timing abbreviations, units) and
//! optional local medication/reason dictionaries.
//!
//! Tables are delimiter-separated files with the header
//! `system,code,display,synonyms`. `system` may be a canonical URI or a
//! registered alias; `synonyms` is a `|`-separated list of lookup phrases.
//! Lines starting with `#` are comments.

pub mod systems;

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use thiserror::Error;

use crate::model::Coding;

pub use systems::{CodeSystemId, SystemRegistry};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("line {line}: {message}")]
    Format { line: u64, message: String },
    #[error("line {line}: duplicate code ({system}, {code})")]
    DuplicateCode { line: u64, system: String, code: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl TableError {
    pub(crate) fn from_csv(err: &csv::Error) -> Self {
        let line = err.position().map_or(0, |p| p.line());
        TableError::Format {
            line,
            message: err.to_string(),
        }
    }
}

/// Lowercases, turns `-` and `/` into spaces, drops other punctuation (except
/// `%`), and collapses whitespace. `"p.o."` becomes `"po"`, `"G-Tube"` becomes
/// `"g tube"`.
pub fn normalize_text(text: &str) -> String {
    let mut cleaned = String::with_capacity(text.len());
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '%' {
            cleaned.extend(ch.to_lowercase());
        } else if ch.is_whitespace() || ch == '-' || ch == '/' || ch == '_' {
            cleaned.push(' ');
        }
    }
    cleaned.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeEntry {
    /// Canonical system URI.
    pub system: String,
    pub code: String,
    pub display: String,
    /// Normalized lookup keys. The normalized display is always included.
    pub synonyms: Vec<String>,
}

impl CodeEntry {
    pub fn to_coding(&self) -> Coding {
        Coding::new(&self.system, self.code.clone(), self.display.clone())
    }
}

#[derive(Debug, Clone, Default)]
pub struct CodeTable {
    entries: Vec<CodeEntry>,
    by_code: HashMap<(String, String), usize>,
    by_synonym: HashMap<String, Vec<usize>>,
}

impl CodeTable {
    /// Parses a table file. Duplicate `(system, code)` rows and a synonym
    /// shared by two entries of the same system are rejected.
    pub fn parse(source: &str) -> Result<Self, TableError> {
        let mut table = CodeTable::default();
        if source
            .lines()
            .all(|l| l.trim().is_empty() || l.trim_start().starts_with('#'))
        {
            return Ok(table);
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(source.as_bytes());
        let headers = reader.headers().map_err(|e| TableError::from_csv(&e))?.clone();
        let names: Vec<&str> = headers.iter().collect();
        if names != ["system", "code", "display", "synonyms"] {
            let line = headers.position().map_or(1, |p| p.line());
            return Err(TableError::Format {
                line,
                message: format!(
                    "expected header `system,code,display,synonyms`, found `{}`",
                    names.join(",")
                ),
            });
        }
        for record in reader.records() {
            let record = record.map_err(|e| TableError::from_csv(&e))?;
            let line = record.position().map_or(0, |p| p.line());
            let field = |i: usize| record.get(i).unwrap_or_default();
            let system = systems::canonical_uri(field(0)).ok_or_else(|| TableError::Format {
                line,
                message: format!("unknown code system `{}`", field(0)),
            })?;
            let code = field(1);
            let display = field(2);
            if code.is_empty() {
                return Err(TableError::Format {
                    line,
                    message: "empty code".into(),
                });
            }
            if display.is_empty() {
                return Err(TableError::Format {
                    line,
                    message: format!("empty display for code {code}"),
                });
            }
            let mut synonyms = vec![normalize_text(display)];
            for raw in field(3).split('|') {
                let key = normalize_text(raw);
                if !key.is_empty() && !synonyms.contains(&key) {
                    synonyms.push(key);
                }
            }
            table.insert(
                CodeEntry {
                    system: system.to_string(),
                    code: code.to_string(),
                    display: display.to_string(),
                    synonyms,
                },
                line,
            )?;
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TableError> {
        let path = path.as_ref();
        let source = std::fs::read_to_string(path).map_err(|source| TableError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&source)
    }

    fn insert(&mut self, entry: CodeEntry, line: u64) -> Result<(), TableError> {
        let key = (entry.system.clone(), entry.code.clone());
        if self.by_code.contains_key(&key) {
            return Err(TableError::DuplicateCode {
                line,
                system: systems::short_name(&entry.system).to_string(),
                code: entry.code,
            });
        }
        let index = self.entries.len();
        for synonym in &entry.synonyms {
            let slots = self.by_synonym.entry(synonym.clone()).or_default();
            if let Some(&other) = slots.iter().find(|&&i| self.entries[i].system == entry.system) {
                return Err(TableError::Format {
                    line,
                    message: format!(
                        "synonym `{synonym}` of code {} already maps to code {}",
                        entry.code, self.entries[other].code
                    ),
                });
            }
            slots.push(index);
        }
        self.by_code.insert(key, index);
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[CodeEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Canonical URIs of every system that has at least one row.
    pub fn systems(&self) -> BTreeSet<&str> {
        self.entries.iter().map(|e| e.system.as_str()).collect()
    }

    pub fn covers(&self, system: &str) -> bool {
        let uri = systems::canonical_uri(system).unwrap_or(system);
        self.entries.iter().any(|e| e.system == uri)
    }

    /// Exact lookup. `None` for a system the table covers means the code is
    /// not in the vocabulary (a possibly invented code).
    pub fn lookup_code(&self, system: &str, code: &str) -> Option<&CodeEntry> {
        let uri = systems::canonical_uri(system).unwrap_or(system);
        self.by_code
            .get(&(uri.to_string(), code.to_string()))
            .map(|&i| &self.entries[i])
    }

    /// Matches `text` against synonyms after normalization. No fuzzy matching.
    /// An empty `scope` means any system; otherwise systems are tried in the
    /// order given.
    pub fn resolve_text(&self, scope: &[&str], text: &str) -> Option<&CodeEntry> {
        let key = normalize_text(text);
        let candidates = self.by_synonym.get(&key)?;
        if scope.is_empty() {
            return candidates.first().map(|&i| &self.entries[i]);
        }
        scope.iter().find_map(|system| {
            let uri = systems::canonical_uri(system).unwrap_or(system);
            candidates.iter().map(|&i| &self.entries[i]).find(|e| e.system == uri)
        })
    }

    /// Whether a normalized phrase is a synonym of any entry.
    pub(crate) fn has_synonym(&self, normalized: &str) -> bool {
        self.by_synonym.contains_key(normalized)
    }

    /// Longest synonym length in words, used to bound phrase matching.
    pub(crate) fn max_synonym_words(&self) -> usize {
        self.by_synonym.keys().map(|k| k.split(' ').count()).max().unwrap_or(0)
    }

    pub fn verify_display(&self, coding: &Coding) -> DisplayCheck {
        match self.lookup_code(&coding.system, &coding.code) {
            None => DisplayCheck::UnknownCode,
            Some(entry) => match &coding.display {
                Some(display) if fold_display(display) == fold_display(&entry.display) => DisplayCheck::Ok,
                _ => DisplayCheck::Mismatch {
                    expected: entry.display.clone(),
                },
            },
        }
    }
}

fn fold_display(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DisplayCheck {
    Ok,
    Mismatch { expected: String },
    UnknownCode,
}

/// Which table governs a coded element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Binding {
    Medication,
    DoseForm,
    Unit,
    Reason,
    Route,
    TimingCode,
}

impl Binding {
    /// Systems a coding for this element may use. `None` leaves the element
    /// open to any registered system (used for the optional dictionaries
    /// when they are not loaded).
    pub fn fixed_systems(self) -> Option<&'static [&'static str]> {
        match self {
            Binding::DoseForm | Binding::Route => Some(&[systems::SNOMED]),
            Binding::Unit => Some(&[systems::UCUM]),
            Binding::TimingCode => Some(&[systems::GTS]),
            Binding::Medication | Binding::Reason => None,
        }
    }
}

const BUNDLED_ROUTES: &str = include_str!("../../data/tables/routes.csv");
const BUNDLED_FORMS: &str = include_str!("../../data/tables/forms.csv");
const BUNDLED_TIMING: &str = include_str!("../../data/tables/timing.csv");
const BUNDLED_UNITS: &str = include_str!("../../data/tables/units.csv");

/// The tables an element conversion and the validator work against.
#[derive(Debug, Clone, Default)]
pub struct TableSet {
    pub routes: CodeTable,
    pub forms: CodeTable,
    pub timing: CodeTable,
    pub units: CodeTable,
    pub medications: Option<CodeTable>,
    pub reasons: Option<CodeTable>,
}

impl TableSet {
    /// Bundled route/form/timing/unit subsets; no medication or reason dictionary.
    pub fn bundled() -> Self {
        let parse = |src: &str| CodeTable::parse(src).expect("bundled table is well-formed");
        TableSet {
            routes: parse(BUNDLED_ROUTES),
            forms: parse(BUNDLED_FORMS),
            timing: parse(BUNDLED_TIMING),
            units: parse(BUNDLED_UNITS),
            medications: None,
            reasons: None,
        }
    }

    /// Loads `routes.csv`, `forms.csv`, `timing.csv` and `units.csv` from `dir`,
    /// falling back to the bundled copy for any that are missing, plus the
    /// optional `medications.csv` and `reasons.csv` dictionaries.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, TableError> {
        let dir = dir.as_ref();
        let bundled = Self::bundled();
        let pick = |name: &str, fallback: CodeTable| -> Result<CodeTable, TableError> {
            let path = dir.join(name);
            if path.exists() {
                CodeTable::load(&path)
            } else {
                Ok(fallback)
            }
        };
        let optional = |name: &str| -> Result<Option<CodeTable>, TableError> {
            let path = dir.join(name);
            path.exists().then(|| CodeTable::load(&path)).transpose()
        };
        Ok(TableSet {
            routes: pick("routes.csv", bundled.routes)?,
            forms: pick("forms.csv", bundled.forms)?,
            timing: pick("timing.csv", bundled.timing)?,
            units: pick("units.csv", bundled.units)?,
            medications: optional("medications.csv")?,
            reasons: optional("reasons.csv")?,
        })
    }

    pub fn with_medications(mut self, table: CodeTable) -> Self {
        self.medications = Some(table);
        self
    }

    pub fn with_reasons(mut self, table: CodeTable) -> Self {
        self.reasons = Some(table);
        self
    }

    pub fn table_for(&self, binding: Binding) -> Option<&CodeTable> {
        match binding {
            Binding::Medication => self.medications.as_ref(),
            Binding::DoseForm => Some(&self.forms),
            Binding::Unit => Some(&self.units),
            Binding::Reason => self.reasons.as_ref(),
            Binding::Route => Some(&self.routes),
            Binding::TimingCode => Some(&self.timing),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use systems::{GTS, SNOMED, UCUM};

    #[test]
    fn bundled_table_sizes() {
        let tables = TableSet::bundled();
        assert_eq!(tables.routes.len(), 15);
        assert_eq!(tables.forms.len(), 26);
        assert_eq!(tables.timing.len(), 17);
        assert_eq!(tables.units.len(), 16);
    }

    #[test]
    fn bundled_route_table_has_oral_route() {
        let routes = TableSet::bundled().routes;
        let entry = routes.lookup_code("SNOMED", "26643006").unwrap();
        assert_eq!(entry.display, "Oral route");
    }

    #[test]
    fn empty_file_is_an_empty_table() {
        assert!(CodeTable::parse("").unwrap().is_empty());
        assert!(CodeTable::parse("# nothing\n\n").unwrap().is_empty());
        assert!(CodeTable::parse("system,code,display,synonyms\n").unwrap().is_empty());
    }

    #[test]
    fn duplicate_code_rejected() {
        let src = "system,code,display,synonyms\nSNOMED,26643006,Oral route,po\nSNOMED,26643006,Oral,\n";
        match CodeTable::parse(src) {
            Err(TableError::DuplicateCode { line, code, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(code, "26643006");
            }
            other => panic!("expected DuplicateCode, got {other:?}"),
        }
    }

    #[test]
    fn bad_rows_report_line_numbers() {
        let src = "system,code,display,synonyms\nSNOMED,1,One,\nLOINC,2,Two,\n";
        assert!(matches!(CodeTable::parse(src), Err(TableError::Format { line: 3, .. })));
        let src = "sys,code\nSNOMED,1\n";
        assert!(matches!(CodeTable::parse(src), Err(TableError::Format { line: 1, .. })));
        let src = "system,code,display,synonyms\nSNOMED,1,,\n";
        assert!(matches!(CodeTable::parse(src), Err(TableError::Format { line: 2, .. })));
    }

    #[test]
    fn conflicting_synonym_rejected() {
        let src = "system,code,display,synonyms\nSNOMED,1,One,x\nSNOMED,2,Two,X\n";
        assert!(matches!(CodeTable::parse(src), Err(TableError::Format { line: 3, .. })));
    }

    #[test]
    fn lookup_examples() {
        let tables = TableSet::bundled();
        assert_eq!(
            tables.forms.lookup_code("SNOMED", "385055001").unwrap().display,
            "Tablet"
        );
        assert!(tables.routes.lookup_code("SNOMED", "99999999").is_none());
        assert_eq!(tables.units.lookup_code(UCUM, "mg").unwrap().display, "milligram");
        assert_eq!(tables.units.lookup_code("UCUM", "mg").unwrap().display, "milligram");
    }

    #[test]
    fn resolve_text_examples() {
        let routes = TableSet::bundled().routes;
        assert_eq!(routes.resolve_text(&[SNOMED], "PO").unwrap().code, "26643006");
        assert_eq!(routes.resolve_text(&[SNOMED], "by mouth").unwrap().code, "26643006");
        assert_eq!(routes.resolve_text(&[SNOMED], "  P.O. ").unwrap().code, "26643006");
        assert!(routes.resolve_text(&[SNOMED], "xyzzy").is_none());
        assert!(routes.resolve_text(&[GTS], "PO").is_none());
        assert!(routes.resolve_text(&[], "PO").is_some());
    }

    #[test]
    fn verify_display_examples() {
        let routes = TableSet::bundled().routes;
        let ok = Coding::new("SNOMED", "26643006", "Oral route");
        assert_eq!(routes.verify_display(&ok), DisplayCheck::Ok);
        let folded = Coding::new("SNOMED", "26643006", "oral  ROUTE");
        assert_eq!(routes.verify_display(&folded), DisplayCheck::Ok);
        let off = Coding::new("SNOMED", "26643006", "oral");
        assert_eq!(
            routes.verify_display(&off),
            DisplayCheck::Mismatch {
                expected: "Oral route".into()
            }
        );
        let unknown = Coding::new("SNOMED", "1", "x");
        assert_eq!(routes.verify_display(&unknown), DisplayCheck::UnknownCode);
    }

    #[test]
    fn every_display_resolves_to_its_entry() {
        let tables = TableSet::bundled();
        for table in [&tables.routes, &tables.forms, &tables.timing, &tables.units] {
            for entry in table.entries() {
                let found = table.resolve_text(&[entry.system.as_str()], &entry.display).unwrap();
                assert_eq!(found, entry);
                for synonym in &entry.synonyms {
                    assert_eq!(table.resolve_text(&[entry.system.as_str()], synonym).unwrap(), entry);
                }
            }
        }
    }

    #[test]
    fn loading_twice_gives_identical_answers() {
        let a = CodeTable::parse(BUNDLED_ROUTES).unwrap();
        let b = CodeTable::parse(BUNDLED_ROUTES).unwrap();
        assert_eq!(a.entries(), b.entries());
        for probe in ["po", "iv", "nope", "by mouth"] {
            assert_eq!(a.resolve_text(&[], probe), b.resolve_text(&[], probe));
        }
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_text("  P.O.  "), "po");
        assert_eq!(normalize_text("G-Tube"), "g tube");
        assert_eq!(normalize_text("Q.4.H."), "q4h");
        assert_eq!(normalize_text("5%"), "5%");
        assert_eq!(normalize_text("Three  times\tDaily"), "three times daily");
    }
}
