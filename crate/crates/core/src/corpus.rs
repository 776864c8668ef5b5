//! JSON-lines corpus and result files.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::conversion::ConversionResult;
use crate::model::{resource_from_value, MedicationStatement};

const SYNTHETIC: &str = include_str!("../data/corpus/synthetic.jsonl");

/// One corpus line: `{"id", "text", "gold"?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<Value>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("duplicate id `{id}` on line {line}")]
    DuplicateId { id: String, line: usize },
    #[error("record `{id}` has no gold resource")]
    MissingGold { id: String },
    #[error("gold for `{id}` is not a valid resource: {message}")]
    InvalidGold { id: String, message: String },
}

/// Non-blank lines with their 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Parses a corpus file, rejecting duplicate ids.
pub fn read_corpus(text: &str) -> Result<Vec<CorpusRecord>, CorpusError> {
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (line, content) in lines(text) {
        let record: CorpusRecord = serde_json::from_str(content).map_err(|e| CorpusError::Line {
            line,
            message: e.to_string(),
        })?;
        if !seen.insert(record.id.clone()) {
            return Err(CorpusError::DuplicateId { id: record.id, line });
        }
        records.push(record);
    }
    Ok(records)
}

/// The bundled synthetic sig corpus (invented strings with gold resources).
pub fn synthetic_corpus() -> Vec<CorpusRecord> {
    read_corpus(SYNTHETIC).expect("bundled corpus is well-formed")
}

impl CorpusRecord {
    /// Parses the gold resource.
    pub fn gold_resource(&self) -> Result<MedicationStatement, CorpusError> {
        let gold = self
            .gold
            .as_ref()
            .ok_or_else(|| CorpusError::MissingGold { id: self.id.clone() })?;
        resource_from_value(gold)
            .map(|p| p.value)
            .map_err(|e| CorpusError::InvalidGold {
                id: self.id.clone(),
                message: e.to_string(),
            })
    }
}

/// `(id, gold)` for every record; every record must carry gold.
pub fn gold_resources(records: &[CorpusRecord]) -> Result<Vec<(String, MedicationStatement)>, CorpusError> {
    records.iter().map(|r| Ok((r.id.clone(), r.gold_resource()?))).collect()
}

/// Parses a JSON-lines file of conversion results.
pub fn read_results(text: &str) -> Result<Vec<ConversionResult>, CorpusError> {
    lines(text)
        .map(|(line, content)| {
            serde_json::from_str(content).map_err(|e| CorpusError::Line {
                line,
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_ids_are_named() {
        let text = "{\"id\":\"a\",\"text\":\"x\"}\n\n{\"id\":\"a\",\"text\":\"y\"}\n";
        match read_corpus(text) {
            Err(CorpusError::DuplicateId { id, line }) => assert_eq!((id.as_str(), line), ("a", 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn synthetic_corpus_has_fifty_gold_records() {
        let records = synthetic_corpus();
        assert_eq!(records.len(), 50);
        assert_eq!(gold_resources(&records).unwrap().len(), 50);
    }
}
