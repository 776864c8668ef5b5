//! Deterministic rule-based sig parsing: the offline conversion backend and
//! the home of duration inference and dose ranges.

mod fragments;
mod parse;
mod rules;

use std::sync::LazyLock;

use crate::terminology::TableSet;

pub use parse::{ParsedSig, SigDose, SigError, SigQuantity};
pub use rules::{infer_duration, parse_exact, to_f64, DomainError, Exact, FrequencyRule, RuleTable};

/// Timing code for as-needed use. It has no frequency rule.
pub const AS_NEEDED_CODE: &str = "PRN";

/// Phrase tables and frequency rules driving the parser. Immutable; share
/// freely across threads.
#[derive(Debug, Clone)]
pub struct SigParser {
    pub tables: TableSet,
    pub rules: RuleTable,
}

static BUNDLED: LazyLock<SigParser> = LazyLock::new(|| SigParser::new(TableSet::bundled(), RuleTable::bundled()));

impl SigParser {
    pub fn new(tables: TableSet, rules: RuleTable) -> Self {
        Self { tables, rules }
    }

    pub fn bundled() -> &'static SigParser {
        &BUNDLED
    }
}

/// [`SigParser::parse_sig`] with the bundled tables.
pub fn parse_sig(text: &str) -> Result<ParsedSig, SigError> {
    SigParser::bundled().parse_sig(text)
}
