use thiserror::Error;

use super::rules::{parse_exact, Exact};
use super::SigParser;
use crate::model::TimeUnit;
use crate::terminology::{normalize_text, CodeEntry, CodeTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SigError {
    #[error("medication text is empty")]
    EmptyInput,
}

/// A number-with-unit captured from the sig.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigQuantity {
    pub value: Exact,
    /// Unit as written, when a unit was recognized.
    pub unit_text: Option<String>,
    /// UCUM code of the recognized unit.
    pub unit_code: Option<String>,
    /// The whole quantity as written, e.g. `"0.5 mg"`.
    pub span: String,
}

impl SigQuantity {
    /// Countable units (tablets, puffs, drops ...) as opposed to amounts.
    pub fn is_count(&self) -> bool {
        self.unit_code.as_deref().is_some_and(is_count_unit)
    }
}

pub(crate) fn is_count_unit(code: &str) -> bool {
    code.starts_with('{') || code == "[drp]"
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SigDose {
    Single(SigQuantity),
    Range(SigQuantity, SigQuantity),
}

/// Components captured from one free-text sig. Text fields hold spans of the
/// input exactly as written.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedSig {
    pub drug_text: String,
    pub strength: Option<SigQuantity>,
    pub form_text: Option<String>,
    pub route_text: Option<String>,
    /// Timing code of the recognized frequency phrase (`Q4H`, `TID`, ...).
    pub frequency_token: Option<String>,
    pub frequency_text: Option<String>,
    pub as_needed: bool,
    pub explicit_duration: Option<(Exact, TimeUnit)>,
    pub dispense_quantity: Option<Exact>,
    pub dispense_unit: Option<String>,
    pub dose: Option<SigDose>,
    pub reason_text: Option<String>,
}

impl ParsedSig {
    /// Drug, strength and form as they would read on a label:
    /// `"clonazepam 0.5 mg Tablet"`.
    pub fn medication_text(&self) -> String {
        let mut parts: Vec<&str> = Vec::new();
        if !self.drug_text.is_empty() {
            parts.push(&self.drug_text);
        }
        if let Some(s) = &self.strength {
            parts.push(&s.span);
        }
        if let Some(f) = &self.form_text {
            parts.push(f);
        }
        parts.join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Word,
    Number,
    Dash,
    Hash,
}

#[derive(Debug, Clone)]
struct Token {
    kind: Kind,
    start: usize,
    end: usize,
    norm: String,
}

fn push(tokens: &mut Vec<Token>, text: &str, kind: Kind, start: usize, end: usize) {
    let norm = match kind {
        Kind::Number => text[start..end].to_string(),
        _ => normalize_text(&text[start..end]),
    };
    if kind != Kind::Word || !norm.is_empty() {
        tokens.push(Token { kind, start, end, norm });
    }
}

/// Splits on whitespace and list punctuation, separates numbers glued to
/// units (`500mg`, `x10`), and keeps dots inside abbreviations (`p.o.`).
fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let at = |i: usize| chars.get(i).map(|&(_, c)| c);
    let offset = |i: usize| chars.get(i).map_or(text.len(), |&(p, _)| p);
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i].1;
        let start = offset(i);
        if c.is_ascii_digit() || (c == '.' && at(i + 1).is_some_and(|n| n.is_ascii_digit())) {
            let mut j = i;
            while at(j).is_some_and(|c| c.is_ascii_digit()) {
                j += 1;
            }
            if at(j) == Some('.') && at(j + 1).is_some_and(|c| c.is_ascii_digit()) {
                j += 1;
                while at(j).is_some_and(|c| c.is_ascii_digit()) {
                    j += 1;
                }
            }
            push(&mut tokens, text, Kind::Number, start, offset(j));
            i = j;
        } else if c == '%' {
            push(&mut tokens, text, Kind::Word, start, offset(i + 1));
            i += 1;
        } else if c.is_alphabetic() {
            let mut j = i;
            while let Some(c) = at(j) {
                let inner_dot = c == '.' && at(j + 1).is_some_and(char::is_alphanumeric);
                if c.is_alphanumeric() || c == '\'' || inner_dot {
                    j += 1;
                } else {
                    break;
                }
            }
            // `p.o.`: keep the closing dot of a dotted abbreviation.
            if at(j) == Some('.') && text[start..offset(j)].contains('.') {
                j += 1;
            }
            let word = &text[start..offset(j)];
            let digits = word.get(1..).unwrap_or("");
            if (word.starts_with('x') || word.starts_with('X'))
                && !digits.is_empty()
                && digits.chars().all(|c| c.is_ascii_digit())
            {
                push(&mut tokens, text, Kind::Word, start, offset(i + 1));
                push(&mut tokens, text, Kind::Number, offset(i + 1), offset(j));
            } else {
                push(&mut tokens, text, Kind::Word, start, offset(j));
            }
            i = j;
        } else if c == '-' {
            push(&mut tokens, text, Kind::Dash, start, offset(i + 1));
            i += 1;
        } else if c == '#' {
            push(&mut tokens, text, Kind::Hash, start, offset(i + 1));
            i += 1;
        } else {
            i += 1;
        }
    }
    tokens
}

const DOSE_VERBS: &[&str] = &[
    "take",
    "give",
    "apply",
    "inhale",
    "instill",
    "inject",
    "use",
    "insert",
    "chew",
    "place",
    "administer",
    "spray",
];
const DISPENSE_WORDS: &[&str] = &["dispense", "disp", "qty", "quantity"];

fn time_unit_word(norm: &str) -> Option<TimeUnit> {
    match norm {
        "day" | "days" | "d" => Some(TimeUnit::Day),
        "week" | "weeks" | "wk" | "wks" => Some(TimeUnit::Week),
        "month" | "months" | "mo" => Some(TimeUnit::Month),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Timing,
    Route,
    Form,
}

struct Scan<'a> {
    text: &'a str,
    tokens: Vec<Token>,
    parser: &'a SigParser,
}

impl<'a> Scan<'a> {
    fn span(&self, from: usize, to_inclusive: usize) -> String {
        self.text[self.tokens[from].start..self.tokens[to_inclusive].end].to_string()
    }

    fn word(&self, i: usize) -> Option<&str> {
        self.tokens
            .get(i)
            .filter(|t| t.kind == Kind::Word)
            .map(|t| t.norm.as_str())
    }

    fn is_number(&self, i: usize) -> bool {
        self.tokens.get(i).is_some_and(|t| t.kind == Kind::Number)
    }

    /// Longest run of word or number tokens starting at `i` that is a synonym in `table`.
    fn match_in(&self, table: &'a CodeTable, i: usize) -> Option<(usize, &'a CodeEntry)> {
        let max = table.max_synonym_words();
        let mut words = Vec::new();
        let mut best = None;
        for j in i..self.tokens.len().min(i + max) {
            if !matches!(self.tokens[j].kind, Kind::Word | Kind::Number) {
                break;
            }
            words.push(self.tokens[j].norm.as_str());
            let phrase = words.join(" ");
            if table.has_synonym(&phrase) {
                if let Some(entry) = table.resolve_text(&[], &phrase) {
                    best = Some((j - i + 1, entry));
                }
            }
        }
        best
    }

    /// Longest phrase at `i` across the timing, route and form tables; ties
    /// prefer timing, then route.
    fn phrase(&self, i: usize) -> Option<(usize, Slot, &'a CodeEntry)> {
        let tables = &self.parser.tables;
        let mut best: Option<(usize, Slot, &'a CodeEntry)> = None;
        for (slot, table) in [
            (Slot::Timing, &tables.timing),
            (Slot::Route, &tables.routes),
            (Slot::Form, &tables.forms),
        ] {
            if let Some((len, entry)) = self.match_in(table, i) {
                if best.is_none_or(|(l, _, _)| len > l) {
                    best = Some((len, slot, entry));
                }
            }
        }
        best
    }

    /// `<number> <time unit>` at `i`.
    fn duration_at(&self, i: usize) -> Option<(Exact, TimeUnit)> {
        if !self.is_number(i) {
            return None;
        }
        let unit = time_unit_word(self.word(i + 1)?)?;
        Some((parse_exact(&self.tokens[i].norm)?, unit))
    }

    fn starts_clause(&self, i: usize) -> bool {
        let t = &self.tokens[i];
        match t.kind {
            Kind::Number | Kind::Dash | Kind::Hash => true,
            Kind::Word => {
                DOSE_VERBS.contains(&t.norm.as_str())
                    || DISPENSE_WORDS.contains(&t.norm.as_str())
                    || t.norm == "for"
                    || (t.norm == "x" && self.is_number(i + 1))
                    || self.phrase(i).is_some()
            }
        }
    }

    fn ends_reason(&self, i: usize) -> bool {
        let t = &self.tokens[i];
        t.kind == Kind::Hash
            || DISPENSE_WORDS.contains(&t.norm.as_str())
            || (t.norm == "x" && self.is_number(i + 1))
            || (t.norm == "for" && self.duration_at(i + 1).is_some())
    }

    /// `<n>[-<m> | to <m>] [unit]` at `i`. Returns the quantity (or range) and
    /// the index after it.
    fn quantity(&self, i: usize) -> Option<(SigQuantity, Option<SigQuantity>, usize)> {
        let low = parse_exact(&self.tokens[i].norm)?;
        let mut j = i + 1;
        let mut high = None;
        let is_range_sep = |k: usize| {
            self.tokens
                .get(k)
                .is_some_and(|t| t.kind == Kind::Dash || (t.kind == Kind::Word && t.norm == "to"))
        };
        if is_range_sep(j) && self.is_number(j + 1) {
            high = Some((j + 1, parse_exact(&self.tokens[j + 1].norm)?));
            j += 2;
        }
        let unit = self.match_in(&self.parser.tables.units, j);
        let last = unit.map_or(j - 1, |(len, _)| j + len - 1);
        let (unit_text, unit_code) = match unit {
            Some((len, entry)) => (Some(self.span(j, j + len - 1)), Some(entry.code.clone())),
            None => (None, None),
        };
        let next = last + 1;
        match high {
            None => Some((
                SigQuantity {
                    value: low,
                    unit_text,
                    unit_code,
                    span: self.span(i, last),
                },
                None,
                next,
            )),
            Some((hi_index, hi_value)) => Some((
                SigQuantity {
                    value: low,
                    unit_text: unit_text.clone(),
                    unit_code: unit_code.clone(),
                    span: self.span(i, i),
                },
                Some(SigQuantity {
                    value: hi_value,
                    unit_text,
                    unit_code,
                    span: self.span(hi_index, last),
                }),
                next,
            )),
        }
    }
}

impl SigParser {
    /// Extracts sig components by longest match against the phrase tables.
    /// Components that are not found stay absent.
    pub fn parse_sig(&self, text: &str) -> Result<ParsedSig, SigError> {
        if text.trim().is_empty() {
            return Err(SigError::EmptyInput);
        }
        let scan = Scan {
            text,
            tokens: tokenize(text),
            parser: self,
        };
        let tokens = &scan.tokens;
        let mut sig = ParsedSig::default();

        let drug_end = (0..tokens.len())
            .find(|&i| scan.starts_clause(i))
            .unwrap_or(tokens.len());
        if drug_end > 0 {
            sig.drug_text = scan.span(0, drug_end - 1);
        }

        let mut pending_dose = false;
        let mut i = drug_end;
        while i < tokens.len() {
            let token = &tokens[i];
            if let Some(next) = self.apply_phrase(&scan, &mut sig, i) {
                i = next;
                continue;
            }
            match token.kind {
                Kind::Number => {
                    let Some((first, second, next)) = scan.quantity(i) else {
                        i += 1;
                        continue;
                    };
                    if first.unit_code.is_none() {
                        i = next;
                        continue;
                    }
                    match second {
                        Some(high) => {
                            if sig.dose.is_none() {
                                sig.dose = Some(SigDose::Range(first, high));
                            }
                        }
                        None => {
                            let as_strength = !pending_dose && !first.is_count() && sig.strength.is_none();
                            if as_strength {
                                sig.strength = Some(first);
                            } else if sig.dose.is_none() {
                                sig.dose = Some(SigDose::Single(first));
                            }
                        }
                    }
                    pending_dose = false;
                    i = next;
                }
                Kind::Hash => {
                    i = self.dispense(&scan, &mut sig, i + 1);
                }
                Kind::Dash => i += 1,
                Kind::Word => {
                    let word = token.norm.as_str();
                    if DOSE_VERBS.contains(&word) {
                        pending_dose = true;
                        i += 1;
                    } else if DISPENSE_WORDS.contains(&word) {
                        i = self.dispense(&scan, &mut sig, i + 1);
                    } else if word == "x" && scan.duration_at(i + 1).is_some() {
                        sig.explicit_duration = sig.explicit_duration.or(scan.duration_at(i + 1));
                        i += 3;
                    } else if word == "for" {
                        if let Some(duration) = scan.duration_at(i + 1) {
                            sig.explicit_duration = sig.explicit_duration.or(Some(duration));
                            i += 3;
                        } else {
                            let start = i + 1;
                            let mut end = start;
                            while end < tokens.len() && !scan.ends_reason(end) {
                                end += 1;
                            }
                            if end > start && sig.reason_text.is_none() {
                                sig.reason_text = Some(scan.span(start, end - 1));
                            }
                            i = end.max(i + 1);
                        }
                    } else {
                        i += 1;
                    }
                }
            }
        }
        Ok(sig)
    }

    /// Records a timing, route or form phrase at `i`; returns the index after it.
    /// Duration clauses (`for 10 days`, `x10 days`) are left to the caller.
    fn apply_phrase(&self, scan: &Scan<'_>, sig: &mut ParsedSig, i: usize) -> Option<usize> {
        let (len, slot, entry) = scan.phrase(i)?;
        let span = scan.span(i, i + len - 1);
        match slot {
            Slot::Timing if self.is_as_needed(entry) => sig.as_needed = true,
            Slot::Timing => {
                if sig.frequency_token.is_none() {
                    sig.frequency_token = Some(entry.code.clone());
                    sig.frequency_text = Some(span);
                }
            }
            Slot::Route => {
                sig.route_text.get_or_insert(span);
            }
            Slot::Form => {
                sig.form_text.get_or_insert(span);
            }
        }
        Some(i + len)
    }

    fn dispense(&self, scan: &Scan<'_>, sig: &mut ParsedSig, i: usize) -> usize {
        if !scan.is_number(i) {
            return i;
        }
        let Some(value) = parse_exact(&scan.tokens[i].norm) else {
            return i + 1;
        };
        if sig.dispense_quantity.is_none() {
            sig.dispense_quantity = Some(value);
            if let Some((len, entry)) = scan.match_in(&self.tables.units, i + 1) {
                sig.dispense_unit = Some(entry.code.clone());
                return i + 1 + len;
            }
        }
        i + 1
    }

    pub(crate) fn is_as_needed(&self, entry: &CodeEntry) -> bool {
        entry.code == super::AS_NEEDED_CODE
    }
}
