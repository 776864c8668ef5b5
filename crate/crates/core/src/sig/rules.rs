//! Frequency rules and duration inference.

use std::collections::HashMap;
use std::path::Path;

use num_rational::Ratio;
use thiserror::Error;

use crate::model::TimeUnit;
use crate::terminology::TableError;

pub type Exact = Ratio<i64>;

const BUNDLED_RULES: &str = include_str!("../../data/frequency_rules.csv");

/// Parses `"4"`, `"0.5"`, `"4.0"` or `"1/7"` into an exact ratio.
pub fn parse_exact(text: &str) -> Option<Exact> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num = parse_exact(num)?;
        let den = parse_exact(den)?;
        return (den != Exact::from_integer(0)).then(|| num / den);
    }
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) || frac.len() > 12 {
        return None;
    }
    let scale = 10i64.checked_pow(frac.len() as u32)?;
    let whole: i64 = if whole.is_empty() { 0 } else { whole.parse().ok()? };
    let frac_value: i64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    let value = Exact::new(whole.checked_mul(scale)?.checked_add(frac_value)?, scale);
    Some(if negative { -value } else { value })
}

pub fn to_f64(value: Exact) -> f64 {
    *value.numer() as f64 / *value.denom() as f64
}

/// Length of one unit in days, for the units with a fixed length.
fn unit_in_days(unit: TimeUnit) -> Option<Exact> {
    match unit {
        TimeUnit::Second => Some(Exact::new(1, 86_400)),
        TimeUnit::Minute => Some(Exact::new(1, 1_440)),
        TimeUnit::Hour => Some(Exact::new(1, 24)),
        TimeUnit::Day => Some(Exact::from_integer(1)),
        TimeUnit::Week => Some(Exact::from_integer(7)),
        TimeUnit::Month | TimeUnit::Year => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyRule {
    /// The timing code this rule belongs to (`Q4H`, `TID`, ...).
    pub token: String,
    pub frequency: u32,
    pub period: Exact,
    pub period_unit: TimeUnit,
    pub daily_events: Exact,
}

impl FrequencyRule {
    /// Events per day implied by `frequency` per `period` `period_unit`.
    pub fn implied_daily_events(&self) -> Option<Exact> {
        let period_days = unit_in_days(self.period_unit)? * self.period;
        Some(Exact::from_integer(i64::from(self.frequency)) / period_days)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RuleTable {
    rules: Vec<FrequencyRule>,
    by_token: HashMap<String, usize>,
}

impl RuleTable {
    /// Parses a rule file with header `token,frequency,period,periodUnit,dailyEvents`.
    /// Rows whose `dailyEvents` disagrees with their frequency and period are rejected.
    pub fn parse(source: &str) -> Result<Self, TableError> {
        let mut table = RuleTable::default();
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(source.as_bytes());
        let headers = reader.headers().map_err(|e| TableError::from_csv(&e))?.clone();
        let names: Vec<&str> = headers.iter().collect();
        if names != ["token", "frequency", "period", "periodUnit", "dailyEvents"] {
            return Err(TableError::Format {
                line: headers.position().map_or(1, |p| p.line()),
                message: format!(
                    "expected header `token,frequency,period,periodUnit,dailyEvents`, found `{}`",
                    names.join(",")
                ),
            });
        }
        for record in reader.records() {
            let record = record.map_err(|e| TableError::from_csv(&e))?;
            let line = record.position().map_or(0, |p| p.line());
            let bad = |message: String| TableError::Format { line, message };
            let field = |i: usize| record.get(i).unwrap_or_default();
            let token = field(0).to_string();
            if token.is_empty() {
                return Err(bad("empty token".into()));
            }
            let frequency: u32 = field(1)
                .parse()
                .ok()
                .filter(|f| *f > 0)
                .ok_or_else(|| bad(format!("frequency `{}` is not a positive integer", field(1))))?;
            let period = parse_exact(field(2))
                .filter(|p| *p > Exact::from_integer(0))
                .ok_or_else(|| bad(format!("period `{}` is not a positive decimal", field(2))))?;
            let period_unit = TimeUnit::from_code(field(3))
                .ok_or_else(|| bad(format!("periodUnit `{}` is not a time unit", field(3))))?;
            let daily_events = parse_exact(field(4))
                .filter(|d| *d > Exact::from_integer(0))
                .ok_or_else(|| bad(format!("dailyEvents `{}` is not a positive number", field(4))))?;
            let rule = FrequencyRule {
                token: token.clone(),
                frequency,
                period,
                period_unit,
                daily_events,
            };
            match rule.implied_daily_events() {
                Some(implied) if implied == daily_events => {}
                Some(implied) => {
                    return Err(bad(format!(
                        "dailyEvents {daily_events} disagrees with {frequency} per {} {period_unit} ({implied})",
                        field(2)
                    )))
                }
                None => return Err(bad(format!("periodUnit `{period_unit}` has no fixed length in days"))),
            }
            if table.by_token.insert(token.clone(), table.rules.len()).is_some() {
                return Err(bad(format!("duplicate token {token}")));
            }
            table.rules.push(rule);
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

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_RULES).expect("bundled frequency_rules.csv is well-formed")
    }

    pub fn get(&self, token: &str) -> Option<&FrequencyRule> {
        self.by_token.get(token).map(|&i| &self.rules[i])
    }

    pub fn rules(&self) -> &[FrequencyRule] {
        &self.rules
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot infer duration: {0}")]
pub struct DomainError(pub String);

/// Days of supply: `dispensed / (daily_events × per_administration)`, exact.
pub fn infer_duration(rule: &FrequencyRule, dispensed: Exact, per_administration: Exact) -> Result<Exact, DomainError> {
    let zero = Exact::from_integer(0);
    if dispensed <= zero {
        return Err(DomainError(format!("dispense quantity {dispensed} must be positive")));
    }
    if per_administration <= zero {
        return Err(DomainError(format!(
            "units per administration {per_administration} must be positive"
        )));
    }
    if rule.daily_events <= zero {
        return Err(DomainError(format!("rule {} has no positive event rate", rule.token)));
    }
    Ok(dispensed / (rule.daily_events * per_administration))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(token: &str) -> FrequencyRule {
        RuleTable::bundled().get(token).unwrap().clone()
    }

    fn int(v: i64) -> Exact {
        Exact::from_integer(v)
    }

    #[test]
    fn tid_dispense_thirty_is_ten_days() {
        assert_eq!(infer_duration(&rule("TID"), int(30), int(1)), Ok(int(10)));
    }

    #[test]
    fn qd_identity_rate() {
        assert_eq!(infer_duration(&rule("QD"), int(7), int(1)), Ok(int(7)));
    }

    #[test]
    fn bid_two_per_dose_is_seven_and_a_half() {
        assert_eq!(infer_duration(&rule("BID"), int(30), int(2)), Ok(Exact::new(15, 2)));
    }

    #[test]
    fn nonpositive_inputs_rejected() {
        assert!(infer_duration(&rule("TID"), int(0), int(1)).is_err());
        assert!(infer_duration(&rule("TID"), int(30), int(-1)).is_err());
    }

    #[test]
    fn every_bundled_rule_is_consistent() {
        let table = RuleTable::bundled();
        assert_eq!(table.rules().len(), 16);
        for r in table.rules() {
            assert_eq!(r.implied_daily_events(), Some(r.daily_events), "{}", r.token);
        }
    }

    #[test]
    fn inconsistent_row_rejected() {
        let src = "token,frequency,period,periodUnit,dailyEvents\nQ4H,1,4,h,4\n";
        assert!(matches!(RuleTable::parse(src), Err(TableError::Format { line: 2, .. })));
    }

    #[test]
    fn exact_parsing() {
        assert_eq!(parse_exact("4"), Some(int(4)));
        assert_eq!(parse_exact("4.0"), Some(int(4)));
        assert_eq!(parse_exact("0.5"), Some(Exact::new(1, 2)));
        assert_eq!(parse_exact("1/7"), Some(Exact::new(1, 7)));
        assert_eq!(parse_exact(".25"), Some(Exact::new(1, 4)));
        assert_eq!(parse_exact("1/0"), None);
        assert_eq!(parse_exact("abc"), None);
        assert_eq!(parse_exact(""), None);
        assert_eq!(parse_exact("."), None);
    }
}
