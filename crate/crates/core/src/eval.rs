//! Scores conversion results against gold resources: per-element exact
//! match, occurrence precision/recall/F1 and format conformity.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::conversion::{ConversionResult, ElementKind};
use crate::model::{resource_to_value, values_equal, MedicationStatement};

/// The eight scored elements, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Element {
    #[serde(rename = "medicationCode")]
    MedicationCode,
    #[serde(rename = "doseForm")]
    DoseForm,
    #[serde(rename = "totalVolume")]
    TotalVolume,
    #[serde(rename = "reason")]
    Reason,
    #[serde(rename = "route")]
    Route,
    #[serde(rename = "timing.repeat")]
    TimingRepeat,
    #[serde(rename = "timing.code")]
    TimingCode,
    #[serde(rename = "doseQuantity/doseRange")]
    Dose,
}

impl Element {
    pub const ALL: [Element; 8] = [
        Element::MedicationCode,
        Element::DoseForm,
        Element::TotalVolume,
        Element::Reason,
        Element::Route,
        Element::TimingRepeat,
        Element::TimingCode,
        Element::Dose,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Element::MedicationCode => "medicationCode",
            Element::DoseForm => "doseForm",
            Element::TotalVolume => "totalVolume",
            Element::Reason => "reason",
            Element::Route => "route",
            Element::TimingRepeat => "timing.repeat",
            Element::TimingCode => "timing.code",
            Element::Dose => "doseQuantity/doseRange",
        }
    }

    fn pointer(self) -> &'static str {
        match self {
            Element::MedicationCode => "/medication/code",
            Element::DoseForm => "/medication/doseForm",
            Element::TotalVolume => "/medication/totalVolume",
            Element::Reason => "/reason",
            Element::Route => "/dosage/0/route",
            Element::TimingRepeat => "/dosage/0/timing/repeat",
            Element::TimingCode => "/dosage/0/timing/code",
            Element::Dose => "/dosage/0/doseAndRate/0",
        }
    }

    /// Occurrences of this element in a resource: at most one, except for reasons.
    pub fn occurrences(self, resource: Option<&MedicationStatement>) -> Vec<Value> {
        let Some(resource) = resource else {
            return Vec::new();
        };
        match resource_to_value(resource).pointer(self.pointer()) {
            None => Vec::new(),
            Some(Value::Array(items)) if self == Element::Reason => items.clone(),
            Some(value) => vec![value.clone()],
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Occurrence outcome of one single-valued slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    TpExact,
    TpInexact,
    FalsePositive,
    FalseNegative,
    TrueNegative,
}

/// Per-slot counts; list elements can produce several outcomes at once.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub tp_exact: usize,
    pub tp_inexact: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl Counts {
    pub fn true_positives(&self) -> usize {
        self.tp_exact + self.tp_inexact
    }

    fn add(&mut self, other: Counts) {
        self.tp_exact += other.tp_exact;
        self.tp_inexact += other.tp_inexact;
        self.false_positives += other.false_positives;
        self.false_negatives += other.false_negatives;
    }
}

/// Occurrence logic for a single-valued slot.
pub fn compare_slot(predicted: Option<&Value>, gold: Option<&Value>) -> Outcome {
    match (predicted, gold) {
        (Some(p), Some(g)) if values_equal(p, g) => Outcome::TpExact,
        (Some(_), Some(_)) => Outcome::TpInexact,
        (Some(_), None) => Outcome::FalsePositive,
        (None, Some(_)) => Outcome::FalseNegative,
        (None, None) => Outcome::TrueNegative,
    }
}

/// Greedy one-to-one matching by structural equality: each gold entry takes
/// the first unused equal prediction. Unmatched entries count as false
/// positives and false negatives.
pub fn compare_list(predicted: &[Value], gold: &[Value]) -> Counts {
    let mut used = vec![false; predicted.len()];
    let mut matched = 0;
    for g in gold {
        if let Some(i) = (0..predicted.len()).find(|&i| !used[i] && values_equal(&predicted[i], g)) {
            used[i] = true;
            matched += 1;
        }
    }
    Counts {
        tp_exact: matched,
        tp_inexact: 0,
        false_positives: predicted.len() - matched,
        false_negatives: gold.len() - matched,
    }
}

/// Compares one element of a predicted resource against gold.
pub fn compare_element(
    predicted: Option<&MedicationStatement>,
    gold: Option<&MedicationStatement>,
    element: Element,
) -> Counts {
    let p = element.occurrences(predicted);
    let g = element.occurrences(gold);
    if element == Element::Reason {
        return compare_list(&p, &g);
    }
    let mut counts = Counts::default();
    match compare_slot(p.first(), g.first()) {
        Outcome::TpExact => counts.tp_exact = 1,
        Outcome::TpInexact => counts.tp_inexact = 1,
        Outcome::FalsePositive => counts.false_positives = 1,
        Outcome::FalseNegative => counts.false_negatives = 1,
        Outcome::TrueNegative => {}
    }
    counts
}

/// A gold resource and the conversion result for the same input.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldPair {
    pub input_id: String,
    pub gold: MedicationStatement,
    pub predicted: ConversionResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ElementMetrics {
    pub element: Element,
    /// Gold occurrences (reason entries count individually).
    pub gold_present: usize,
    /// Statements whose gold carries the element.
    pub statements_present: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub exact_matches: usize,
    pub exact_match_rate: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio_or_one(numerator: usize, denominator: usize) -> f64 {
    if denominator == 0 {
        1.0
    } else {
        numerator as f64 / denominator as f64
    }
}

impl ElementMetrics {
    pub fn from_counts(element: Element, counts: Counts, gold_present: usize, statements_present: usize) -> Self {
        let tp = counts.true_positives();
        let precision = ratio_or_one(tp, tp + counts.false_positives);
        let recall = ratio_or_one(tp, tp + counts.false_negatives);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ElementMetrics {
            element,
            gold_present,
            statements_present,
            true_positives: tp,
            false_positives: counts.false_positives,
            false_negatives: counts.false_negatives,
            exact_matches: counts.tp_exact,
            exact_match_rate: ratio_or_one(counts.tp_exact, gold_present),
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvalReport {
    pub per_element: Vec<ElementMetrics>,
    pub format_conformity_rate: f64,
    pub corpus_size: usize,
    /// Share of statements whose eight elements all match gold exactly.
    pub whole_resource_exact_rate: f64,
}

impl EvalReport {
    pub fn element(&self, element: Element) -> &ElementMetrics {
        self.per_element
            .iter()
            .find(|m| m.element == element)
            .expect("reports carry every element")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("cannot evaluate an empty corpus")]
    EmptyCorpus,
    #[error("pair id `{pair}` does not match its result id `{result}`")]
    IdMismatch { pair: String, result: String },
}

/// Aggregates element comparisons over the corpus. The result does not
/// depend on pair order.
pub fn compute_metrics(pairs: &[GoldPair]) -> Result<EvalReport, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let mut counts: HashMap<Element, (Counts, usize, usize)> = HashMap::new();
    let mut format_failures = 0usize;
    let mut whole_exact = 0usize;
    for pair in pairs {
        if pair.input_id != pair.predicted.input_id {
            return Err(EvalError::IdMismatch {
                pair: pair.input_id.clone(),
                result: pair.predicted.input_id.clone(),
            });
        }
        format_failures += pair.predicted.format_failures();
        let mut all_exact = pair.predicted.resource.is_some();
        for element in Element::ALL {
            let c = compare_element(pair.predicted.resource.as_ref(), Some(&pair.gold), element);
            let gold_n = element.occurrences(Some(&pair.gold)).len();
            all_exact &= c.tp_inexact == 0 && c.false_positives == 0 && c.false_negatives == 0;
            let entry = counts.entry(element).or_default();
            entry.0.add(c);
            entry.1 += gold_n;
            entry.2 += usize::from(gold_n > 0);
        }
        whole_exact += usize::from(all_exact);
    }
    let per_element = Element::ALL
        .into_iter()
        .map(|e| {
            let (c, gold_present, statements) = counts.get(&e).copied().unwrap_or_default();
            ElementMetrics::from_counts(e, c, gold_present, statements)
        })
        .collect();
    let n = pairs.len();
    Ok(EvalReport {
        per_element,
        format_conformity_rate: 1.0 - format_failures as f64 / (ElementKind::ALL.len() * n) as f64,
        corpus_size: n,
        whole_resource_exact_rate: whole_exact as f64 / n as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("gold and results do not align: {}", describe(.missing_results, .unknown_results))]
pub struct JoinError {
    /// Gold ids with no result.
    pub missing_results: Vec<String>,
    /// Result ids with no gold.
    pub unknown_results: Vec<String>,
}

fn describe(missing: &[String], unknown: &[String]) -> String {
    let mut parts = Vec::new();
    if !missing.is_empty() {
        parts.push(format!("no result for {}", missing.join(", ")));
    }
    if !unknown.is_empty() {
        parts.push(format!("no gold for {}", unknown.join(", ")));
    }
    parts.join("; ")
}

/// Pairs gold resources with results by id, in gold order. Both sides must
/// cover exactly the same ids.
pub fn join(
    gold: Vec<(String, MedicationStatement)>,
    results: Vec<ConversionResult>,
) -> Result<Vec<GoldPair>, JoinError> {
    let gold_ids: BTreeSet<&str> = gold.iter().map(|(id, _)| id.as_str()).collect();
    let unknown_results: Vec<String> = results
        .iter()
        .filter(|r| !gold_ids.contains(r.input_id.as_str()))
        .map(|r| r.input_id.clone())
        .collect();
    let mut by_id: HashMap<String, ConversionResult> = results.into_iter().map(|r| (r.input_id.clone(), r)).collect();
    let mut missing_results = Vec::new();
    let mut pairs = Vec::new();
    for (id, gold) in gold {
        match by_id.remove(&id) {
            Some(predicted) => pairs.push(GoldPair {
                input_id: id,
                gold,
                predicted,
            }),
            None => missing_results.push(id),
        }
    }
    if missing_results.is_empty() && unknown_results.is_empty() {
        Ok(pairs)
    } else {
        Err(JoinError {
            missing_results,
            unknown_results,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown report format `{0}`; expected table, json or csv")]
pub struct UnknownFormat(pub String);

impl FromStr for ReportFormat {
    type Err = UnknownFormat;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "table" | "text" => Ok(ReportFormat::Table),
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(UnknownFormat(s.to_string())),
        }
    }
}

fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// Renders a report as an aligned text table, JSON or CSV. Rates use three
/// decimals in the table and CSV forms.
pub fn render_report(report: &EvalReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(report).expect("reports always serialize"),
        ReportFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            let header = [
                "element",
                "n",
                "n_percent",
                "exact_match",
                "precision",
                "recall",
                "f1",
                "tp",
                "fp",
                "fn",
            ];
            writer.write_record(header).expect("writing to memory");
            for m in &report.per_element {
                writer
                    .write_record([
                        m.element.name().to_string(),
                        m.gold_present.to_string(),
                        format!("{:.1}", percent(m.statements_present, report.corpus_size)),
                        format!("{:.3}", m.exact_match_rate),
                        format!("{:.3}", m.precision),
                        format!("{:.3}", m.recall),
                        format!("{:.3}", m.f1),
                        m.true_positives.to_string(),
                        m.false_positives.to_string(),
                        m.false_negatives.to_string(),
                    ])
                    .expect("writing to memory");
            }
            String::from_utf8(writer.into_inner().expect("flushing to memory")).expect("CSV output is UTF-8")
        }
        ReportFormat::Table => {
            let mut out = format!(
                "{:<24} {:>14} {:>11} {:>7} {:>7} {:>7}\n",
                "Element", "N (%)", "Exact Match", "Prec.", "Rec.", "F1"
            );
            for m in &report.per_element {
                let n = format!(
                    "{} ({:.1}%)",
                    m.gold_present,
                    percent(m.statements_present, report.corpus_size)
                );
                out.push_str(&format!(
                    "{:<24} {:>14} {:>11.3} {:>7.3} {:>7.3} {:>7.3}\n",
                    m.element.name(),
                    n,
                    m.exact_match_rate,
                    m.precision,
                    m.recall,
                    m.f1
                ));
            }
            out.push_str(&format!("\ncorpus size: {}\n", report.corpus_size));
            out.push_str(&format!(
                "format conformity rate: {:.3}\n",
                report.format_conformity_rate
            ));
            out.push_str(&format!(
                "whole-resource exact match rate: {:.3}\n",
                report.whole_resource_exact_rate
            ));
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CodeableConcept, CodeableReference, Coding, Dosage, MedicationDetail};
    use crate::terminology::systems::SNOMED;

    fn statement(route: Option<&str>, reasons: &[&str]) -> MedicationStatement {
        let mut s = MedicationStatement::new(MedicationDetail::new(CodeableConcept::text("aspirin")));
        if let Some(route) = route {
            s.dosage.push(Dosage {
                route: Some(CodeableConcept::text(route)),
                ..Dosage::default()
            });
        }
        s.reason = reasons
            .iter()
            .map(|r| CodeableReference::from(CodeableConcept::text(*r)))
            .collect();
        s
    }

    fn pair(id: &str, predicted: Option<MedicationStatement>, gold: MedicationStatement) -> GoldPair {
        let mut result = ConversionResult::empty(id);
        result.resource = predicted;
        GoldPair {
            input_id: id.into(),
            gold,
            predicted: result,
        }
    }

    #[test]
    fn occurrence_logic() {
        let oral = CodeableConcept::text("PO").with_coding(Coding::new(SNOMED, "26643006", "Oral route"));
        let mut with_route = statement(None, &[]);
        with_route.dosage.push(Dosage {
            route: Some(oral),
            ..Dosage::default()
        });
        let without = statement(None, &[]);
        let c = compare_element(Some(&with_route), Some(&with_route), Element::Route);
        assert_eq!(c.tp_exact, 1);
        let c = compare_element(Some(&with_route), Some(&without), Element::Route);
        assert_eq!(c.false_positives, 1);
        let c = compare_element(Some(&without), Some(&without), Element::Route);
        assert_eq!(c, Counts::default());
    }

    #[test]
    fn reason_list_partial_match() {
        let c = compare_element(
            Some(&statement(None, &["pain"])),
            Some(&statement(None, &["pain", "fever"])),
            Element::Reason,
        );
        assert_eq!(
            c,
            Counts {
                tp_exact: 1,
                tp_inexact: 0,
                false_positives: 0,
                false_negatives: 1
            }
        );
    }

    #[test]
    fn two_thirds() {
        let m = ElementMetrics::from_counts(
            Element::Route,
            Counts {
                tp_exact: 2,
                tp_inexact: 0,
                false_positives: 1,
                false_negatives: 1,
            },
            3,
            3,
        );
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_and_empty_prediction() {
        let gold = statement(Some("PO"), &["pain"]);
        let perfect = compute_metrics(&[pair("1", Some(gold.clone()), gold.clone())]).unwrap();
        for m in &perfect.per_element {
            assert_eq!(
                (m.exact_match_rate, m.precision, m.recall, m.f1),
                (1.0, 1.0, 1.0, 1.0),
                "{}",
                m.element
            );
        }
        assert_eq!(perfect.whole_resource_exact_rate, 1.0);
        let empty = compute_metrics(&[pair("1", None, gold)]).unwrap();
        for element in [Element::MedicationCode, Element::Route, Element::Reason] {
            assert_eq!(empty.element(element).recall, 0.0);
        }
        assert_eq!(empty.whole_resource_exact_rate, 0.0);
    }

    #[test]
    fn exact_rate_nine_of_ten() {
        let gold = statement(Some("PO"), &[]);
        let pairs: Vec<GoldPair> = (0..10)
            .map(|i| {
                let predicted = if i == 0 {
                    statement(Some("IV"), &[])
                } else {
                    gold.clone()
                };
                pair(&i.to_string(), Some(predicted), gold.clone())
            })
            .collect();
        let report = compute_metrics(&pairs).unwrap();
        assert!((report.element(Element::Route).exact_match_rate - 0.9).abs() < 1e-12);
        assert_eq!(report.element(Element::Route).true_positives, 10);
    }

    #[test]
    fn empty_corpus_and_id_mismatch() {
        assert_eq!(compute_metrics(&[]), Err(EvalError::EmptyCorpus));
        let mut p = pair("1", None, statement(None, &[]));
        p.predicted.input_id = "2".into();
        assert!(matches!(compute_metrics(&[p]), Err(EvalError::IdMismatch { .. })));
    }

    #[test]
    fn renders() {
        let gold = statement(None, &[]);
        let report = compute_metrics(&[pair("1", Some(gold.clone()), gold)]).unwrap();
        let table = render_report(&report, ReportFormat::Table);
        let route_row = table.lines().find(|l| l.starts_with("route ")).unwrap();
        assert!(route_row.contains("0 (0.0%)"));
        assert_eq!(route_row.matches("1.000").count(), 4);
        let json = render_report(&report, ReportFormat::Json);
        assert_eq!(serde_json::from_str::<EvalReport>(&json).unwrap(), report);
        let csv = render_report(&report, ReportFormat::Csv);
        assert_eq!(csv.lines().count(), 9);
    }

    #[test]
    fn join_reports_both_sides() {
        let gold = vec![
            ("a".to_string(), statement(None, &[])),
            ("b".to_string(), statement(None, &[])),
        ];
        let results = vec![ConversionResult::empty("b"), ConversionResult::empty("c")];
        let err = join(gold, results).unwrap_err();
        assert_eq!(err.missing_results, ["a"]);
        assert_eq!(err.unknown_results, ["c"]);
    }
}
