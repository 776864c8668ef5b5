use fhir_sculptor::conversion::{extract_json, ConversionResult, RulesBackend};
use fhir_sculptor::corpus::synthetic_corpus;
use fhir_sculptor::eval::{compute_metrics, Element, GoldPair};
use fhir_sculptor::model::{
    resource_from_value, resource_to_value, resources_equal, serialize, values_equal, MedicationStatement,
};
use fhir_sculptor::sig::{infer_duration, parse_sig, Exact, RuleTable};
use fhir_sculptor::terminology::{CodeEntry, TableSet};
use fhir_sculptor::validator::validate_value;
use proptest::prelude::*;
use proptest::sample::select;
use serde_json::{json, Map, Value};

const UCUM: &str = "http://unitsofmeasure.org";

fn entries(pick: fn(&TableSet) -> &fhir_sculptor::terminology::CodeTable) -> Vec<CodeEntry> {
    pick(&TableSet::bundled()).entries().to_vec()
}

fn concept(entry: CodeEntry, text: Option<String>) -> Value {
    let mut m = Map::new();
    if let Some(t) = text {
        m.insert("text".into(), t.into());
    }
    m.insert(
        "coding".into(),
        json!([{"system": entry.system, "code": entry.code, "display": entry.display}]),
    );
    Value::Object(m)
}

/// Decimal values that survive a text round trip: up to 3 fractional digits.
fn decimal() -> impl Strategy<Value = f64> {
    (0u32..100_000).prop_map(|n| f64::from(n) / 1000.0)
}

fn quantity() -> impl Strategy<Value = Value> {
    (decimal(), select(entries(|t| &t.units)))
        .prop_map(|(value, unit)| json!({"value": value, "unit": unit.display, "system": UCUM, "code": unit.code}))
}

fn dose() -> impl Strategy<Value = Value> {
    prop_oneof![
        quantity().prop_map(|q| json!({"doseQuantity": q})),
        (1u32..5, 1u32..5, select(entries(|t| &t.units))).prop_map(|(low, extra, unit)| {
            let q = |v: u32| json!({"value": v, "unit": unit.display, "system": UCUM, "code": unit.code});
            json!({"doseRange": {"low": q(low), "high": q(low + extra)}})
        }),
    ]
}

fn repeat() -> impl Strategy<Value = Value> {
    (
        1u32..5,
        select(vec![0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 12.0]),
        select(vec!["h", "d", "wk"]),
        proptest::option::of((1u32..90, select(vec!["d", "wk", "mo"]))),
    )
        .prop_map(|(frequency, period, unit, duration)| {
            let mut r = json!({"frequency": frequency, "period": period, "periodUnit": unit});
            if let Some((d, du)) = duration {
                r["duration"] = json!(d);
                r["durationUnit"] = json!(du);
            }
            r
        })
}

fn words() -> impl Strategy<Value = String> {
    "[a-z]{3,9}( [a-z]{2,8}){0,2}"
}

/// Well-formed resources built from the bundled code tables.
fn resource() -> impl Strategy<Value = Value> {
    let medication = (
        words(),
        proptest::option::of(select(entries(|t| &t.forms))),
        proptest::option::of(quantity()),
    )
        .prop_map(|(text, form, volume)| {
            let mut m = json!({"code": {"text": text}});
            if let Some(f) = form {
                m["doseForm"] = concept(f, None);
            }
            if let Some(v) = volume {
                m["totalVolume"] = v;
            }
            m
        });
    let dosage = (
        proptest::option::of((select(entries(|t| &t.routes)), words())),
        proptest::option::of(repeat()),
        proptest::option::of(select(entries(|t| &t.timing))),
        proptest::option::of(dose()),
    )
        .prop_map(|(route, repeat, code, dose)| {
            let mut d = Map::new();
            if let Some((r, text)) = route {
                d.insert("route".into(), concept(r, Some(text)));
            }
            let mut timing = Map::new();
            if let Some(r) = repeat {
                timing.insert("repeat".into(), r);
            }
            if let Some(c) = code {
                timing.insert("code".into(), concept(c, None));
            }
            if !timing.is_empty() {
                d.insert("timing".into(), Value::Object(timing));
            }
            if let Some(dose) = dose {
                d.insert("doseAndRate".into(), json!([dose]));
            }
            d
        });
    (
        medication,
        proptest::collection::vec(words(), 0..3),
        dosage,
        proptest::option::of(words()),
    )
        .prop_map(|(medication, reasons, dosage, note)| {
            let mut r = json!({"resourceType": "MedicationStatement", "status": "recorded", "medication": medication});
            if !reasons.is_empty() {
                r["reason"] = reasons.into_iter().map(|t| json!({"concept": {"text": t}})).collect();
            }
            if !dosage.is_empty() {
                r["dosage"] = json!([dosage]);
            }
            if let Some(n) = note {
                r["note"] = json!([{"text": n}]);
            }
            r
        })
}

/// The same JSON with every object's keys in reverse order.
fn reorder(v: &Value) -> Value {
    match v {
        Value::Object(m) => Value::Object(m.iter().rev().map(|(k, v)| (k.clone(), reorder(v))).collect()),
        Value::Array(a) => Value::Array(a.iter().map(reorder).collect()),
        other => other.clone(),
    }
}

fn parsed(v: &Value) -> MedicationStatement {
    resource_from_value(v).expect("generated resource parses").value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn serialize_parse_round_trip(doc in resource()) {
        let r = parsed(&doc);
        let text = serialize(&r);
        let again = fhir_sculptor::model::parse_resource(&text).unwrap().value;
        prop_assert!(resources_equal(&r, &again));
        prop_assert_eq!(serialize(&again), text);
        prop_assert!(values_equal(&resource_to_value(&r), &doc));
    }

    #[test]
    fn generated_resources_validate(doc in resource()) {
        let report = validate_value(&doc, &TableSet::bundled());
        prop_assert!(report.valid, "{}", report.to_text());
    }

    #[test]
    fn structural_equality_ignores_key_order(a in resource(), b in resource()) {
        let reordered = reorder(&a);
        prop_assert!(values_equal(&a, &a));
        prop_assert!(values_equal(&a, &reordered));
        prop_assert!(values_equal(&reordered, &a));
        prop_assert_eq!(values_equal(&a, &b), values_equal(&b, &a));
        prop_assert_eq!(values_equal(&a, &b), resources_equal(&parsed(&a), &parsed(&b)));
    }

    #[test]
    fn extraction_never_panics(text in ".{0,200}") {
        let _ = extract_json(&text);
    }

    #[test]
    fn extraction_finds_embedded_objects(doc in resource(), prefix in "[a-zA-Z .:\n]{0,40}", suffix in "[a-zA-Z .\n]{0,40}") {
        let clean = serde_json::to_string(&doc).unwrap();
        prop_assert_eq!(extract_json(&clean).unwrap(), doc.clone());
        let wrapped = format!("{prefix}\n```json\n{clean}\n```\n{suffix}");
        prop_assert_eq!(extract_json(&wrapped).unwrap(), doc);
    }

    #[test]
    fn duration_times_consumption_is_the_dispensed_amount(
        rule in select(RuleTable::bundled().rules().to_vec()),
        dispensed in 1i64..5000,
        per_admin in (1i64..20, 1i64..5),
    ) {
        let per_admin = Exact::new(per_admin.0, per_admin.1);
        let days = infer_duration(&rule, Exact::from_integer(dispensed), per_admin).unwrap();
        prop_assert_eq!(days * rule.daily_events * per_admin, Exact::from_integer(dispensed));
    }

    #[test]
    fn sig_parser_never_panics(text in ".{0,120}") {
        let _ = parse_sig(&text);
        let _ = RulesBackend::default().convert("p", &text);
    }

    #[test]
    fn parsed_phrases_come_from_the_input(record in select(synthetic_corpus()), noise in "[a-z]{0,6}") {
        let text = format!("{} {noise}", record.text);
        let sig = parse_sig(&text).unwrap();
        let lower = text.to_lowercase();
        for phrase in [&sig.route_text, &sig.form_text, &sig.reason_text, &sig.frequency_text].into_iter().flatten() {
            prop_assert!(lower.contains(&phrase.to_lowercase()), "{phrase:?} not in {text:?}");
        }
    }

    #[test]
    fn metrics_are_permutation_invariant_and_bounded(
        picks in proptest::collection::vec((0usize..50, 0usize..50, any::<bool>()), 1..12),
        seed in any::<u64>(),
    ) {
        let corpus = synthetic_corpus();
        let backend = RulesBackend::default();
        let pairs: Vec<GoldPair> = picks
            .iter()
            .enumerate()
            .map(|(i, &(g, p, missing))| {
                let id = format!("p{i}");
                let mut predicted = backend.convert(&id, &corpus[p].text);
                if missing {
                    predicted = ConversionResult::empty(id.clone());
                }
                GoldPair { input_id: id, gold: corpus[g].gold_resource().unwrap(), predicted }
            })
            .collect();
        let report = compute_metrics(&pairs).unwrap();
        let mut shuffled = pairs.clone();
        let n = shuffled.len();
        for i in 0..n {
            shuffled.swap(i, (seed as usize).wrapping_add(i * 7) % n);
        }
        prop_assert_eq!(&compute_metrics(&shuffled).unwrap(), &report);
        for element in Element::ALL {
            let m = report.element(element);
            prop_assert!(m.exact_matches <= m.true_positives);
            prop_assert!(m.true_positives <= m.gold_present);
            for rate in [m.exact_match_rate, m.precision, m.recall, m.f1] {
                prop_assert!((0.0..=1.0).contains(&rate));
            }
        }
        prop_assert!((0.0..=1.0).contains(&report.format_conformity_rate));
    }
}

#[test]
fn empty_prediction_has_zero_recall_where_gold_is_present() {
    let pairs: Vec<GoldPair> = synthetic_corpus()
        .into_iter()
        .map(|r| GoldPair {
            input_id: r.id.clone(),
            gold: r.gold_resource().unwrap(),
            predicted: ConversionResult::empty(r.id),
        })
        .collect();
    let report = compute_metrics(&pairs).unwrap();
    for m in &report.per_element {
        if m.gold_present > 0 {
            assert_eq!(m.recall, 0.0, "{}", m.element);
        }
    }
}
