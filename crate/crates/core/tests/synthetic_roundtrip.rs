use fhir_sculptor::conversion::RulesBackend;
use fhir_sculptor::corpus::synthetic_corpus;
use fhir_sculptor::model::{resources_equal, serialize_pretty};

#[test]
fn every_synthetic_record_converts_to_its_gold() {
    let backend = RulesBackend::default();
    let mut failures = Vec::new();
    for record in synthetic_corpus() {
        let gold = record.gold_resource().unwrap();
        let result = backend.convert(&record.id, &record.text);
        let report = result.validation.as_ref().expect("resource produced");
        assert!(report.valid, "{}: {}", record.id, report.to_text());
        let predicted = result.resource.unwrap();
        if !resources_equal(&predicted, &gold) {
            failures.push(format!(
                "{} `{}`\npredicted {}\ngold {}",
                record.id,
                record.text,
                serialize_pretty(&predicted),
                serialize_pretty(&gold)
            ));
        }
    }
    assert!(
        failures.is_empty(),
        "{} mismatches:\n{}",
        failures.len(),
        failures.join("\n\n")
    );
}
