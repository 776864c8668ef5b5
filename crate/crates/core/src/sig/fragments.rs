use super::parse::{ParsedSig, SigDose, SigQuantity};
use super::rules::{infer_duration, to_f64, Exact};
use super::{SigParser, AS_NEEDED_CODE};
use crate::model::{
    CodeableConcept, CodeableReference, Dose, ElementFragments, Extras, Fragment, Quantity, Range, TimeUnit, Timing,
    TimingRepeat,
};
use crate::terminology::systems::{GTS, SNOMED};
use crate::terminology::CodeTable;

impl SigParser {
    fn quantity(&self, q: &SigQuantity) -> Quantity {
        let value = to_f64(q.value);
        match q
            .unit_code
            .as_deref()
            .and_then(|code| self.tables.units.lookup_code("UCUM", code))
        {
            Some(entry) => Quantity::ucum(value, entry.display.clone(), entry.code.clone()),
            None => Quantity {
                value,
                unit: q.unit_text.clone(),
                system: None,
                code: None,
                extras: Extras::new(),
            },
        }
    }

    fn concept(table: &CodeTable, scope: &[&str], text: &str) -> CodeableConcept {
        let mut cc = CodeableConcept::text(text);
        if let Some(entry) = table.resolve_text(scope, text) {
            cc.coding.push(entry.to_coding());
        }
        cc
    }

    /// Codes the medication text against the local dictionary, one coding per
    /// system the dictionary covers. Tries the full label first, then the drug name.
    fn medication_concept(&self, sig: &ParsedSig, text: String) -> CodeableConcept {
        let mut cc = CodeableConcept::text(text.clone());
        if let Some(dictionary) = &self.tables.medications {
            for system in dictionary.systems() {
                let entry = dictionary
                    .resolve_text(&[system], &text)
                    .or_else(|| dictionary.resolve_text(&[system], &sig.drug_text));
                if let Some(entry) = entry {
                    cc.coding.push(entry.to_coding());
                }
            }
        }
        cc
    }

    /// Units consumed per administration for duration inference, when it can
    /// be read off the sig without guessing.
    fn per_administration(sig: &ParsedSig) -> Option<Exact> {
        let dispense_is_count = sig.dispense_unit.as_deref().is_none_or(super::parse::is_count_unit);
        match &sig.dose {
            None => dispense_is_count.then(|| Exact::from_integer(1)),
            Some(SigDose::Single(q)) => {
                let same_unit = sig.dispense_unit.is_some() && sig.dispense_unit == q.unit_code;
                (same_unit || (sig.dispense_unit.is_none() && q.is_count())).then_some(q.value)
            }
            Some(SigDose::Range(..)) => None,
        }
    }

    fn timing(&self, sig: &ParsedSig) -> Option<Timing> {
        let code = match &sig.frequency_token {
            Some(token) => Some(token.as_str()),
            None if sig.as_needed => Some(AS_NEEDED_CODE),
            None => None,
        };
        let code_concept = code
            .and_then(|c| self.tables.timing.lookup_code(GTS, c))
            .map(|entry| CodeableConcept::coded(None, vec![entry.to_coding()]));
        let rule = sig.frequency_token.as_deref().and_then(|t| self.rules.get(t));
        let repeat = rule.map(|rule| {
            let mut repeat = TimingRepeat::new(rule.frequency, to_f64(rule.period), rule.period_unit);
            if let Some((value, unit)) = sig.explicit_duration {
                repeat = repeat.with_duration(to_f64(value), unit);
            } else if !sig.as_needed {
                let inferred = sig
                    .dispense_quantity
                    .zip(Self::per_administration(sig))
                    .and_then(|(dispensed, per)| infer_duration(rule, dispensed, per).ok());
                if let Some(days) = inferred {
                    repeat = repeat.with_duration(to_f64(days), TimeUnit::Day);
                }
            }
            repeat
        });
        let timing = Timing {
            repeat,
            code: code_concept,
            extras: Extras::new(),
        };
        (!timing.is_empty()).then_some(timing)
    }

    /// Turns captured components into the five element fragments. Text that
    /// does not resolve against a table stays text-only.
    pub fn to_fragments(&self, sig: &ParsedSig) -> ElementFragments {
        let label = sig.medication_text();
        let medication = Fragment {
            code: (!label.is_empty()).then(|| self.medication_concept(sig, label)),
            dose_form: sig
                .form_text
                .as_deref()
                .map(|f| Self::concept(&self.tables.forms, &[SNOMED], f)),
            total_volume: sig.strength.as_ref().map(|s| self.quantity(s)),
            ..Fragment::default()
        };
        let route = Fragment {
            route: sig
                .route_text
                .as_deref()
                .map(|r| Self::concept(&self.tables.routes, &[SNOMED], r)),
            ..Fragment::default()
        };
        let schedule = Fragment {
            timing: self.timing(sig),
            ..Fragment::default()
        };
        let dose = Fragment {
            dose: sig.dose.as_ref().map(|d| match d {
                SigDose::Single(q) => Dose::Quantity(self.quantity(q)),
                SigDose::Range(low, high) => Dose::Range(Range {
                    low: self.quantity(low),
                    high: self.quantity(high),
                    extras: Extras::new(),
                }),
            }),
            ..Fragment::default()
        };
        let reason = Fragment {
            reason: sig
                .reason_text
                .as_deref()
                .map(|text| {
                    let concept = match &self.tables.reasons {
                        Some(dictionary) => Self::concept(dictionary, &[], text),
                        None => CodeableConcept::text(text),
                    };
                    vec![CodeableReference::from(concept)]
                })
                .unwrap_or_default(),
            ..Fragment::default()
        };
        ElementFragments {
            medication,
            route,
            schedule,
            dose,
            reason,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terminology::systems::UCUM;

    fn fragments(text: &str) -> ElementFragments {
        let parser = SigParser::bundled();
        parser.to_fragments(&parser.parse_sig(text).unwrap())
    }

    #[test]
    fn strength_becomes_ucum_total_volume() {
        let f = fragments("clonazepam 0.5 mg Tablet PO Q4H for headache");
        let q = f.medication.total_volume.unwrap();
        assert_eq!(q.value, 0.5);
        assert_eq!(q.unit.as_deref(), Some("milligram"));
        assert_eq!(q.system.as_deref(), Some(UCUM));
        assert_eq!(q.code.as_deref(), Some("mg"));
        let form = f.medication.dose_form.unwrap();
        assert_eq!(form.text.as_deref(), Some("Tablet"));
        assert_eq!(form.coding[0].code, "385055001");
    }

    #[test]
    fn q4h_repeat() {
        let f = fragments("clonazepam 0.5 mg Tablet PO Q4H for headache");
        let timing = f.schedule.timing.unwrap();
        assert_eq!(timing.repeat, Some(TimingRepeat::new(1, 4.0, TimeUnit::Hour)));
        assert_eq!(timing.code.unwrap().coding[0].code, "Q4H");
    }

    #[test]
    fn dose_range() {
        let f = fragments("acetaminophen 325 mg tablet take 1-2 tablets PO Q6H");
        match f.dose.dose.unwrap() {
            Dose::Range(r) => {
                assert_eq!(r.low, Quantity::ucum(1.0, "tablet", "{tablet}"));
                assert_eq!(r.high, Quantity::ucum(2.0, "tablet", "{tablet}"));
            }
            other => panic!("expected range, got {other:?}"),
        }
    }

    #[test]
    fn tid_dispense_thirty_infers_ten_days() {
        let f = fragments("cephalexin 500 mg capsule PO TID, dispense 30 capsules");
        let repeat = f.schedule.timing.unwrap().repeat.unwrap();
        assert_eq!(repeat.duration, Some((10.0, "d".to_string())));
    }

    #[test]
    fn prn_alone_has_code_only_and_no_inference() {
        let f = fragments("ondansetron 4 mg tablet PO PRN for nausea dispense 10");
        let timing = f.schedule.timing.unwrap();
        assert!(timing.repeat.is_none());
        assert_eq!(timing.code.unwrap().coding[0].code, "PRN");
        let f = fragments("oxycodone 5 mg tablet PO Q4H PRN dispense 12");
        let repeat = f.schedule.timing.unwrap().repeat.unwrap();
        assert_eq!(repeat.duration, None);
    }

    #[test]
    fn medication_dictionary_codes_all_systems() {
        let dictionary = CodeTable::parse(include_str!("../../data/dictionaries/medications.csv")).unwrap();
        let parser = SigParser::new(
            crate::terminology::TableSet::bundled().with_medications(dictionary),
            super::super::RuleTable::bundled(),
        );
        let f = parser.to_fragments(&parser.parse_sig("clonazepam 0.5 mg Tablet PO Q4H").unwrap());
        let code = f.medication.code.unwrap();
        let mut codes: Vec<&str> = code.coding.iter().map(|c| c.code.as_str()).collect();
        codes.sort();
        assert_eq!(codes, ["197527", "322897008", "51079088120"]);
    }
}
