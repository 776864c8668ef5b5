use thiserror::Error;

use super::types::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MergeError {
    #[error("slot `{slot}` is filled by both the {first} and {second} fragments")]
    Conflict {
        slot: &'static str,
        first: &'static str,
        second: &'static str,
    },
    #[error("no fragment supplied medication.code")]
    MissingMedication,
}

/// The five element fragments of one input, in element order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ElementFragments {
    pub medication: Fragment,
    pub route: Fragment,
    pub schedule: Fragment,
    pub dose: Fragment,
    pub reason: Fragment,
}

impl ElementFragments {
    fn named(&self) -> [(&'static str, &Fragment); 5] {
        [
            ("medication", &self.medication),
            ("route", &self.route),
            ("schedule", &self.schedule),
            ("dose", &self.dose),
            ("reason", &self.reason),
        ]
    }
}

/// Fills one single-valued slot, rejecting a second fragment that also fills it.
fn take<T: Clone>(
    slot: &'static str,
    fragments: &[(&'static str, &Fragment)],
    get: impl Fn(&Fragment) -> Option<&T>,
) -> Result<Option<T>, MergeError> {
    let mut found: Option<(&'static str, &T)> = None;
    for (name, fragment) in fragments {
        if let Some(value) = get(fragment) {
            if let Some((first, _)) = found {
                return Err(MergeError::Conflict {
                    slot,
                    first,
                    second: name,
                });
            }
            found = Some((name, value));
        }
    }
    Ok(found.map(|(_, v)| v.clone()))
}

/// Assembles one resource from the element fragments. Route, timing and dose
/// share a single dosage entry; reasons from every fragment are concatenated
/// in element order.
pub fn merge_fragments(fragments: &ElementFragments, source_text: &str) -> Result<MedicationStatement, MergeError> {
    let named = fragments.named();

    let code = take("code", &named, |f| f.code.as_ref())?;
    let dose_form = take("doseForm", &named, |f| f.dose_form.as_ref())?;
    let total_volume = take("totalVolume", &named, |f| f.total_volume.as_ref())?;
    let route = take("route", &named, |f| f.route.as_ref())?;
    let timing = take("timing", &named, |f| f.timing.as_ref())?;
    let dose = take("dose", &named, |f| f.dose.as_ref())?;

    let mut extras = Extras::new();
    for (name, fragment) in &named {
        for (key, value) in &fragment.extras {
            if extras.contains_key(key) {
                let first = named
                    .iter()
                    .find(|(_, f)| f.extras.contains_key(key))
                    .map_or("unknown", |(n, _)| n);
                return Err(MergeError::Conflict {
                    slot: "extension key",
                    first,
                    second: name,
                });
            }
            extras.insert(key.clone(), value.clone());
        }
    }

    let code = code.ok_or(MergeError::MissingMedication)?;
    let mut statement = MedicationStatement::new(MedicationDetail {
        code,
        dose_form,
        total_volume,
        extras: Extras::new(),
    });
    statement.reason = named.iter().flat_map(|(_, f)| f.reason.iter().cloned()).collect();
    let dosage = Dosage {
        route,
        timing,
        dose,
        dose_extras: Extras::new(),
        extras: Extras::new(),
    };
    if !dosage.is_empty() {
        statement.dosage.push(dosage);
    }
    if !source_text.is_empty() {
        statement.source_text = Some(source_text.to_string());
    }
    statement.extras = extras;
    Ok(statement)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn med(text: &str) -> Fragment {
        Fragment {
            code: Some(CodeableConcept::text(text)),
            ..Fragment::default()
        }
    }

    #[test]
    fn minimal_resource() {
        let fragments = ElementFragments {
            medication: med("aspirin"),
            ..ElementFragments::default()
        };
        let r = merge_fragments(&fragments, "aspirin").unwrap();
        assert!(r.dosage.is_empty());
        assert!(r.reason.is_empty());
        assert_eq!(r.source_text.as_deref(), Some("aspirin"));
    }

    #[test]
    fn slot_filled_twice_conflicts() {
        let fragments = ElementFragments {
            medication: med("aspirin"),
            route: Fragment {
                route: Some(CodeableConcept::text("PO")),
                ..Fragment::default()
            },
            schedule: Fragment {
                route: Some(CodeableConcept::text("IV")),
                ..Fragment::default()
            },
            ..ElementFragments::default()
        };
        assert_eq!(
            merge_fragments(&fragments, ""),
            Err(MergeError::Conflict {
                slot: "route",
                first: "route",
                second: "schedule"
            })
        );
    }

    #[test]
    fn quantity_and_range_from_different_fragments_conflict() {
        let q = Quantity::simple(1.0, "tablet");
        let fragments = ElementFragments {
            medication: med("x"),
            dose: Fragment {
                dose: Some(Dose::Quantity(q.clone())),
                ..Fragment::default()
            },
            schedule: Fragment {
                dose: Some(Dose::Range(Range {
                    low: q.clone(),
                    high: q,
                    extras: Extras::new(),
                })),
                ..Fragment::default()
            },
            ..ElementFragments::default()
        };
        assert!(matches!(
            merge_fragments(&fragments, ""),
            Err(MergeError::Conflict { slot: "dose", .. })
        ));
    }

    #[test]
    fn missing_medication() {
        let fragments = ElementFragments {
            route: Fragment {
                route: Some(CodeableConcept::text("PO")),
                ..Fragment::default()
            },
            ..ElementFragments::default()
        };
        assert_eq!(merge_fragments(&fragments, "PO"), Err(MergeError::MissingMedication));
    }

    #[test]
    fn multiple_reasons_kept_in_order() {
        let fragments = ElementFragments {
            medication: med("x"),
            reason: Fragment {
                reason: vec![
                    CodeableConcept::text("pain").into(),
                    CodeableConcept::text("fever").into(),
                ],
                ..Fragment::default()
            },
            ..ElementFragments::default()
        };
        let r = merge_fragments(&fragments, "").unwrap();
        assert_eq!(r.reason.len(), 2);
        assert_eq!(r.reason[1].concept.text.as_deref(), Some("fever"));
    }
}
