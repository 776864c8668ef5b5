use super::kind::{ElementKind, PerKind};
use super::result::{assemble, ConversionResult};
use crate::model::serialize_fragment;
use crate::sig::SigParser;

/// Answers element requests with the rule-based sig parser. Deterministic
/// and offline; the prompt text is ignored.
#[derive(Debug, Clone)]
pub struct RulesBackend {
    parser: SigParser,
}

impl Default for RulesBackend {
    fn default() -> Self {
        Self::new(SigParser::bundled().clone())
    }
}

impl RulesBackend {
    pub fn new(parser: SigParser) -> Self {
        RulesBackend { parser }
    }

    pub fn parser(&self) -> &SigParser {
        &self.parser
    }

    /// The fragment JSON the backend returns for one element of `input`.
    pub fn respond(&self, kind: ElementKind, input: &str) -> String {
        let Ok(sig) = self.parser.parse_sig(input) else {
            return "{}".to_string();
        };
        let fragments = self.parser.to_fragments(&sig);
        let fragment = match kind {
            ElementKind::Medication => &fragments.medication,
            ElementKind::Route => &fragments.route,
            ElementKind::Schedule => &fragments.schedule,
            ElementKind::Dosage => &fragments.dose,
            ElementKind::Reason => &fragments.reason,
        };
        serialize_fragment(fragment)
    }

    /// Converts one input without a runtime.
    pub fn convert(&self, input_id: &str, text: &str) -> ConversionResult {
        let outcomes = PerKind::from_fn(|kind| Ok(self.respond(kind, text)));
        assemble(input_id, text, outcomes, &self.parser.tables)
    }
}
