use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// A model response with no interpretable JSON object. Recorded per element,
/// never raised past the conversion result.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("response is not interpretable as a JSON object: {reason}")]
pub struct FormatFailure {
    pub reason: String,
}

/// Pulls the first complete JSON object out of a model response, skipping
/// code fences and surrounding prose.
pub fn extract_json(response: &str) -> Result<Value, FormatFailure> {
    if response.trim().is_empty() {
        return Err(FormatFailure {
            reason: "empty response".into(),
        });
    }
    let mut last_error = None;
    for (start, _) in response.match_indices('{') {
        let mut values = serde_json::Deserializer::from_str(&response[start..]).into_iter::<Value>();
        match values.next() {
            Some(Ok(value @ Value::Object(_))) => return Ok(value),
            Some(Ok(_)) => {}
            Some(Err(e)) => last_error = Some(e.to_string()),
            None => {}
        }
    }
    Err(FormatFailure {
        reason: match last_error {
            Some(e) => format!("no balanced object parsed ({e})"),
            None => "no JSON object found".into(),
        },
    })
}
