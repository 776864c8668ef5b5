//! MedicationStatement subset: typed model, canonical JSON, structural
//! comparison and fragment assembly.

mod equality;
mod json;
mod merge;
mod types;

pub use equality::{canonical_form, fragments_equal, resources_equal, structural_equals, values_equal};
pub(crate) use json::display_path;
pub use json::{
    document_from_value, document_to_value, fragment_from_value, fragment_to_value, parse, parse_fragment,
    parse_resource, resource_from_value, resource_to_value, serialize, serialize_fragment, serialize_pretty,
    ParseError, ParseNote, Parsed, ShapeKind, RESOURCE_TYPE,
};
pub use merge::{merge_fragments, ElementFragments, MergeError};
pub use types::*;
