//! Converts free-text medication descriptions into FHIR R5 MedicationStatement
//! resources, validates them against bounded code tables, and scores
//! conversions against gold annotations.
//!
//! Conversion runs through five element conversions (medication, route,
//! schedule, dosage, reason) whose fragments are merged into one resource.
//! Two backends produce fragments: a remote chat-completion model driven by
//! per-element prompts, and a deterministic rule-based sig parser.

pub mod conversion;
pub mod corpus;
pub mod eval;
pub mod model;
pub mod sig;
pub mod terminology;
pub mod validator;
