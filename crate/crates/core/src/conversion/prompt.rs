use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use super::kind::{ElementKind, PerKind};
use crate::model::parse_fragment;
use crate::terminology::{CodeTable, TableSet};

/// Section markers of a layout file, in the order they must appear.
pub const MARKERS: [&str; 5] = [
    "{{INSTRUCTIONS}}",
    "{{TEMPLATE}}",
    "{{EXAMPLES}}",
    "{{CODELIST}}",
    "{{INPUT}}",
];

/// Heading written above each rendered section, in marker order.
pub const SECTION_HEADINGS: [&str; 5] = [
    "## Instructions",
    "## Output template",
    "## Examples",
    "## Code list",
    "## Input",
];

/// Word that must appear in every instruction block.
pub const DIRECTIVE: &str = "MUST";

const BUNDLED_LAYOUT: &str = include_str!("../../data/prompts/layout.txt");

fn bundled_source(kind: ElementKind) -> &'static str {
    match kind {
        ElementKind::Medication => include_str!("../../data/prompts/medication.toml"),
        ElementKind::Route => include_str!("../../data/prompts/route.toml"),
        ElementKind::Schedule => include_str!("../../data/prompts/schedule.toml"),
        ElementKind::Dosage => include_str!("../../data/prompts/dosage.toml"),
        ElementKind::Reason => include_str!("../../data/prompts/reason.toml"),
    }
}

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("{file}: {message}")]
    Toml { file: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{kind} prompt has {count} examples; 4 or 5 are required")]
    ExampleCount { kind: ElementKind, count: usize },
    #[error("{kind} prompt instructions lack the directive `MUST`")]
    MissingDirective { kind: ElementKind },
    #[error("{kind} prompt names unknown code table `{name}` (expected routes, forms, timing or units)")]
    UnknownCodeTable { kind: ElementKind, name: String },
    #[error("{kind} prompt {}", if *.expected { "needs a code list" } else { "must not carry a code list" })]
    CodeList { kind: ElementKind, expected: bool },
    #[error("{kind} prompt example {index} output is not a valid fragment: {message}")]
    InvalidExample {
        kind: ElementKind,
        index: usize,
        message: String,
    },
    #[error("layout: {0}")]
    Layout(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct Example {
    pub input: String,
    pub output: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    #[serde(default)]
    codes: Vec<String>,
    instructions: String,
    template: String,
    examples: Vec<Example>,
}

/// Everything needed to render one element prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSpec {
    pub kind: ElementKind,
    pub instructions: String,
    pub output_template: String,
    pub examples: Vec<Example>,
    /// Rendered table rows; present exactly for the kinds that code directly.
    pub code_list: Option<String>,
    layout: String,
}

/// Kinds whose fragments carry codes from a bounded table.
pub fn codes_directly(kind: ElementKind) -> bool {
    kind != ElementKind::Reason
}

fn check_layout(layout: &str) -> Result<(), PromptError> {
    let mut last = 0;
    for marker in MARKERS {
        let count = layout.matches(marker).count();
        if count != 1 {
            return Err(PromptError::Layout(format!(
                "{marker} appears {count} times; expected once"
            )));
        }
        let at = layout.find(marker).unwrap_or_default();
        if at < last {
            return Err(PromptError::Layout(format!("{marker} is out of order")));
        }
        last = at;
    }
    let input = MARKERS[4];
    let tail = &layout[layout.find(input).unwrap_or_default() + input.len()..];
    if !tail.trim().is_empty() {
        return Err(PromptError::Layout(format!(
            "{input} must be the last thing in the layout"
        )));
    }
    Ok(())
}

fn table_by_name<'a>(tables: &'a TableSet, name: &str) -> Option<&'a CodeTable> {
    match name {
        "routes" => Some(&tables.routes),
        "forms" => Some(&tables.forms),
        "timing" => Some(&tables.timing),
        "units" => Some(&tables.units),
        _ => None,
    }
}

/// One `system | code | display` row per entry, preceded by a header row.
pub fn render_code_list(tables: &[&CodeTable]) -> String {
    let mut out = String::from("system | code | display");
    for table in tables {
        for entry in table.entries() {
            out.push_str(&format!("\n{} | {} | {}", entry.system, entry.code, entry.display));
        }
    }
    out
}

impl PromptSpec {
    /// Builds a spec from its TOML source and a layout, rendering the code
    /// list from `tables`.
    pub fn from_toml(kind: ElementKind, source: &str, layout: &str, tables: &TableSet) -> Result<Self, PromptError> {
        check_layout(layout)?;
        let file: SpecFile = toml::from_str(source).map_err(|e| PromptError::Toml {
            file: format!("{kind}.toml"),
            message: e.to_string(),
        })?;
        if !(4..=5).contains(&file.examples.len()) {
            return Err(PromptError::ExampleCount {
                kind,
                count: file.examples.len(),
            });
        }
        if !file.instructions.contains(DIRECTIVE) {
            return Err(PromptError::MissingDirective { kind });
        }
        if file.codes.is_empty() == codes_directly(kind) {
            return Err(PromptError::CodeList {
                kind,
                expected: codes_directly(kind),
            });
        }
        for (index, example) in file.examples.iter().enumerate() {
            parse_fragment(&example.output).map_err(|e| PromptError::InvalidExample {
                kind,
                index: index + 1,
                message: e.to_string(),
            })?;
        }
        let code_tables = file
            .codes
            .iter()
            .map(|name| {
                table_by_name(tables, name).ok_or_else(|| PromptError::UnknownCodeTable {
                    kind,
                    name: name.clone(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PromptSpec {
            kind,
            instructions: file.instructions.trim().to_string(),
            output_template: file.template.trim().to_string(),
            examples: file.examples,
            code_list: (!code_tables.is_empty()).then(|| render_code_list(&code_tables)),
            layout: layout.to_string(),
        })
    }
}

/// Renders the prompt: instructions, output template, examples, code list,
/// then the input verbatim at the end.
pub fn build_prompt(spec: &PromptSpec, input: &str) -> String {
    let examples = spec
        .examples
        .iter()
        .enumerate()
        .map(|(i, e)| format!("Example {}\nInput: {}\nOutput: {}", i + 1, e.input, e.output))
        .collect::<Vec<_>>()
        .join("\n\n");
    let sections = [
        Some(spec.instructions.as_str()),
        Some(spec.output_template.as_str()),
        Some(examples.as_str()),
        spec.code_list.as_deref(),
    ];
    let input_at = spec.layout.find(MARKERS[4]).unwrap_or(spec.layout.len());
    let mut head = spec.layout[..input_at].to_string();
    for ((marker, heading), body) in MARKERS.iter().zip(SECTION_HEADINGS).zip(sections) {
        let block = body.map(|b| format!("{heading}\n{b}")).unwrap_or_default();
        head = head.replacen(marker, &block, 1);
    }
    // Drop the blank run an omitted section leaves behind.
    while head.contains("\n\n\n") {
        head = head.replace("\n\n\n", "\n\n");
    }
    let mut prompt = head.trim_start().to_string();
    if !prompt.is_empty() && !prompt.ends_with("\n\n") {
        prompt.truncate(prompt.trim_end().len());
        prompt.push_str("\n\n");
    }
    prompt.push_str(SECTION_HEADINGS[4]);
    prompt.push('\n');
    prompt.push_str(input);
    prompt
}

/// One prompt spec per element kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptLibrary {
    specs: PerKind<PromptSpec>,
}

impl PromptLibrary {
    pub fn bundled(tables: &TableSet) -> Result<Self, PromptError> {
        let mut specs = Vec::new();
        for kind in ElementKind::ALL {
            specs.push(PromptSpec::from_toml(
                kind,
                bundled_source(kind),
                BUNDLED_LAYOUT,
                tables,
            )?);
        }
        Ok(Self::from_specs(specs))
    }

    /// Reads `layout.txt` and `<kind>.toml` for every kind from `dir`.
    pub fn load_dir(dir: impl AsRef<Path>, tables: &TableSet) -> Result<Self, PromptError> {
        let dir = dir.as_ref();
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|source| PromptError::Io {
                path: path.display().to_string(),
                source,
            })
        };
        let layout = read("layout.txt")?;
        let mut specs = Vec::new();
        for kind in ElementKind::ALL {
            let source = read(&format!("{kind}.toml"))?;
            specs.push(PromptSpec::from_toml(kind, &source, &layout, tables)?);
        }
        Ok(Self::from_specs(specs))
    }

    fn from_specs(specs: Vec<PromptSpec>) -> Self {
        let mut specs = specs.into_iter();
        let specs = PerKind::from_fn(|_| specs.next().expect("one spec per kind"));
        PromptLibrary { specs }
    }

    pub fn get(&self, kind: ElementKind) -> &PromptSpec {
        self.specs.get(kind)
    }

    pub fn render(&self, kind: ElementKind, input: &str) -> String {
        build_prompt(self.get(kind), input)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn library() -> PromptLibrary {
        PromptLibrary::bundled(&TableSet::bundled()).unwrap()
    }

    fn code_rows(prompt: &str) -> usize {
        let start = prompt.find(SECTION_HEADINGS[3]).unwrap();
        let end = prompt.find(SECTION_HEADINGS[4]).unwrap();
        prompt[start..end]
            .lines()
            .filter(|l| l.matches(" | ").count() == 2)
            .count()
            - 1
    }

    #[test]
    fn route_prompt_ends_with_input_and_lists_routes() {
        let prompt = library().render(ElementKind::Route, "take PO daily");
        assert!(prompt.ends_with("take PO daily"));
        assert_eq!(code_rows(&prompt), 15);
        assert!(prompt.contains("26643006 | Oral route"));
    }

    #[test]
    fn sections_in_order() {
        let lib = library();
        for kind in ElementKind::ALL {
            let prompt = lib.render(kind, "x");
            let positions: Vec<Option<usize>> = SECTION_HEADINGS.iter().map(|h| prompt.find(h)).collect();
            assert_eq!(positions[3].is_some(), codes_directly(kind), "{kind}");
            let present: Vec<usize> = positions.into_iter().flatten().collect();
            assert!(present.windows(2).all(|w| w[0] < w[1]), "{kind}");
            assert!(prompt.contains(DIRECTIVE));
        }
    }

    #[test]
    fn empty_input_and_determinism() {
        let lib = library();
        let prompt = lib.render(ElementKind::Medication, "");
        assert!(prompt.ends_with("## Input\n"));
        assert_eq!(prompt, lib.render(ElementKind::Medication, ""));
    }

    #[test]
    fn medication_lists_forms_and_units() {
        let prompt = library().render(ElementKind::Medication, "x");
        assert_eq!(code_rows(&prompt), 26 + 16);
    }

    #[test]
    fn rejects_bad_specs() {
        let tables = TableSet::bundled();
        let few = "codes = [\"routes\"]\ninstructions = \"You MUST\"\ntemplate = \"{}\"\n[[examples]]\ninput = \"a\"\noutput = \"{}\"\n";
        assert!(matches!(
            PromptSpec::from_toml(ElementKind::Route, few, BUNDLED_LAYOUT, &tables),
            Err(PromptError::ExampleCount { count: 1, .. })
        ));
        let source = bundled_source(ElementKind::Route).replace("MUST", "should");
        assert!(matches!(
            PromptSpec::from_toml(ElementKind::Route, &source, BUNDLED_LAYOUT, &tables),
            Err(PromptError::MissingDirective { .. })
        ));
        let swapped = "{{TEMPLATE}}\n{{INSTRUCTIONS}}\n{{EXAMPLES}}\n{{CODELIST}}\n{{INPUT}}";
        assert!(matches!(
            PromptSpec::from_toml(ElementKind::Route, bundled_source(ElementKind::Route), swapped, &tables),
            Err(PromptError::Layout(_))
        ));
    }
}
