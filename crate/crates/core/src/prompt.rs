//! Concept expansion into object prompts and font attributes.
//!
//! Remote mode renders the two language-model templates and parses the
//! replies; offline mode reads a small bundled table.

use std::collections::BTreeMap;
use std::path::Path;

use crate::scorer::{RequestKind, Scorer, ScorerError};

/// Font attribute vocabulary accepted from the language model.
pub const FONT_ATTRIBUTES: [&str; 37] = [
    "angular",
    "artistic",
    "attention-grabbing",
    "attractive",
    "bad",
    "boring",
    "calm",
    "capitals",
    "charming",
    "clumsy",
    "complex",
    "cursive",
    "delicate",
    "disorderly",
    "display",
    "dramatic",
    "formal",
    "fresh",
    "friendly",
    "gentle",
    "graceful",
    "happy",
    "italic",
    "legible",
    "modern",
    "monospace",
    "playful",
    "pretentious",
    "serif",
    "sharp",
    "sloppy",
    "soft",
    "strong",
    "technical",
    "thin",
    "warm",
    "wide",
];

pub const FALLBACK_ATTRIBUTES: [&str; 3] = ["legible", "strong", "modern"];

pub const DEFAULT_SUFFIX: &str = "minimal flat 2d vector icon. lineal color. on a white background. trending on artstation";

/// Extra attempts after the first unparseable reply.
pub const REASKS: usize = 2;

const BUNDLED_TABLE: &str = include_str!("../data/concepts.txt");

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("concept is empty")]
    EmptyConcept,
    #[error("unparseable {kind} reply after {attempts} attempts: {raw:?}")]
    Unparseable { kind: RequestKind, attempts: usize, raw: String },
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error("concept table line {line}: {message}")]
    Table { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptExpansion {
    pub concept: String,
    pub objects: [String; 3],
    pub font_attributes: [String; 3],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub morph_prompts: [String; 3],
    pub font_prompt: String,
}

pub fn is_font_attribute(word: &str) -> bool {
    FONT_ATTRIBUTES.contains(&word)
}

pub fn concept_prompt(concept: &str) -> String {
    let example = |c: &str, answer: &str| {
        format!(
            "Concept word: ‘{c}’\n\
             Task: Imagine ‘{c}’ as an art element. Describe the elements you would include to convey {c}, \
             listing exactly three key symbols in a single line.\n\
             Response: {answer}\n"
        )
    };
    format!(
        "You will be given a concept word, and your task is to imagine this word as an art element. \
         Describe the elements you would include to convey the essence of the concept word. \
         Your description should list exactly three key symbols in a single line, \
         formatted like this: symbol1, symbol2, or symbol3.\n\n\
         Examples:\n{}\n{}\n{}\nYour task:\n{}",
        example("freedom", "Wings or open book or flying birds."),
        example("Knowledge", "Open book or lightbulb or owl."),
        example("Egypt", "Pyramids or Ankh or Sphinx."),
        example(concept, ""),
    )
    .trim_end()
    .to_string()
}

pub fn font_attribute_prompt(concept: &str) -> String {
    let vocabulary = FONT_ATTRIBUTES.iter().map(|a| format!("\"{a}\"")).collect::<Vec<_>>().join(", ");
    format!(
        "Given the following font attributes\n({vocabulary})\n\
         Your task is to choose the top 3 attributes that align with an input concept and output them as a list.\n\
         Examples:\n\
         Concept: freedom\n\
         Answer: [\n    \"playful\",\n    \"fresh\",\n    \"modern\"\n]\n\n\
         Concept: Elegance\n\
         Answer: [\n    \"graceful\",\n    \"delicate\",\n    \"formal\"\n]\n\n\
         Concept: {concept}\n\
         Answer:"
    )
}

/// Recover the queried concept from a rendered template.
pub fn concept_from_prompt(kind: RequestKind, prompt: &str) -> Option<String> {
    match kind {
        RequestKind::Concepts => {
            let line = prompt.lines().rev().find(|l| l.starts_with("Concept word:"))?;
            let inner = line.split_once('‘')?.1.rsplit_once('’')?.0;
            Some(inner.to_string())
        }
        RequestKind::FontAttrs => {
            let line = prompt.lines().rev().find(|l| l.starts_with("Concept:"))?;
            Some(line["Concept:".len()..].trim().to_string())
        }
        _ => None,
    }
}

/// Parse "A or B or C." (also "A, B, or C") into three symbols.
pub fn parse_objects(reply: &str) -> Option<[String; 3]> {
    let line = reply.lines().map(str::trim).find(|l| !l.is_empty())?;
    let line = line.strip_prefix("Response:").unwrap_or(line).trim();
    let line = line.trim_end_matches('.').trim();
    let mut items = Vec::new();
    for part in line.split(',') {
        for item in part.split(" or ") {
            let item = item.trim();
            let item = item.strip_prefix("or ").unwrap_or(item).trim();
            if !item.is_empty() {
                items.push(item.to_string());
            }
        }
    }
    items.try_into().ok()
}

/// Parse a bracketed list of three vocabulary attributes.
pub fn parse_attributes(reply: &str) -> Option<[String; 3]> {
    let start = reply.find('[')?;
    let end = start + reply[start..].find(']')?;
    let inner = &reply[start + 1..end];
    let items: Vec<String> = inner
        .split(',')
        .map(|s| s.trim().trim_matches(|c| c == '"' || c == '\'').trim().to_lowercase())
        .filter(|s| !s.is_empty())
        .collect();
    if items.iter().all(|a| is_font_attribute(a)) {
        items.try_into().ok()
    } else {
        None
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct TableEntry {
    objects: Option<[String; 3]>,
    attributes: Option<[String; 3]>,
}

/// Concept lookup table for offline mode.
#[derive(Debug, Clone, Default)]
pub struct OfflineTable {
    entries: BTreeMap<String, TableEntry>,
}

impl OfflineTable {
    /// The table shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_TABLE).expect("bundled concept table is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PromptError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, PromptError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| PromptError::Table {
                line: i + 1,
                message: message.to_string(),
            };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected `concept = objects | attributes`"))?;
            let (objects, attributes) = value.split_once('|').unwrap_or((value, ""));
            let triple = |s: &str| -> Result<Option<[String; 3]>, PromptError> {
                let items: Vec<String> = s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect();
                match items.len() {
                    0 => Ok(None),
                    3 => Ok(Some(items.try_into().unwrap())),
                    _ => Err(err("each side needs exactly three comma-separated items")),
                }
            };
            let attributes = triple(attributes)?;
            if let Some(attrs) = &attributes {
                if let Some(bad) = attrs.iter().find(|a| !is_font_attribute(a)) {
                    return Err(err(&format!("{bad:?} is not a font attribute")));
                }
            }
            entries.insert(
                key.trim().to_lowercase(),
                TableEntry {
                    objects: triple(objects)?,
                    attributes,
                },
            );
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn objects(&self, concept: &str) -> Option<&[String; 3]> {
        self.entries.get(&concept.trim().to_lowercase())?.objects.as_ref()
    }

    pub fn attributes(&self, concept: &str) -> Option<&[String; 3]> {
        self.entries.get(&concept.trim().to_lowercase())?.attributes.as_ref()
    }

    /// Total lookup with fallbacks for anything not in the table.
    pub fn expand(&self, concept: &str) -> ConceptExpansion {
        let c = concept.trim();
        ConceptExpansion {
            concept: c.to_string(),
            objects: self
                .objects(c)
                .cloned()
                .unwrap_or_else(|| [c.to_string(), c.to_string(), c.to_string()]),
            font_attributes: self
                .attributes(c)
                .cloned()
                .unwrap_or_else(|| FALLBACK_ATTRIBUTES.map(str::to_string)),
        }
    }
}

#[derive(Clone, Copy)]
pub enum ExpansionMode<'a> {
    Offline,
    Remote(&'a dyn Scorer),
}

#[derive(Debug, Clone)]
pub struct PromptEngine {
    pub table: OfflineTable,
    pub suffix: String,
}

impl Default for PromptEngine {
    fn default() -> Self {
        Self {
            table: OfflineTable::bundled(),
            suffix: DEFAULT_SUFFIX.to_string(),
        }
    }
}

impl PromptEngine {
    pub fn new(table: OfflineTable, suffix: impl Into<String>) -> Self {
        Self {
            table,
            suffix: suffix.into(),
        }
    }

    pub fn expand_concept(&self, concept: &str, mode: ExpansionMode<'_>) -> Result<ConceptExpansion, PromptError> {
        let concept = concept.trim();
        if concept.is_empty() {
            return Err(PromptError::EmptyConcept);
        }
        match mode {
            ExpansionMode::Offline => Ok(self.table.expand(concept)),
            ExpansionMode::Remote(scorer) => Ok(ConceptExpansion {
                concept: concept.to_string(),
                objects: ask(scorer, RequestKind::Concepts, &concept_prompt(concept), parse_objects)?,
                font_attributes: ask(scorer, RequestKind::FontAttrs, &font_attribute_prompt(concept), parse_attributes)?,
            }),
        }
    }

    pub fn build_prompts(&self, expansion: &ConceptExpansion) -> PromptSet {
        build_prompts(expansion, &self.suffix)
    }
}

fn ask(
    scorer: &dyn Scorer,
    kind: RequestKind,
    prompt: &str,
    parse: fn(&str) -> Option<[String; 3]>,
) -> Result<[String; 3], PromptError> {
    let mut raw = String::new();
    for attempt in 0..=REASKS {
        let strings = scorer.complete(kind, prompt, attempt as u64)?;
        raw = strings.join("\n");
        if let Some(parsed) = parse(&raw) {
            return Ok(parsed);
        }
        log::warn!("unparseable {kind} reply (attempt {}): {raw:?}", attempt + 1);
    }
    Err(PromptError::Unparseable {
        kind,
        attempts: REASKS + 1,
        raw,
    })
}

pub fn morph_prompt(object: &str, suffix: &str) -> String {
    format!("a {object}. {suffix}")
}

pub fn font_prompt(attributes: &[String; 3]) -> String {
    format!("This is a {}, {}, {} font", attributes[0], attributes[1], attributes[2])
}

pub fn build_prompts(expansion: &ConceptExpansion, suffix: &str) -> PromptSet {
    PromptSet {
        morph_prompts: expansion.objects.clone().map(|o| morph_prompt(&o, suffix)),
        font_prompt: font_prompt(&expansion.font_attributes),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_is_sorted_and_unique() {
        assert_eq!(FONT_ATTRIBUTES.len(), 37);
        assert!(FONT_ATTRIBUTES.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn parses_or_lists() {
        assert_eq!(
            parse_objects("Wings or open book or flying birds.").unwrap(),
            ["Wings", "open book", "flying birds"]
        );
        assert_eq!(parse_objects("Response: owl, lamp, or scroll").unwrap(), ["owl", "lamp", "scroll"]);
        assert!(parse_objects("just one thing").is_none());
    }

    #[test]
    fn parses_bracketed_attributes() {
        let reply = "Answer: [\n    \"graceful\",\n    \"delicate\",\n    \"formal\"\n]";
        assert_eq!(parse_attributes(reply).unwrap(), ["graceful", "delicate", "formal"]);
        assert!(parse_attributes("[\"graceful\", \"shiny\", \"formal\"]").is_none());
        assert!(parse_attributes("graceful, delicate, formal").is_none());
    }

    #[test]
    fn templates_carry_the_concept() {
        let p = concept_prompt("ocean");
        assert!(p.ends_with("Response:"));
        assert_eq!(concept_from_prompt(RequestKind::Concepts, &p).as_deref(), Some("ocean"));
        let f = font_attribute_prompt("ocean");
        assert_eq!(concept_from_prompt(RequestKind::FontAttrs, &f).as_deref(), Some("ocean"));
    }

    #[test]
    fn table_rejects_unknown_attribute() {
        assert!(OfflineTable::parse("x = a, b, c | shiny, bold, big").is_err());
        assert!(OfflineTable::parse("x = a, b").is_err());
    }
}
