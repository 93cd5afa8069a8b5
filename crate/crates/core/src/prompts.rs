//! The five annotation prompt templates and their rendering.
//!
//! Template bodies carry two placeholders, `<CONCEPT>` and `<DEFINITION>`.
//! The comment itself is never spliced into the instruction; it travels in
//! [`RenderedPrompt::comment_text`] so the gateway can deliver it as its own
//! message (or append it inline when configured to).

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Comment, Concept, Definitions};

pub const CONCEPT_PLACEHOLDER: &str = "<CONCEPT>";
pub const DEFINITION_PLACEHOLDER: &str = "<DEFINITION>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PromptId {
    P1,
    P2,
    P3,
    P4,
    P5,
}

impl PromptId {
    pub const ALL: [PromptId; 5] = [PromptId::P1, PromptId::P2, PromptId::P3, PromptId::P4, PromptId::P5];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptId::P1 => "P1",
            PromptId::P2 => "P2",
            PromptId::P3 => "P3",
            PromptId::P4 => "P4",
            PromptId::P5 => "P5",
        }
    }

    pub fn output_kind(self) -> OutputKind {
        match self {
            PromptId::P1 => OutputKind::MTurkStyle,
            PromptId::P2 | PromptId::P4 => OutputKind::Binary,
            PromptId::P3 | PromptId::P5 => OutputKind::Probability,
        }
    }

    pub fn wants_explanation(self) -> bool {
        matches!(self, PromptId::P4 | PromptId::P5)
    }

    pub fn is_probability(self) -> bool {
        self.output_kind() == OutputKind::Probability
    }
}

impl fmt::Display for PromptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptId {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "P1" | "1" => Ok(PromptId::P1),
            "P2" | "2" => Ok(PromptId::P2),
            "P3" | "3" => Ok(PromptId::P3),
            "P4" | "4" => Ok(PromptId::P4),
            "P5" | "5" => Ok(PromptId::P5),
            _ => Err(PromptError::UnknownPrompt(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputKind {
    MTurkStyle,
    Binary,
    Probability,
}

/// Prompt-pattern tags attached to each template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PromptPattern {
    OutputAutomatorBinary,
    OutputAutomatorProbability,
    Template,
    ContextManager,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: PromptId,
    pub output_kind: OutputKind,
    pub wants_explanation: bool,
    pub patterns: Vec<PromptPattern>,
    pub body: String,
}

const P1_BODY: &str = "Do you think this comment is <CONCEPT>? A comment is \"<CONCEPT>\" if you perceive that it \"<DEFINITION>.\"\na. Yes\nb. No";

const P2_BODY: &str = "I want you to perform a data annotation task. In your output, I want you to return either yes or no, depending on whether you think the following comment is <CONCEPT>. A comment is \"<CONCEPT>\" if you perceive that it \"<DEFINITION>.\" I want you to only respond with yes or no. Do not provide any other outputs or any explanation for your output.";

const P3_BODY: &str = "I want you to provide a probability score between 0 to 1 where the score represents the probability of the following comment being <CONCEPT>. A comment is \u{201c}<CONCEPT>\u{201d} if you perceive that it \u{201c}<DEFINITION>.\u{201d} A probability of 1 means that the comment is highly likely to be <CONCEPT>. A probability of 0 means that the comment is highly unlikely to be <CONCEPT>. Do not provide any other outputs or any explanation for your output.";

const P4_BODY: &str = "I want you to perform a data annotation task. In your output, I want you to return either yes or no, depending on whether you think the following comment is <CONCEPT>. A comment is \u{201c}<CONCEPT>\u{201d} if you perceive that it \u{201c}<DEFINITION>.\u{201d} I want you to respond with yes or no in the first line and provide an explanation for your output in the second line.";

const P5_BODY: &str = "I want you to provide a probability score between 0 to 1 where the score represents the probability of the following comment being <CONCEPT>. A comment is \u{201c}<CONCEPT>\u{201d} if you perceive that it \u{201c}<DEFINITION>.\u{201d} A probability of 1 means that the comment is highly likely to be <CONCEPT>. A probability of 0 means that the comment is highly unlikely to be <CONCEPT>. I want you to respond with a probabilistic score in the first line and provide an explanation for your score in the second line.";

fn bundled_body(id: PromptId) -> &'static str {
    match id {
        PromptId::P1 => P1_BODY,
        PromptId::P2 => P2_BODY,
        PromptId::P3 => P3_BODY,
        PromptId::P4 => P4_BODY,
        PromptId::P5 => P5_BODY,
    }
}

fn patterns(id: PromptId) -> Vec<PromptPattern> {
    use PromptPattern::*;
    match id {
        PromptId::P1 => vec![ContextManager],
        PromptId::P2 => vec![OutputAutomatorBinary, Template, ContextManager],
        PromptId::P3 => vec![OutputAutomatorProbability, Template, ContextManager],
        PromptId::P4 => vec![OutputAutomatorBinary, Template, ContextManager],
        PromptId::P5 => vec![OutputAutomatorProbability, Template, ContextManager],
    }
}

/// The template set used for rendering: bundled bodies, optionally overridden.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptCatalog {
    templates: BTreeMap<PromptId, PromptTemplate>,
}

impl Default for PromptCatalog {
    fn default() -> Self {
        Self::bundled()
    }
}

impl PromptCatalog {
    pub fn bundled() -> Self {
        let templates = PromptId::ALL
            .into_iter()
            .map(|id| {
                let t = PromptTemplate {
                    id,
                    output_kind: id.output_kind(),
                    wants_explanation: id.wants_explanation(),
                    patterns: patterns(id),
                    body: bundled_body(id).to_string(),
                };
                (id, t)
            })
            .collect();
        PromptCatalog { templates }
    }

    /// Reads `{"P2": "<body>", ...}`. Each body must contain both placeholders.
    pub fn with_overrides_file(self, path: &Path) -> Result<Self, PromptError> {
        let raw = fs::read_to_string(path).map_err(|e| PromptError::Override(e.to_string()))?;
        let map: BTreeMap<String, String> =
            serde_json::from_str(&raw).map_err(|e| PromptError::Override(e.to_string()))?;
        let mut catalog = self;
        for (key, body) in map {
            catalog = catalog.with_body(key.parse()?, body)?;
        }
        Ok(catalog)
    }

    pub fn with_body(mut self, id: PromptId, body: impl Into<String>) -> Result<Self, PromptError> {
        let body = body.into();
        if !body.contains(CONCEPT_PLACEHOLDER) || !body.contains(DEFINITION_PLACEHOLDER) {
            return Err(PromptError::Override(format!("{id} body lacks a placeholder")));
        }
        self.templates.get_mut(&id).expect("all ids present").body = body;
        Ok(self)
    }

    pub fn get(&self, id: PromptId) -> &PromptTemplate {
        &self.templates[&id]
    }

    pub fn iter(&self) -> impl Iterator<Item = &PromptTemplate> {
        self.templates.values()
    }

    pub fn render(
        &self,
        id: PromptId,
        concept: Concept,
        comment: &Comment,
        defs: &Definitions,
    ) -> Result<RenderedPrompt, PromptError> {
        let def = defs.get(concept).ok_or(PromptError::MissingDefinition(concept))?;
        let body = &self.get(id).body;
        // Noun-phrase definitions take "is" ahead of the opening quote.
        let with_def = match body.find(DEFINITION_PLACEHOLDER) {
            Some(pos) if def.is_noun_phrase() && insert_copula_at(body, pos).is_some() => {
                let at = insert_copula_at(body, pos).unwrap();
                format!("{}is {}", &body[..at], &body[at..])
            }
            _ => body.clone(),
        };
        let instruction_text = with_def
            .replace(DEFINITION_PLACEHOLDER, &def.text)
            .replace(CONCEPT_PLACEHOLDER, concept.name());
        Ok(RenderedPrompt {
            prompt_id: id,
            concept,
            comment_id: comment.id.clone(),
            instruction_text,
            comment_text: comment.text.clone(),
        })
    }
}

/// Byte offset of the opening quote in front of the definition placeholder,
/// if the placeholder follows "that it <quote>".
fn insert_copula_at(body: &str, placeholder: usize) -> Option<usize> {
    let before = &body[..placeholder];
    let quote = before.chars().last().filter(|c| matches!(c, '"' | '\u{201c}'))?;
    let quote_at = placeholder - quote.len_utf8();
    before[..quote_at].ends_with("it ").then_some(quote_at)
}

/// The bundled catalog's templates, in id order.
pub fn list_prompts() -> Vec<PromptTemplate> {
    PromptCatalog::bundled().iter().cloned().collect()
}

/// Renders a bundled template.
pub fn render_prompt(
    id: PromptId,
    concept: Concept,
    comment: &Comment,
    defs: &Definitions,
) -> Result<RenderedPrompt, PromptError> {
    PromptCatalog::bundled().render(id, concept, comment, defs)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub prompt_id: PromptId,
    pub concept: Concept,
    pub comment_id: String,
    pub instruction_text: String,
    pub comment_text: String,
}

impl RenderedPrompt {
    /// Instruction followed by the comment, for single-message delivery.
    pub fn inline_text(&self) -> String {
        format!("{}\n\nComment: {}", self.instruction_text, self.comment_text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("no definition available for {0}")]
    MissingDefinition(Concept),
    #[error("unknown prompt id {0:?}")]
    UnknownPrompt(String),
    #[error("template override: {0}")]
    Override(String),
}
