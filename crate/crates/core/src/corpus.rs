//! Comment corpus, HOT concept definitions, and majority-vote aggregation.
//!
//! A corpus is a JSONL file where every line carries one comment and the raw
//! rater votes for each of the three concepts. Majority labels are derived at
//! load time and never read from disk.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Upper bound on rater votes per concept.
pub const MAX_VOTES: usize = 9;

/// One of the three HOT concepts. The derived ordering is the canonical
/// report ordering: Hateful < Offensive < Toxic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Concept {
    Hateful,
    Offensive,
    Toxic,
}

impl Concept {
    pub const ALL: [Concept; 3] = [Concept::Hateful, Concept::Offensive, Concept::Toxic];

    /// Lowercase name used inside prompts and file formats.
    pub fn name(self) -> &'static str {
        match self {
            Concept::Hateful => "hateful",
            Concept::Offensive => "offensive",
            Concept::Toxic => "toxic",
        }
    }

    /// Capitalized name used as the report "Category" column.
    pub fn label(self) -> &'static str {
        match self {
            Concept::Hateful => "Hateful",
            Concept::Offensive => "Offensive",
            Concept::Toxic => "Toxic",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Concept {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hateful" | "h" => Ok(Concept::Hateful),
            "offensive" | "o" => Ok(Concept::Offensive),
            "toxic" | "t" => Ok(Concept::Toxic),
            other => Err(CorpusError::UnknownConcept(other.to_string())),
        }
    }
}

/// Fixed-size map keyed by concept.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PerConcept<T> {
    pub hateful: T,
    pub offensive: T,
    pub toxic: T,
}

impl<T> PerConcept<T> {
    pub fn from_fn(mut f: impl FnMut(Concept) -> T) -> Self {
        PerConcept {
            hateful: f(Concept::Hateful),
            offensive: f(Concept::Offensive),
            toxic: f(Concept::Toxic),
        }
    }

    pub fn get(&self, c: Concept) -> &T {
        match c {
            Concept::Hateful => &self.hateful,
            Concept::Offensive => &self.offensive,
            Concept::Toxic => &self.toxic,
        }
    }

    pub fn get_mut(&mut self, c: Concept) -> &mut T {
        match c {
            Concept::Hateful => &mut self.hateful,
            Concept::Offensive => &mut self.offensive,
            Concept::Toxic => &mut self.toxic,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Concept, &T)> {
        Concept::ALL.into_iter().map(move |c| (c, self.get(c)))
    }

    pub fn map<U>(&self, mut f: impl FnMut(Concept, &T) -> U) -> PerConcept<U> {
        PerConcept::from_fn(|c| f(c, self.get(c)))
    }
}

const HATEFUL_DEFINITION: &str = "expresses hatred towards a targeted group or is intended to be derogatory, to humiliate, or to insult the members of the group";
const OFFENSIVE_DEFINITION: &str = "contains hurtful, derogatory, or obscene comments";
const TOXIC_DEFINITION: &str = "a rude, disrespectful, or unreasonable comment that is likely to make readers want to leave a discussion";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptDefinition {
    pub concept: Concept,
    pub text: String,
}

impl ConceptDefinition {
    /// Whether the definition is a noun phrase ("a rude ... comment") rather
    /// than a verb phrase ("expresses hatred ..."). Noun phrases need a copula
    /// when placed after "you perceive that it".
    pub fn is_noun_phrase(&self) -> bool {
        let lower = self.text.trim_start().to_lowercase();
        ["a ", "an ", "the "].iter().any(|a| lower.starts_with(a))
    }
}

/// Definition source used when rendering prompts. Ships with the bundled
/// definitions and can be replaced from a JSON file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Definitions {
    texts: BTreeMap<Concept, String>,
}

impl Default for Definitions {
    fn default() -> Self {
        Self::bundled()
    }
}

impl Definitions {
    pub fn bundled() -> Self {
        let texts = Concept::ALL
            .into_iter()
            .map(|c| (c, bundled_definition_text(c).to_string()))
            .collect();
        Definitions { texts }
    }

    /// A definition source with nothing in it; useful for building partial
    /// overrides.
    pub fn empty() -> Self {
        Definitions { texts: BTreeMap::new() }
    }

    pub fn with(mut self, c: Concept, text: impl Into<String>) -> Self {
        self.texts.insert(c, text.into());
        self
    }

    pub fn get(&self, c: Concept) -> Option<ConceptDefinition> {
        self.texts.get(&c).map(|t| ConceptDefinition { concept: c, text: t.clone() })
    }

    /// Loads `{"hateful": "...", "offensive": "...", "toxic": "..."}`. Missing
    /// concepts fall back to the bundled text.
    pub fn from_json_file(path: &Path) -> Result<Self, CorpusError> {
        let raw = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
        let overrides: BTreeMap<String, String> = serde_json::from_str(&raw)
            .map_err(|e| CorpusError::MalformedLine { line: e.line(), message: e.to_string() })?;
        let mut defs = Self::bundled();
        for (key, text) in overrides {
            let c: Concept = key.parse()?;
            defs.texts.insert(c, text);
        }
        Ok(defs)
    }
}

fn bundled_definition_text(c: Concept) -> &'static str {
    match c {
        Concept::Hateful => HATEFUL_DEFINITION,
        Concept::Offensive => OFFENSIVE_DEFINITION,
        Concept::Toxic => TOXIC_DEFINITION,
    }
}

/// The bundled definition for a concept.
pub fn concept_definition(c: Concept) -> ConceptDefinition {
    ConceptDefinition { concept: c, text: bundled_definition_text(c).to_string() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Reddit,
    Twitter,
    #[serde(rename = "youtube")]
    YouTube,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub id: String,
    pub platform: Platform,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub comment: Comment,
    pub votes: PerConcept<Vec<bool>>,
    pub majority: PerConcept<bool>,
}

impl AnnotationRecord {
    /// Validates vote arity and derives the majority labels.
    pub fn new(comment: Comment, votes: PerConcept<Vec<bool>>) -> Result<Self, CorpusError> {
        if comment.text.trim().is_empty() {
            return Err(CorpusError::EmptyText(comment.id));
        }
        let arity = votes.hateful.len();
        if votes.offensive.len() != arity || votes.toxic.len() != arity {
            return Err(CorpusError::VoteArityMismatch(comment.id));
        }
        if arity > MAX_VOTES {
            return Err(CorpusError::TooManyVotes { id: comment.id, count: arity });
        }
        let mut majority = PerConcept::<bool>::default();
        for c in Concept::ALL {
            *majority.get_mut(c) = majority_vote(votes.get(c)).map_err(|e| CorpusError::Votes {
                id: comment.id.clone(),
                source: e,
            })?;
        }
        Ok(AnnotationRecord { comment, votes, majority })
    }

    pub fn id(&self) -> &str {
        &self.comment.id
    }

    pub fn arity(&self) -> usize {
        self.votes.hateful.len()
    }

    pub fn label(&self, c: Concept) -> bool {
        *self.majority.get(c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusMetadata {
    pub source: Option<PathBuf>,
    pub loaded_at: String,
    pub record_count: usize,
}

/// An ordered set of annotation records with distinct ids.
///
/// Equality compares records only; load metadata is ignored.
#[derive(Debug, Clone)]
pub struct Corpus {
    records: Vec<AnnotationRecord>,
    metadata: CorpusMetadata,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records
    }
}

impl Corpus {
    pub fn from_records(records: Vec<AnnotationRecord>) -> Result<Self, CorpusError> {
        Self::build(records, None)
    }

    fn build(records: Vec<AnnotationRecord>, source: Option<PathBuf>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.comment.id.as_str()) {
                return Err(CorpusError::DuplicateId(r.comment.id.clone()));
            }
        }
        let metadata = CorpusMetadata {
            source,
            loaded_at: chrono::Utc::now().to_rfc3339(),
            record_count: records.len(),
        };
        Ok(Corpus { records, metadata })
    }

    pub fn records(&self) -> &[AnnotationRecord] {
        &self.records
    }

    pub fn metadata(&self) -> &CorpusMetadata {
        &self.metadata
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&AnnotationRecord> {
        self.records.iter().find(|r| r.comment.id == id)
    }

    /// Stable hash of the sorted `(id, text)` pairs.
    pub fn fingerprint(&self) -> String {
        let mut pairs: Vec<(&str, &str)> = self
            .records
            .iter()
            .map(|r| (r.comment.id.as_str(), r.comment.text.as_str()))
            .collect();
        pairs.sort_unstable();
        let mut hasher = Sha256::new();
        for (id, text) in pairs {
            hasher.update((id.len() as u64).to_le_bytes());
            hasher.update(id.as_bytes());
            hasher.update((text.len() as u64).to_le_bytes());
            hasher.update(text.as_bytes());
        }
        hex::encode(&hasher.finalize()[..16])
    }

    /// Serializes back to the JSONL ingestion format.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let line = CorpusLine {
                id: r.comment.id.clone(),
                platform: r.comment.platform,
                text: r.comment.text.clone(),
                votes: r.votes.clone(),
            };
            out.push_str(&serde_json::to_string(&line).expect("corpus line serializes"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusLine {
    id: String,
    platform: Platform,
    text: String,
    votes: PerConcept<Vec<bool>>,
}

pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    let raw = match fs::read_to_string(path) {
        Ok(raw) => raw,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(CorpusError::FileNotFound(path.to_path_buf()))
        }
        Err(e) => return Err(CorpusError::io(path, e)),
    };
    let records = parse_corpus_lines(&raw)?;
    Corpus::build(records, Some(path.to_path_buf()))
}

/// Parses JSONL corpus text. Blank lines are skipped; line numbers in errors
/// are 1-based.
pub fn parse_corpus(raw: &str) -> Result<Corpus, CorpusError> {
    Corpus::build(parse_corpus_lines(raw)?, None)
}

fn parse_corpus_lines(raw: &str) -> Result<Vec<AnnotationRecord>, CorpusError> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: CorpusLine = serde_json::from_str(line)
            .map_err(|e| CorpusError::MalformedLine { line: idx + 1, message: e.to_string() })?;
        if !seen.insert(parsed.id.clone()) {
            return Err(CorpusError::DuplicateId(parsed.id));
        }
        let comment = Comment { id: parsed.id, platform: parsed.platform, text: parsed.text };
        records.push(AnnotationRecord::new(comment, parsed.votes)?);
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VoteError {
    #[error("no votes")]
    EmptyVotes,
    #[error("even number of votes ({0}) has no majority rule")]
    EvenArity(usize),
}

/// True iff strictly more than half of an odd-length vote list is true.
pub fn majority_vote(votes: &[bool]) -> Result<bool, VoteError> {
    if votes.is_empty() {
        return Err(VoteError::EmptyVotes);
    }
    if votes.len().is_multiple_of(2) {
        return Err(VoteError::EvenArity(votes.len()));
    }
    let yes = votes.iter().filter(|&&v| v).count();
    Ok(2 * yes > votes.len())
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("duplicate comment id {0:?}")]
    DuplicateId(String),
    #[error("comment {0:?} has different vote counts across concepts")]
    VoteArityMismatch(String),
    #[error("comment {id:?} has {count} votes per concept (max {MAX_VOTES})")]
    TooManyVotes { id: String, count: usize },
    #[error("comment {id:?}: {source}")]
    Votes { id: String, source: VoteError },
    #[error("comment {0:?} has empty text")]
    EmptyText(String),
    #[error("unknown concept {0:?}")]
    UnknownConcept(String),
}

impl CorpusError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io { path: path.to_path_buf(), source }
    }
}
