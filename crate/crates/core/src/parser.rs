//! Turns raw model text into structured labels.
//!
//! Answers are read from the first non-empty line; everything after it is
//! treated as explanation. Responses that answer several numbered items at
//! once are rejected as wrong-class.

use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompts::{OutputKind, PromptId};

const EXCERPT_CHARS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseMode {
    Strict,
    Lenient,
}

impl ParseMode {
    /// Binary prompts without room for hedging are parsed strictly.
    pub fn for_prompt(id: PromptId) -> Self {
        match id {
            PromptId::P1 | PromptId::P4 | PromptId::P5 => ParseMode::Lenient,
            PromptId::P2 | PromptId::P3 => ParseMode::Strict,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinaryOutcome {
    Yes,
    No,
    Uncertain,
}

impl BinaryOutcome {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            BinaryOutcome::Yes => Some(true),
            BinaryOutcome::No => Some(false),
            BinaryOutcome::Uncertain => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum ParsedKind {
    Binary(BinaryOutcome),
    Probability(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedOutput {
    #[serde(flatten)]
    pub kind: ParsedKind,
    pub explanation: Option<String>,
    pub source_prompt: PromptId,
    /// Set when a percentage such as "80%" was rescaled to [0, 1].
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub percent_normalized: bool,
}

impl ParsedOutput {
    pub fn probability(&self) -> Option<f64> {
        match self.kind {
            ParsedKind::Probability(p) => Some(p),
            ParsedKind::Binary(_) => None,
        }
    }

    pub fn binary(&self) -> Option<BinaryOutcome> {
        match self.kind {
            ParsedKind::Binary(b) => Some(b),
            ParsedKind::Probability(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", content = "value", rename_all = "snake_case")]
pub enum FailureReason {
    WrongClass,
    NoScore,
    OutOfRange(f64),
    Empty,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureReason::WrongClass => f.write_str("wrong class"),
            FailureReason::NoScore => f.write_str("no score"),
            FailureReason::OutOfRange(v) => write!(f, "score {v} outside [0, 1]"),
            FailureReason::Empty => f.write_str("empty response"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[error("{reason}: {raw_excerpt:?}")]
pub struct ParseFailure {
    pub reason: FailureReason,
    pub raw_excerpt: String,
}

impl ParseFailure {
    fn new(reason: FailureReason, raw: &str) -> Self {
        ParseFailure { reason, raw_excerpt: raw.trim().chars().take(EXCERPT_CHARS).collect() }
    }
}

static ENUMERATED_LINE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*\d+[.)](?:\s+|$)(.*)$").unwrap());
static OPTION_PREFIX: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(?:[ab]|\d+)[.)]\s+").unwrap());
static SCORE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(-?)(\d+(?:\.\d+)?|\.\d+)(\s*%)?").unwrap());
static LEADING_SCORE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^-?(?:\d+(?:\.\d+)?|\.\d+)\s*%?").unwrap());

fn first_line(raw: &str) -> Option<(&str, &str)> {
    let mut rest = raw;
    loop {
        let (line, tail) = match rest.find('\n') {
            Some(i) => (&rest[..i], &rest[i + 1..]),
            None => (rest, ""),
        };
        if !line.trim().is_empty() {
            return Some((line.trim(), tail));
        }
        if tail.is_empty() {
            return None;
        }
        rest = tail;
    }
}

fn join_lines(text: &str) -> Option<String> {
    let joined = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect::<Vec<_>>().join("\n");
    (!joined.is_empty()).then_some(joined)
}

/// Strips leading punctuation, markdown and bullet decoration and a leading
/// "a."/"b." option or "1." list marker. Returns the byte offset into `line` where the
/// remaining text starts.
fn answer_start(line: &str) -> usize {
    let trimmed = line.trim_start_matches(|c: char| !c.is_alphanumeric());
    let mut start = line.len() - trimmed.len();
    let lower = trimmed.to_lowercase();
    if let Some(m) = OPTION_PREFIX.find(&lower) {
        // Option markers are ASCII, so byte offsets agree between cases.
        start += m.end();
        let rest = &line[start..];
        start += rest.len() - rest.trim_start_matches(|c: char| !c.is_alphanumeric()).len();
    }
    start
}

/// Yes/no token at the start of the normalized line, with its byte length.
fn leading_answer(line: &str) -> Option<(bool, usize)> {
    let start = answer_start(line);
    let body = &line[start..];
    let word_len = body.find(|c: char| !c.is_alphabetic()).unwrap_or(body.len());
    match body[..word_len].to_lowercase().as_str() {
        "yes" => Some((true, start + word_len)),
        "no" => Some((false, start + word_len)),
        _ => None,
    }
}

/// Counts enumerated lines ("1. yes", "2) 0.7") that each carry an answer.
fn enumerated_answers(raw: &str) -> usize {
    raw.lines()
        .filter_map(|l| ENUMERATED_LINE.captures(l))
        .filter(|c| {
            let rest = c.get(1).map_or("", |m| m.as_str());
            leading_answer(rest).is_some() || LEADING_SCORE.is_match(rest.trim_start())
        })
        .count()
}

fn check_not_multi(raw: &str) -> Result<(), ParseFailure> {
    if enumerated_answers(raw) >= 2 {
        Err(ParseFailure::new(FailureReason::WrongClass, raw))
    } else {
        Ok(())
    }
}

pub fn parse_binary(raw: &str, mode: ParseMode) -> Result<BinaryOutcome, ParseFailure> {
    let (line, _) = first_line(raw).ok_or_else(|| ParseFailure::new(FailureReason::Empty, raw))?;
    check_not_multi(raw)?;
    match (leading_answer(line), mode) {
        (Some((true, _)), _) => Ok(BinaryOutcome::Yes),
        (Some((false, _)), _) => Ok(BinaryOutcome::No),
        (None, ParseMode::Lenient) => Ok(BinaryOutcome::Uncertain),
        (None, ParseMode::Strict) => Err(ParseFailure::new(FailureReason::WrongClass, raw)),
    }
}

/// Reads the first numeric literal on the first line as a probability.
pub fn parse_probability(raw: &str, prompt: PromptId) -> Result<ParsedOutput, ParseFailure> {
    let (line, tail) = first_line(raw).ok_or_else(|| ParseFailure::new(FailureReason::Empty, raw))?;
    check_not_multi(raw)?;
    let caps = SCORE.captures(line).ok_or_else(|| ParseFailure::new(FailureReason::NoScore, raw))?;
    let whole = caps.get(0).unwrap();
    let mut value: f64 = caps[2].parse().map_err(|_| ParseFailure::new(FailureReason::NoScore, raw))?;
    if !caps[1].is_empty() {
        value = -value;
    }
    let percent = caps.get(3).is_some();
    if percent {
        value /= 100.0;
    }
    if !(0.0..=1.0).contains(&value) {
        return Err(ParseFailure::new(FailureReason::OutOfRange(value), raw));
    }
    let same_line = line[whole.end()..].trim_start_matches(|c: char| c.is_whitespace() || ".,;:-".contains(c));
    let explanation = join_lines(&format!("{same_line}\n{tail}"));
    Ok(ParsedOutput {
        kind: ParsedKind::Probability(value),
        explanation,
        source_prompt: prompt,
        percent_normalized: percent,
    })
}

/// Splits a response into its answer line and optional explanation.
///
/// Single-line responses are split after the first sentence terminator that
/// follows a leading yes/no token, or directly after the token when it is
/// followed by a capitalized word ("Yes The comment ...").
pub fn split_explanation(raw: &str) -> Result<(String, Option<String>), ParseFailure> {
    let (line, tail) = first_line(raw).ok_or_else(|| ParseFailure::new(FailureReason::Empty, raw))?;
    if let Some(expl) = join_lines(tail) {
        return Ok((line.to_string(), Some(expl)));
    }
    let Some((_, token_end)) = leading_answer(line) else {
        return Ok((line.to_string(), None));
    };
    let after = &line[token_end..];
    let split_at = if after.starts_with(char::is_whitespace)
        && after.trim_start().starts_with(char::is_uppercase)
    {
        Some(token_end)
    } else {
        after.find(['.', '!', '?']).map(|i| {
            let end = token_end + i;
            // Swallow runs like "!!" or "...".
            end + line[end..].find(|c: char| !".!?".contains(c)).unwrap_or(line.len() - end)
        })
    };
    match split_at {
        Some(at) => {
            let expl = line[at..].trim();
            let expl = (!expl.is_empty()).then(|| expl.to_string());
            Ok((line[..at].trim_end().to_string(), expl))
        }
        None => Ok((line.to_string(), None)),
    }
}

/// Parses a response according to the prompt's output kind.
pub fn parse_response(raw: &str, prompt: PromptId, mode: ParseMode) -> Result<ParsedOutput, ParseFailure> {
    match prompt.output_kind() {
        OutputKind::Probability => parse_probability(raw, prompt),
        OutputKind::Binary | OutputKind::MTurkStyle => {
            let outcome = parse_binary(raw, mode)?;
            let (_, explanation) = split_explanation(raw)?;
            Ok(ParsedOutput {
                kind: ParsedKind::Binary(outcome),
                explanation,
                source_prompt: prompt,
                percent_normalized: false,
            })
        }
    }
}

/// Expected outcome of one parser fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FixtureExpectation {
    Binary { value: BinaryOutcome, has_explanation: bool },
    Probability { value: f64, has_explanation: bool },
    Failure { value: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParserFixture {
    pub raw: String,
    pub prompt: PromptId,
    #[serde(default)]
    pub mode: Option<ParseMode>,
    pub expect: FixtureExpectation,
}

impl ParserFixture {
    pub fn mode(&self) -> ParseMode {
        self.mode.unwrap_or_else(|| ParseMode::for_prompt(self.prompt))
    }

    /// `Ok` when the parser reproduces the expectation; otherwise a
    /// description of the mismatch.
    pub fn check(&self) -> Result<(), String> {
        let got = parse_response(&self.raw, self.prompt, self.mode());
        let ok = match (&self.expect, &got) {
            (FixtureExpectation::Binary { value, has_explanation }, Ok(out)) => {
                out.binary() == Some(*value) && out.explanation.is_some() == *has_explanation
            }
            (FixtureExpectation::Probability { value, has_explanation }, Ok(out)) => {
                out.probability() == Some(*value) && out.explanation.is_some() == *has_explanation
            }
            (FixtureExpectation::Failure { value }, Err(fail)) => failure_code(&fail.reason) == value,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(format!("{:?} ({}) expected {:?}, got {:?}", self.raw, self.prompt, self.expect, got))
        }
    }
}

pub fn failure_code(reason: &FailureReason) -> &'static str {
    match reason {
        FailureReason::WrongClass => "wrong_class",
        FailureReason::NoScore => "no_score",
        FailureReason::OutOfRange(_) => "out_of_range",
        FailureReason::Empty => "empty",
    }
}

pub fn load_fixtures(path: &Path) -> std::io::Result<Vec<ParserFixture>> {
    let raw = fs::read_to_string(path)?;
    raw.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(std::io::Error::other))
        .collect()
}
