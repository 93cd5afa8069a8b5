//! Analyses over model explanations and label sets: the eight-cell HOT
//! partition, certainty bins, n-gram frequency tables, probability
//! histograms, and seeded sampling for manual reading.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Concept, PerConcept};

/// An item with a possibly-missing label per concept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledItem {
    pub id: String,
    pub labels: PerConcept<Option<bool>>,
}

impl LabeledItem {
    pub fn complete(id: impl Into<String>, hateful: bool, offensive: bool, toxic: bool) -> Self {
        LabeledItem {
            id: id.into(),
            labels: PerConcept { hateful: Some(hateful), offensive: Some(offensive), toxic: Some(toxic) },
        }
    }

    pub fn triple(&self) -> Option<HotTriple> {
        Some(HotTriple {
            hateful: self.labels.hateful?,
            offensive: self.labels.offensive?,
            toxic: self.labels.toxic?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HotTriple {
    pub hateful: bool,
    pub offensive: bool,
    pub toxic: bool,
}

impl HotTriple {
    pub fn new(hateful: bool, offensive: bool, toxic: bool) -> Self {
        HotTriple { hateful, offensive, toxic }
    }

    /// Cells in canonical order: (no, no, no), (no, no, yes), ... (yes, yes, yes).
    pub fn all() -> impl Iterator<Item = HotTriple> {
        (0..8u8).map(HotTriple::from_index)
    }

    fn index(self) -> usize {
        (self.hateful as usize) << 2 | (self.offensive as usize) << 1 | self.toxic as usize
    }

    fn from_index(i: u8) -> Self {
        HotTriple { hateful: i & 4 != 0, offensive: i & 2 != 0, toxic: i & 1 != 0 }
    }

    /// Compact key such as "no/yes/yes".
    pub fn key(self) -> String {
        let yn = |b: bool| if b { "yes" } else { "no" };
        format!("{}/{}/{}", yn(self.hateful), yn(self.offensive), yn(self.toxic))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VennCell {
    #[serde(flatten)]
    pub triple: HotTriple,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VennPartition {
    counts: [usize; 8],
}

impl VennPartition {
    pub fn from_counts(cells: impl IntoIterator<Item = (HotTriple, usize)>) -> Self {
        let mut p = VennPartition::default();
        for (t, n) in cells {
            p.counts[t.index()] += n;
        }
        p
    }

    pub fn count(&self, t: HotTriple) -> usize {
        self.counts[t.index()]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn cells(&self) -> Vec<VennCell> {
        HotTriple::all().map(|triple| VennCell { triple, count: self.count(triple) }).collect()
    }

    /// Eight rows keyed by HOT triple.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("Hateful,Offensive,Toxic,Count\n");
        for c in self.cells() {
            let yn = |b: bool| if b { "yes" } else { "no" };
            out.push_str(&format!("{},{},{},{}\n", yn(c.triple.hateful), yn(c.triple.offensive), yn(c.triple.toxic), c.count));
        }
        out
    }
}

impl Serialize for VennPartition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.cells().serialize(s)
    }
}

impl<'de> Deserialize<'de> for VennPartition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let cells = Vec::<VennCell>::deserialize(d)?;
        Ok(VennPartition::from_counts(cells.into_iter().map(|c| (c.triple, c.count))))
    }
}

pub fn venn_partition(items: &[LabeledItem]) -> Result<VennPartition, AnalysisError> {
    let mut p = VennPartition::default();
    for item in items {
        for (c, label) in item.labels.iter() {
            if label.is_none() {
                return Err(AnalysisError::MissingConceptLabel { item: item.id.clone(), concept: c });
            }
        }
        let t = item.triple().expect("checked above");
        p.counts[t.index()] += 1;
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CertaintyBin {
    Unlikely,
    Uncertain,
    Likely,
}

impl CertaintyBin {
    pub const ALL: [CertaintyBin; 3] = [CertaintyBin::Unlikely, CertaintyBin::Uncertain, CertaintyBin::Likely];

    pub fn label(self) -> &'static str {
        match self {
            CertaintyBin::Unlikely => "Unlikely [0, 0.2]",
            CertaintyBin::Uncertain => "Uncertain (0.2, 0.8)",
            CertaintyBin::Likely => "Likely [0.8, 1]",
        }
    }
}

/// Unlikely [0, 0.2], Uncertain (0.2, 0.8), Likely [0.8, 1].
pub fn certainty_bin(p: f64) -> Result<CertaintyBin, AnalysisError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(AnalysisError::OutOfRange(p));
    }
    Ok(if p <= 0.2 {
        CertaintyBin::Unlikely
    } else if p < 0.8 {
        CertaintyBin::Uncertain
    } else {
        CertaintyBin::Likely
    })
}

pub const TOKENIZER_ID: &str = "unicode-word-punct/v1";

/// Splits text into word tokens and standalone punctuation tokens, keeping
/// case. Apostrophes and hyphens between word characters stay inside the
/// word ("one's", "COVID-19").
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut word = String::new();
    for (i, &ch) in chars.iter().enumerate() {
        let joiner = matches!(ch, '\'' | '\u{2019}' | '-')
            && !word.is_empty()
            && chars.get(i + 1).is_some_and(|c| c.is_alphanumeric());
        if ch.is_alphanumeric() || joiner {
            word.push(ch);
            continue;
        }
        if !word.is_empty() {
            tokens.push(std::mem::take(&mut word));
        }
        if !ch.is_whitespace() {
            tokens.push(ch.to_string());
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramEntry {
    pub tokens: Vec<String>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramTable {
    pub n: usize,
    pub entries: Vec<NgramEntry>,
    pub tokenizer_id: String,
}

impl NgramTable {
    /// Python-tuple rendering, e.g. `('a', 'targeted', 'group')`.
    pub fn render_tuple(tokens: &[String]) -> String {
        let inner: Vec<String> = tokens.iter().map(|t| format!("'{t}'")).collect();
        format!("({})", inner.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramOptions {
    pub top_k: usize,
    /// Drop n-grams made only of stopwords and punctuation.
    pub suppress_stopword_only: bool,
}

impl NgramOptions {
    pub fn top(k: usize) -> Self {
        NgramOptions { top_k: k, suppress_stopword_only: false }
    }
}

const STOPWORDS: &[&str] = &[
    "a", "an", "the", "and", "or", "but", "if", "of", "to", "in", "on", "at", "for", "with", "by", "from", "as", "is",
    "are", "was", "were", "be", "been", "being", "it", "its", "this", "that", "these", "those", "which", "who", "whom",
    "there", "their", "they", "them", "he", "she", "his", "her", "we", "our", "you", "your", "i", "me", "my", "so",
    "than", "then", "also", "any", "some", "such",
];

fn is_stopword_or_punct(t: &str) -> bool {
    !t.chars().any(char::is_alphanumeric) || STOPWORDS.contains(&t.to_lowercase().as_str())
}

pub fn ngram_counts(texts: &[impl AsRef<str>], n: usize, top_k: usize) -> Result<NgramTable, AnalysisError> {
    ngram_counts_with(texts, n, &NgramOptions::top(top_k))
}

/// Counts n-grams within each text (windows never span texts) and returns
/// the `top_k` by count, ties broken by token order.
pub fn ngram_counts_with(
    texts: &[impl AsRef<str>],
    n: usize,
    opts: &NgramOptions,
) -> Result<NgramTable, AnalysisError> {
    if !(3..=5).contains(&n) {
        return Err(AnalysisError::BadN(n));
    }
    let mut counts: HashMap<Vec<String>, usize> = HashMap::new();
    for text in texts {
        let tokens = tokenize(text.as_ref());
        for window in tokens.windows(n) {
            if opts.suppress_stopword_only && window.iter().all(|t| is_stopword_or_punct(t)) {
                continue;
            }
            *counts.entry(window.to_vec()).or_default() += 1;
        }
    }
    let mut entries: Vec<NgramEntry> = counts.into_iter().map(|(tokens, count)| NgramEntry { tokens, count }).collect();
    entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.tokens.cmp(&b.tokens)));
    entries.truncate(opts.top_k);
    Ok(NgramTable { n, entries, tokenizer_id: TOKENIZER_ID.to_string() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub start: f64,
    pub count: usize,
}

const EDGE_EPS: f64 = 1e-9;

/// Left-closed bins of width `bin_width` over [0, 1]; the last bin also
/// holds 1.0.
pub fn histogram(probs: &[f64], bin_width: f64) -> Result<Vec<HistogramBin>, AnalysisError> {
    if !(bin_width > 0.0 && bin_width <= 1.0) {
        return Err(AnalysisError::BadBinWidth(bin_width));
    }
    let n_bins = ((1.0 / bin_width) - EDGE_EPS).ceil().max(1.0) as usize;
    let mut bins: Vec<HistogramBin> = (0..n_bins)
        .map(|k| HistogramBin { start: (k as f64 * bin_width * 1e9).round() / 1e9, count: 0 })
        .collect();
    for &p in probs {
        if !(0.0..=1.0).contains(&p) {
            return Err(AnalysisError::OutOfRange(p));
        }
        let idx = ((p / bin_width) + EDGE_EPS).floor() as usize;
        bins[idx.min(n_bins - 1)].count += 1;
    }
    Ok(bins)
}

/// Up to `k` ids from the given partition cell, drawn uniformly without
/// replacement with a seeded generator. Ids come back in input order.
pub fn sample_cell(cell: HotTriple, items: &[LabeledItem], k: usize, seed: u64) -> Vec<String> {
    let members: Vec<&LabeledItem> = items.iter().filter(|i| i.triple() == Some(cell)).collect();
    if members.len() <= k {
        return members.into_iter().map(|i| i.id.clone()).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, members.len(), k).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| members[i].id.clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("item {item:?} has no {concept} label")]
    MissingConceptLabel { item: String, concept: Concept },
    #[error("n-gram size {0} not in 3..=5")]
    BadN(usize),
    #[error("bin width {0} not in (0, 1]")]
    BadBinWidth(f64),
    #[error("value {0} outside [0, 1]")]
    OutOfRange(f64),
}
