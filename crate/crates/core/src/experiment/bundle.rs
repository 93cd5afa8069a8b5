use serde::{Deserialize, Serialize};

use super::{ConfigSummary, Experiment};
use crate::corpus::Concept;
use crate::metrics::{Alpha, ClassificationReport, Scale, SweepPoint, ThresholdConfig};
use crate::prompts::PromptId;
use crate::reasoning::{CertaintyBin, HistogramBin, HotTriple, NgramTable, VennPartition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemStatus {
    Parsed,
    Uncertain,
    WrongClass,
    Failed,
}

impl ItemStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ItemStatus::Parsed => "parsed",
            ItemStatus::Uncertain => "uncertain",
            ItemStatus::WrongClass => "wrong_class",
            ItemStatus::Failed => "failed",
        }
    }
}

/// One corpus item's outcome within a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerItem {
    pub comment_id: String,
    pub status: ItemStatus,
    /// Set for parsed binary answers.
    pub label: Option<bool>,
    /// Set for parsed probability answers.
    pub probability: Option<f64>,
    pub explanation: Option<String>,
    /// Human majority label.
    pub truth: bool,
    pub reason: Option<String>,
    pub excerpt: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub parsed: usize,
    pub uncertain: usize,
    pub wrong_class: usize,
    pub failed: usize,
}

impl OutcomeCounts {
    pub fn total(&self) -> usize {
        self.parsed + self.uncertain + self.wrong_class + self.failed
    }

    pub fn tally<'a>(items: impl IntoIterator<Item = &'a LedgerItem>) -> Self {
        let mut c = OutcomeCounts::default();
        for item in items {
            match item.status {
                ItemStatus::Parsed => c.parsed += 1,
                ItemStatus::Uncertain => c.uncertain += 1,
                ItemStatus::WrongClass => c.wrong_class += 1,
                ItemStatus::Failed => c.failed += 1,
            }
        }
        c
    }
}

/// Every corpus item for one (prompt, concept, temperature, iteration).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRun {
    pub prompt: PromptId,
    pub concept: Concept,
    pub temperature: f64,
    pub iteration: u32,
    pub counts: OutcomeCounts,
    pub items: Vec<LedgerItem>,
}

impl PromptRun {
    /// Model label per item: binary answers as given, probabilities cut at
    /// `threshold`. `None` for anything not parsed.
    pub fn predicted(&self, threshold: f64) -> Vec<Option<bool>> {
        self.items
            .iter()
            .map(|i| match (i.status, i.label, i.probability) {
                (ItemStatus::Parsed, Some(l), _) => Some(l),
                (ItemStatus::Parsed, None, Some(p)) => Some(p >= threshold),
                _ => None,
            })
            .collect()
    }
}

/// Model and human label counts, the bar-chart view of one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub model_yes: usize,
    pub model_no: usize,
    pub uncertain: usize,
    pub wrong_class: usize,
    pub failed: usize,
    pub human_yes: usize,
    pub human_no: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptReport {
    pub prompt: PromptId,
    pub concept: Concept,
    pub temperature: f64,
    /// Cut-off applied to probability outputs.
    pub threshold: Option<f64>,
    pub distribution: LabelDistribution,
    /// Metrics over parsed items only; absent when nothing parsed.
    pub report: Option<ClassificationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityReport {
    pub prompt: PromptId,
    pub concept: Concept,
    pub temperature: f64,
    pub sweep: Vec<SweepPoint>,
    pub histogram: Vec<HistogramBin>,
    /// Binned scores against five-rater vote scores; absent unless every
    /// record has exactly five votes.
    pub score_agreement: Option<ClassificationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaCell {
    pub concept: Concept,
    pub alpha: Option<Alpha>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub prompt: PromptId,
    pub temperature: f64,
    pub scale: Scale,
    pub iterations: u32,
    pub cells: Vec<AlphaCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VennSummary {
    pub prompt: PromptId,
    pub partition: VennPartition,
    /// Items lacking a parsed label for some concept.
    pub excluded: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertaintyRow {
    pub prompt: PromptId,
    pub concept: Concept,
    pub unlikely: usize,
    pub uncertain: usize,
    pub likely: usize,
}

impl CertaintyRow {
    pub fn count(&self, bin: CertaintyBin) -> usize {
        match bin {
            CertaintyBin::Unlikely => self.unlikely,
            CertaintyBin::Uncertain => self.uncertain,
            CertaintyBin::Likely => self.likely,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "by", content = "value", rename_all = "snake_case")]
pub enum NgramGroup {
    Concept(Concept),
    Answer(bool),
    Certainty(CertaintyBin),
}

impl NgramGroup {
    pub fn label(&self) -> String {
        match self {
            NgramGroup::Concept(c) => c.label().to_string(),
            NgramGroup::Answer(true) => "Yes".to_string(),
            NgramGroup::Answer(false) => "No".to_string(),
            NgramGroup::Certainty(b) => format!("{b:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramReport {
    pub prompt: PromptId,
    pub group: NgramGroup,
    /// Number of explanations the table was built from.
    pub documents: usize,
    pub table: NgramTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSample {
    #[serde(flatten)]
    pub cell: HotTriple,
    pub ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningReport {
    pub venn: Option<VennSummary>,
    /// The same partition over human majority labels.
    pub human_venn: Option<VennPartition>,
    pub certainty: Vec<CertaintyRow>,
    pub ngrams: Vec<NgramReport>,
    pub samples: Vec<CellSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEntry {
    pub prompt: PromptId,
    pub concept: Concept,
    pub temperature: f64,
    pub iteration: u32,
    pub comment_id: String,
    pub status: ItemStatus,
    pub reason: Option<String>,
    pub excerpt: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub prompt: PromptId,
    pub temperature: f64,
    pub concept: Concept,
    pub class_label: String,
    pub support: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub corpus_fingerprint: String,
    pub thresholds: ThresholdConfig,
    /// e.g. "thresholds: hateful=0.7 offensive=0.7 toxic=0.9"
    pub header: String,
    pub rows: Vec<ComparisonRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub experiment: Experiment,
    pub config: ConfigSummary,
    pub config_fingerprint: String,
    pub corpus_fingerprint: String,
    pub corpus_size: usize,
    pub runs: Vec<PromptRun>,
    pub reports: Vec<ConceptReport>,
    pub probability: Vec<ProbabilityReport>,
    pub alpha: Vec<AlphaRow>,
    pub reasoning: Option<ReasoningReport>,
    pub comparison: Option<ComparisonTable>,
    pub errors: Vec<ErrorEntry>,
}

impl ReportBundle {
    pub fn run(&self, prompt: PromptId, concept: Concept, temperature: f64, iteration: u32) -> Option<&PromptRun> {
        self.runs.iter().find(|r| {
            r.prompt == prompt && r.concept == concept && r.temperature == temperature && r.iteration == iteration
        })
    }

    pub fn report(&self, prompt: PromptId, concept: Concept, temperature: f64) -> Option<&ConceptReport> {
        self.reports.iter().find(|r| r.prompt == prompt && r.concept == concept && r.temperature == temperature)
    }

    pub fn alpha_row(&self, prompt: PromptId, temperature: f64) -> Option<&AlphaRow> {
        self.alpha.iter().find(|r| r.prompt == prompt && r.temperature == temperature)
    }
}
