//! Experiment pipelines: corpus → prompts → gateway → parser → metrics and
//! analysis, collected into an immutable [`ReportBundle`].

mod bundle;
mod compare;
mod emit;
mod runner;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{Concept, CorpusError};
use crate::gateway::{GatewayError, RequestParams};
use crate::metrics::ThresholdConfig;
use crate::prompts::{PromptError, PromptId};

pub use bundle::{
    AlphaCell, AlphaRow, CellSample, CertaintyRow, ComparisonRow, ComparisonTable, ConceptReport, ErrorEntry,
    ItemStatus, LabelDistribution, LedgerItem, NgramGroup, NgramReport, OutcomeCounts, ProbabilityReport, PromptRun,
    ReasoningReport, ReportBundle, VennSummary,
};
pub use compare::compare_prompts;
pub use emit::{emit_report, to_canonical_json, ReportFormat};
pub use runner::{run_experiment, run_experiment_with};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Experiment {
    E1,
    E2,
    E3,
    E4,
    Compare,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [Experiment::E1, Experiment::E2, Experiment::E3, Experiment::E4, Experiment::Compare];

    /// The prompts each pipeline is defined over.
    pub fn prompts(self) -> &'static [PromptId] {
        use PromptId::*;
        match self {
            Experiment::E1 => &[P1],
            Experiment::E2 | Experiment::E3 => &[P2, P3],
            Experiment::E4 => &[P4, P5],
            Experiment::Compare => &PromptId::ALL,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::E1 => "E1",
            Experiment::E2 => "E2",
            Experiment::E3 => "E3",
            Experiment::E4 => "E4",
            Experiment::Compare => "compare",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "e1" => Ok(Experiment::E1),
            "2" | "e2" => Ok(Experiment::E2),
            "3" | "e3" => Ok(Experiment::E3),
            "4" | "e4" => Ok(Experiment::E4),
            "compare" => Ok(Experiment::Compare),
            _ => Err(RunError::ConfigInvalid(format!("unknown experiment {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    Live,
    Record,
    Replay,
}

impl FromStr for BackendChoice {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "live" => Ok(BackendChoice::Live),
            "record" => Ok(BackendChoice::Record),
            "replay" => Ok(BackendChoice::Replay),
            _ => Err(RunError::ConfigInvalid(format!("unknown backend {s:?}"))),
        }
    }
}

/// Knobs for the explanation and distribution analyses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub ngram_sizes: Vec<usize>,
    pub ngram_top_k: usize,
    pub suppress_stopword_only: bool,
    pub histogram_bin_width: f64,
    pub samples_per_cell: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            ngram_sizes: vec![3, 4, 5],
            ngram_top_k: 10,
            suppress_stopword_only: false,
            histogram_bin_width: 0.05,
            samples_per_cell: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub prompts: Vec<PromptId>,
    pub concepts: Vec<Concept>,
    /// Base request parameters. The temperature is taken from
    /// `temperatures` instead.
    pub params: RequestParams,
    pub temperatures: Vec<f64>,
    pub iterations: u32,
    pub thresholds: ThresholdConfig,
    pub backend: BackendChoice,
    pub seed: u64,
    pub concurrency: usize,
    pub analysis: AnalysisConfig,
    pub corpus_path: PathBuf,
    pub cassette_path: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub definitions_path: Option<PathBuf>,
    pub prompt_overrides: Option<PathBuf>,
}

pub const DEFAULT_E3_ITERATIONS: u32 = 3;
pub const DEFAULT_E3_TEMPERATURES: [f64; 2] = [0.0, 1.0];

impl ExperimentConfig {
    /// Defaults for one experiment: its full prompt set, all concepts,
    /// temperature 0 (E3 sweeps 0 and 1 over three iterations), replay
    /// backend.
    pub fn new(experiment: Experiment, corpus_path: impl Into<PathBuf>) -> Self {
        let e3 = experiment == Experiment::E3;
        ExperimentConfig {
            experiment,
            prompts: experiment.prompts().to_vec(),
            concepts: Concept::ALL.to_vec(),
            params: RequestParams::default(),
            temperatures: if e3 { DEFAULT_E3_TEMPERATURES.to_vec() } else { vec![0.0] },
            iterations: if e3 { DEFAULT_E3_ITERATIONS } else { 1 },
            thresholds: ThresholdConfig::default(),
            backend: BackendChoice::Replay,
            seed: 42,
            concurrency: 4,
            analysis: AnalysisConfig::default(),
            corpus_path: corpus_path.into(),
            cassette_path: None,
            out_dir: None,
            definitions_path: None,
            prompt_overrides: None,
        }
    }

    pub fn with_cassette(mut self, path: impl Into<PathBuf>) -> Self {
        self.cassette_path = Some(path.into());
        self
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |msg: String| Err(RunError::ConfigInvalid(msg));
        let allowed = self.experiment.prompts();
        if self.prompts.is_empty() {
            return bad("no prompts selected".into());
        }
        if let Some(p) = self.prompts.iter().find(|p| !allowed.contains(p)) {
            return bad(format!("{p} is not part of {}", self.experiment));
        }
        if has_duplicates(&self.prompts) {
            return bad("duplicate prompt".into());
        }
        if self.experiment == Experiment::Compare && self.prompts.len() < 2 {
            return bad("compare needs at least two prompts".into());
        }
        if self.concepts.is_empty() || has_duplicates(&self.concepts) {
            return bad("concepts must be a non-empty set".into());
        }
        match self.experiment {
            Experiment::E3 if self.iterations < 2 => {
                return bad(format!("E3 needs at least 2 iterations, got {}", self.iterations));
            }
            Experiment::E3 => {}
            _ if self.iterations != 1 => return bad(format!("{} runs a single iteration", self.experiment)),
            _ => {}
        }
        if self.temperatures.is_empty() {
            return bad("no temperatures".into());
        }
        for &t in &self.temperatures {
            self.params.clone().with_temperature(t).validate().map_err(|e| RunError::ConfigInvalid(e.to_string()))?;
        }
        self.thresholds.validate().map_err(|e| RunError::ConfigInvalid(format!("thresholds: {e}")))?;
        if self.concurrency == 0 {
            return bad("concurrency must be at least 1".into());
        }
        if matches!(self.backend, BackendChoice::Replay | BackendChoice::Record) && self.cassette_path.is_none() {
            return bad("replay and record backends need a cassette path".into());
        }
        let a = &self.analysis;
        if a.ngram_sizes.iter().any(|n| !(3..=5).contains(n)) {
            return bad("n-gram sizes must be 3, 4 or 5".into());
        }
        if a.ngram_top_k == 0 {
            return bad("n-gram top-k must be positive".into());
        }
        if !(a.histogram_bin_width > 0.0 && a.histogram_bin_width <= 1.0) {
            return bad(format!("histogram bin width {}", a.histogram_bin_width));
        }
        Ok(())
    }

    /// Sorted, deduplicated copy so selection order never changes results.
    pub(crate) fn normalized(&self) -> Self {
        let mut cfg = self.clone();
        cfg.prompts.sort();
        cfg.concepts.sort();
        cfg.temperatures.sort_by(f64::total_cmp);
        cfg.temperatures.dedup();
        cfg.analysis.ngram_sizes.sort();
        cfg.analysis.ngram_sizes.dedup();
        cfg
    }

    /// The result-determining part of the config; paths and the backend
    /// choice are left out.
    pub fn summary(&self) -> ConfigSummary {
        let cfg = self.normalized();
        ConfigSummary {
            experiment: cfg.experiment,
            prompts: cfg.prompts,
            concepts: cfg.concepts,
            params: cfg.params,
            temperatures: cfg.temperatures,
            iterations: cfg.iterations,
            thresholds: cfg.thresholds,
            seed: cfg.seed,
            analysis: cfg.analysis,
        }
    }
}

fn has_duplicates<T: Ord + Clone>(xs: &[T]) -> bool {
    let mut v = xs.to_vec();
    v.sort();
    v.windows(2).any(|w| w[0] == w[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub experiment: Experiment,
    pub prompts: Vec<PromptId>,
    pub concepts: Vec<Concept>,
    pub params: RequestParams,
    pub temperatures: Vec<f64>,
    pub iterations: u32,
    pub thresholds: ThresholdConfig,
    pub seed: u64,
    pub analysis: AnalysisConfig,
}

impl ConfigSummary {
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(to_canonical_json(self).as_bytes());
        hex::encode(&digest[..8])
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("backend: {0}")]
    Backend(#[from] GatewayError),
    #[error("bundles come from different corpora ({0} vs {1})")]
    CorpusMismatch(String, String),
    #[error("comparison needs at least two prompts, got {0}")]
    TooFewPrompts(usize),
    #[error("bundles disagree on {0}")]
    ConflictingRuns(String),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    /// Process exit code: 1 config, 2 corpus, 3 backend.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Corpus(_) | RunError::CorpusMismatch(..) => 2,
            RunError::Backend(_) => 3,
            _ => 1,
        }
    }
}

/// Formats a temperature for labels and file names ("0", "1", "0.7").
pub fn temperature_label(t: f64) -> String {
    format!("{t}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(e: Experiment) -> ExperimentConfig {
        ExperimentConfig::new(e, "corpus.jsonl").with_cassette("c.jsonl")
    }

    #[test]
    fn defaults_validate() {
        for e in Experiment::ALL {
            cfg(e).validate().unwrap();
        }
        let e3 = cfg(Experiment::E3);
        assert_eq!(e3.iterations, 3);
        assert_eq!(e3.temperatures, [0.0, 1.0]);
    }

    #[test]
    fn prompt_sets_enforced() {
        let mut c = cfg(Experiment::E1);
        c.prompts = vec![PromptId::P2];
        assert!(matches!(c.validate(), Err(RunError::ConfigInvalid(_))));
        let mut c = cfg(Experiment::E2);
        c.prompts = vec![PromptId::P3];
        c.validate().unwrap();
        let mut c = cfg(Experiment::Compare);
        c.prompts = vec![PromptId::P3];
        assert!(c.validate().is_err());
    }

    #[test]
    fn e3_needs_two_iterations() {
        let mut c = cfg(Experiment::E3);
        c.iterations = 1;
        assert!(c.validate().is_err());
        c.iterations = 2;
        c.validate().unwrap();
        let mut c = cfg(Experiment::E2);
        c.iterations = 2;
        assert!(c.validate().is_err());
    }

    #[test]
    fn other_checks() {
        let mut c = cfg(Experiment::E2);
        c.cassette_path = None;
        assert!(c.validate().is_err());
        c.backend = BackendChoice::Live;
        c.validate().unwrap();
        c.temperatures = vec![3.0];
        assert!(c.validate().is_err());
        let mut c = cfg(Experiment::E4);
        c.analysis.ngram_sizes = vec![2];
        assert!(c.validate().is_err());
        let mut c = cfg(Experiment::E4);
        c.concepts = vec![Concept::Toxic, Concept::Toxic];
        assert!(c.validate().is_err());
    }

    #[test]
    fn fingerprint_ignores_order_and_paths() {
        let a = cfg(Experiment::E2);
        let mut b = a.clone();
        b.prompts.reverse();
        b.concepts.reverse();
        b.corpus_path = "elsewhere.jsonl".into();
        b.backend = BackendChoice::Live;
        assert_eq!(a.summary().fingerprint(), b.summary().fingerprint());
        b.seed = 7;
        assert_ne!(a.summary().fingerprint(), b.summary().fingerprint());
    }

    #[test]
    fn parse_names() {
        assert_eq!("3".parse::<Experiment>().unwrap(), Experiment::E3);
        assert_eq!("compare".parse::<Experiment>().unwrap(), Experiment::Compare);
        assert!("5".parse::<Experiment>().is_err());
        assert_eq!("replay".parse::<BackendChoice>().unwrap(), BackendChoice::Replay);
    }
}
