use std::collections::{BTreeMap, BTreeSet};

use super::bundle::{ComparisonRow, ComparisonTable, PromptRun, ReportBundle};
use super::RunError;
use crate::corpus::Concept;
use crate::metrics::{classification_report, ThresholdConfig, NO, YES};
use crate::prompts::PromptId;

/// Cross-prompt grid of per-class metrics over first-iteration runs.
///
/// Identical runs appearing in several bundles are counted once, so the
/// result does not depend on bundle order.
pub fn compare_prompts(bundles: &[ReportBundle], thresholds: &ThresholdConfig) -> Result<ComparisonTable, RunError> {
    thresholds.validate().map_err(|e| RunError::ConfigInvalid(format!("thresholds: {e}")))?;
    let fingerprints: BTreeSet<&str> = bundles.iter().map(|b| b.corpus_fingerprint.as_str()).collect();
    let mut fps = fingerprints.iter();
    let Some(&fp) = fps.next() else {
        return Err(RunError::TooFewPrompts(0));
    };
    if let Some(&other) = fps.next() {
        return Err(RunError::CorpusMismatch(fp.to_string(), other.to_string()));
    }
    let runs: Vec<&PromptRun> = bundles.iter().flat_map(|b| &b.runs).filter(|r| r.iteration == 0).collect();
    comparison_from_runs(&runs, fp, thresholds)
}

type RunKey = (PromptId, u64, Concept);

pub(crate) fn comparison_from_runs(
    runs: &[&PromptRun],
    corpus_fingerprint: &str,
    thresholds: &ThresholdConfig,
) -> Result<ComparisonTable, RunError> {
    let mut chosen: BTreeMap<RunKey, &PromptRun> = BTreeMap::new();
    for &run in runs {
        // Temperatures are non-negative, so bit order matches numeric order.
        let key = (run.prompt, run.temperature.to_bits(), run.concept);
        match chosen.get(&key) {
            Some(existing) if existing.items != run.items => {
                return Err(RunError::ConflictingRuns(format!(
                    "{} {} at temperature {}",
                    run.prompt, run.concept, run.temperature
                )));
            }
            Some(_) => {}
            None => {
                chosen.insert(key, run);
            }
        }
    }
    let prompts: BTreeSet<PromptId> = chosen.keys().map(|k| k.0).collect();
    if prompts.len() < 2 {
        return Err(RunError::TooFewPrompts(prompts.len()));
    }

    let mut rows = Vec::new();
    for run in chosen.values() {
        let pred = run.predicted(thresholds.get(run.concept));
        let (p, t): (Vec<bool>, Vec<bool>) =
            pred.iter().zip(&run.items).filter_map(|(p, i)| p.map(|p| (p, i.truth))).unzip();
        let report = classification_report(&p, &t).ok();
        for label in [YES, NO] {
            let metrics = report.as_ref().and_then(|r| r.row(label));
            rows.push(ComparisonRow {
                prompt: run.prompt,
                temperature: run.temperature,
                concept: run.concept,
                class_label: label.to_string(),
                support: metrics.map_or(0, |m| m.support),
                precision: metrics.and_then(|m| m.precision),
                recall: metrics.and_then(|m| m.recall),
                f1: metrics.and_then(|m| m.f1),
                accuracy: metrics.map(|m| m.accuracy),
            });
        }
    }
    let t = &thresholds.0;
    Ok(ComparisonTable {
        corpus_fingerprint: corpus_fingerprint.to_string(),
        thresholds: thresholds.clone(),
        header: format!("thresholds: hateful={} offensive={} toxic={}", t.hateful, t.offensive, t.toxic),
        rows,
    })
}
