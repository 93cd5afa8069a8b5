use std::collections::HashMap;

use super::bundle::*;
use super::compare::comparison_from_runs;
use super::{BackendChoice, Experiment, ExperimentConfig, RunError};
use crate::corpus::{load_corpus, AnnotationRecord, Concept, Corpus, Definitions, PerConcept};
use crate::gateway::{
    run_batch, AnnotationRequest, Backend, BatchItem, CassetteWriter, GatewayError, LiveBackend, LiveConfig,
    RecordingBackend, ReplayBackend, RetryPolicy,
};
use crate::metrics::{
    bin_probability, classification_report, krippendorff_alpha, mturk_score, score_agreement_report, threshold_sweep,
    ReliabilityMatrix, Scale, DEFAULT_SWEEP,
};
use crate::parser::{parse_response, BinaryOutcome, FailureReason, ParseMode, ParsedKind};
use crate::prompts::{PromptCatalog, PromptId};
use crate::reasoning::{
    certainty_bin, histogram, ngram_counts_with, sample_cell, venn_partition, CertaintyBin, HotTriple, LabeledItem,
    NgramOptions,
};

/// Loads the corpus, builds the configured backend, and runs the pipeline.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ReportBundle, RunError> {
    cfg.validate()?;
    let corpus = load_corpus(&cfg.corpus_path)?;
    let backend = build_backend(cfg)?;
    run_experiment_with(cfg, &corpus, backend.as_ref())
}

fn build_backend(cfg: &ExperimentConfig) -> Result<Box<dyn Backend>, RunError> {
    let live = || -> Result<LiveBackend, RunError> {
        let config = LiveConfig::from_env();
        if config.api_key.is_none() {
            return Err(GatewayError::MissingCredential.into());
        }
        Ok(LiveBackend::new(config)?)
    };
    let cassette = || cfg.cassette_path.as_deref().ok_or_else(|| RunError::ConfigInvalid("no cassette path".into()));
    Ok(match cfg.backend {
        BackendChoice::Replay => Box::new(ReplayBackend::from_path(cassette()?)?),
        BackendChoice::Live => Box::new(live()?),
        BackendChoice::Record => Box::new(RecordingBackend::new(live()?, CassetteWriter::open(cassette()?)?)),
    })
}

/// Runs the configured pipeline against an already-loaded corpus and any
/// backend.
pub fn run_experiment_with(
    cfg: &ExperimentConfig,
    corpus: &Corpus,
    backend: &dyn Backend,
) -> Result<ReportBundle, RunError> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(RunError::ConfigInvalid("corpus has no records".into()));
    }
    let cfg = cfg.normalized();
    let defs = match &cfg.definitions_path {
        Some(p) => Definitions::from_json_file(p).map_err(|e| RunError::ConfigInvalid(e.to_string()))?,
        None => Definitions::bundled(),
    };
    let mut catalog = PromptCatalog::bundled();
    if let Some(p) = &cfg.prompt_overrides {
        catalog = catalog.with_overrides_file(p)?;
    }

    let runs = collect_runs(&cfg, corpus, &catalog, &defs, backend)?;
    let first: Vec<&PromptRun> = runs.iter().filter(|r| r.iteration == 0).collect();
    let reports = first.iter().map(|r| concept_report(&cfg, r)).collect();
    let probability = first
        .iter()
        .filter(|r| r.prompt.is_probability())
        .map(|r| probability_report(&cfg, corpus, r))
        .collect();
    let alpha = if cfg.experiment == Experiment::E3 { alpha_rows(&cfg, &runs) } else { Vec::new() };
    let reasoning = (cfg.experiment == Experiment::E4).then(|| reasoning_report(&cfg, corpus, &first));
    let corpus_fingerprint = corpus.fingerprint();
    let comparison = match cfg.experiment {
        Experiment::Compare => Some(comparison_from_runs(&first, &corpus_fingerprint, &cfg.thresholds)?),
        _ => None,
    };
    let errors = error_entries(&runs);

    let summary = cfg.summary();
    Ok(ReportBundle {
        experiment: cfg.experiment,
        config_fingerprint: summary.fingerprint(),
        config: summary,
        corpus_fingerprint,
        corpus_size: corpus.len(),
        runs,
        reports,
        probability,
        alpha,
        reasoning,
        comparison,
        errors,
    })
}

fn collect_runs(
    cfg: &ExperimentConfig,
    corpus: &Corpus,
    catalog: &PromptCatalog,
    defs: &Definitions,
    backend: &dyn Backend,
) -> Result<Vec<PromptRun>, RunError> {
    let policy = RetryPolicy::default();
    let records = corpus.records();
    let mut runs = Vec::new();
    for &prompt in &cfg.prompts {
        for &temperature in &cfg.temperatures {
            let params = cfg.params.clone().with_temperature(temperature);
            for &concept in &cfg.concepts {
                let mut reqs = Vec::with_capacity(records.len() * cfg.iterations as usize);
                for iteration in 0..cfg.iterations {
                    for rec in records {
                        let rendered = catalog.render(prompt, concept, &rec.comment, defs)?;
                        reqs.push(AnnotationRequest::new(rendered, params.clone(), iteration));
                    }
                }
                let results = run_batch(&reqs, backend, cfg.concurrency, &policy)?;
                for (iteration, chunk) in results.chunks(records.len()).enumerate() {
                    let items: Vec<LedgerItem> =
                        chunk.iter().zip(records).map(|(res, rec)| classify(prompt, concept, rec, res)).collect();
                    runs.push(PromptRun {
                        prompt,
                        concept,
                        temperature,
                        iteration: iteration as u32,
                        counts: OutcomeCounts::tally(&items),
                        items,
                    });
                }
            }
        }
    }
    Ok(runs)
}

fn classify(prompt: PromptId, concept: Concept, rec: &AnnotationRecord, res: &BatchItem) -> LedgerItem {
    let mut item = LedgerItem {
        comment_id: rec.id().to_string(),
        status: ItemStatus::Failed,
        label: None,
        probability: None,
        explanation: None,
        truth: rec.label(concept),
        reason: None,
        excerpt: None,
    };
    let resp = match res {
        Ok(resp) => resp,
        Err(e) => {
            item.reason = Some(e.to_string());
            return item;
        }
    };
    match parse_response(&resp.text, prompt, ParseMode::for_prompt(prompt)) {
        Ok(out) => {
            item.explanation = out.explanation;
            match out.kind {
                ParsedKind::Binary(BinaryOutcome::Uncertain) => {
                    item.status = ItemStatus::Uncertain;
                    item.reason = Some("no definite yes or no".into());
                    item.excerpt = Some(excerpt(&resp.text));
                }
                ParsedKind::Binary(b) => {
                    item.status = ItemStatus::Parsed;
                    item.label = b.as_bool();
                }
                ParsedKind::Probability(p) => {
                    item.status = ItemStatus::Parsed;
                    item.probability = Some(p);
                }
            }
        }
        Err(f) => {
            item.status =
                if f.reason == FailureReason::WrongClass { ItemStatus::WrongClass } else { ItemStatus::Failed };
            item.reason = Some(f.reason.to_string());
            item.excerpt = Some(f.raw_excerpt);
        }
    }
    item
}

fn excerpt(raw: &str) -> String {
    raw.trim().chars().take(200).collect()
}

fn threshold_for(cfg: &ExperimentConfig, run: &PromptRun) -> Option<f64> {
    run.prompt.is_probability().then(|| cfg.thresholds.get(run.concept))
}

fn concept_report(cfg: &ExperimentConfig, run: &PromptRun) -> ConceptReport {
    let threshold = threshold_for(cfg, run);
    let pred = run.predicted(threshold.unwrap_or(0.5));
    let human_yes = run.items.iter().filter(|i| i.truth).count();
    let distribution = LabelDistribution {
        model_yes: pred.iter().filter(|p| **p == Some(true)).count(),
        model_no: pred.iter().filter(|p| **p == Some(false)).count(),
        uncertain: run.counts.uncertain,
        wrong_class: run.counts.wrong_class,
        failed: run.counts.failed,
        human_yes,
        human_no: run.items.len() - human_yes,
    };
    let (p, t): (Vec<bool>, Vec<bool>) =
        pred.iter().zip(&run.items).filter_map(|(p, i)| p.map(|p| (p, i.truth))).unzip();
    ConceptReport {
        prompt: run.prompt,
        concept: run.concept,
        temperature: run.temperature,
        threshold,
        distribution,
        report: classification_report(&p, &t).ok(),
    }
}

fn probability_report(cfg: &ExperimentConfig, corpus: &Corpus, run: &PromptRun) -> ProbabilityReport {
    let parsed: Vec<(&LedgerItem, f64)> = run.items.iter().filter_map(|i| i.probability.map(|p| (i, p))).collect();
    let probs: Vec<f64> = parsed.iter().map(|(_, p)| *p).collect();
    let truth: Vec<bool> = parsed.iter().map(|(i, _)| i.truth).collect();
    let sweep = threshold_sweep(&probs, &truth, &DEFAULT_SWEEP).unwrap_or_default();
    let histogram = histogram(&probs, cfg.analysis.histogram_bin_width).expect("validated bin width and parsed range");
    let score_agreement = (|| {
        let mut pred = Vec::with_capacity(parsed.len());
        let mut human = Vec::with_capacity(parsed.len());
        for (item, p) in &parsed {
            let rec = corpus.get(&item.comment_id)?;
            human.push(mturk_score(rec.votes.get(run.concept)).ok()?);
            pred.push(bin_probability(*p).ok()?);
        }
        score_agreement_report(&pred, &human).ok()
    })();
    let score_agreement = if corpus.records().iter().all(|r| r.arity() == 5) { score_agreement } else { None };
    ProbabilityReport { prompt: run.prompt, concept: run.concept, temperature: run.temperature, sweep, histogram, score_agreement }
}

fn alpha_rows(cfg: &ExperimentConfig, runs: &[PromptRun]) -> Vec<AlphaRow> {
    let mut rows = Vec::new();
    for &prompt in &cfg.prompts {
        let scale = if prompt.is_probability() { Scale::Interval } else { Scale::Nominal };
        for &temperature in &cfg.temperatures {
            let cells = cfg
                .concepts
                .iter()
                .map(|&concept| {
                    let observers: Vec<&PromptRun> = runs
                        .iter()
                        .filter(|r| r.prompt == prompt && r.concept == concept && r.temperature == temperature)
                        .collect();
                    let matrix_rows = observers
                        .iter()
                        .map(|r| {
                            r.items
                                .iter()
                                .map(|i| match i.status {
                                    ItemStatus::Parsed => i.probability.or(i.label.map(|l| if l { 1.0 } else { 0.0 })),
                                    _ => None,
                                })
                                .collect()
                        })
                        .collect();
                    let units = observers.first().map(|r| r.items.iter().map(|i| i.comment_id.clone()).collect());
                    let observer_ids = observers.iter().map(|r| format!("iteration {}", r.iteration)).collect();
                    let result = ReliabilityMatrix::new(units.unwrap_or_default(), observer_ids, matrix_rows, scale)
                        .and_then(|m| krippendorff_alpha(&m));
                    match result {
                        Ok(a) => AlphaCell { concept, alpha: Some(a), note: None },
                        Err(e) => AlphaCell { concept, alpha: None, note: Some(e.to_string()) },
                    }
                })
                .collect();
            rows.push(AlphaRow { prompt, temperature, scale, iterations: cfg.iterations, cells });
        }
    }
    rows
}

fn reasoning_report(cfg: &ExperimentConfig, corpus: &Corpus, first: &[&PromptRun]) -> ReasoningReport {
    let temperature = cfg.temperatures[0];
    let runs_of = |prompt: PromptId| -> Vec<&PromptRun> {
        first.iter().copied().filter(|r| r.prompt == prompt && r.temperature == temperature).collect()
    };
    let all_concepts = cfg.concepts.len() == Concept::ALL.len();
    let binary_runs = runs_of(PromptId::P4);
    let prob_runs = runs_of(PromptId::P5);

    let mut venn = None;
    let mut samples = Vec::new();
    if all_concepts && !binary_runs.is_empty() {
        let labels: HashMap<Concept, Vec<Option<bool>>> =
            binary_runs.iter().map(|r| (r.concept, r.predicted(0.5))).collect();
        let mut complete = Vec::new();
        let mut excluded = Vec::new();
        for (idx, rec) in corpus.records().iter().enumerate() {
            let item = LabeledItem {
                id: rec.id().to_string(),
                labels: PerConcept::from_fn(|c| labels[&c][idx]),
            };
            if item.triple().is_some() {
                complete.push(item);
            } else {
                excluded.push(item.id);
            }
        }
        let partition = venn_partition(&complete).expect("only complete items");
        samples = HotTriple::all()
            .enumerate()
            .map(|(k, cell)| CellSample {
                cell,
                ids: sample_cell(cell, &complete, cfg.analysis.samples_per_cell, cfg.seed.wrapping_add(k as u64)),
            })
            .collect();
        venn = Some(VennSummary { prompt: PromptId::P4, partition, excluded });
    }
    let human_venn = all_concepts.then(|| {
        let items: Vec<LabeledItem> = corpus
            .records()
            .iter()
            .map(|r| LabeledItem { id: r.id().to_string(), labels: r.majority.map(|_, &b| Some(b)) })
            .collect();
        venn_partition(&items).expect("majority labels are complete")
    });

    let certainty = prob_runs
        .iter()
        .map(|r| {
            let mut row =
                CertaintyRow { prompt: r.prompt, concept: r.concept, unlikely: 0, uncertain: 0, likely: 0 };
            for p in r.items.iter().filter_map(|i| i.probability) {
                match certainty_bin(p).expect("parsed probabilities are in range") {
                    CertaintyBin::Unlikely => row.unlikely += 1,
                    CertaintyBin::Uncertain => row.uncertain += 1,
                    CertaintyBin::Likely => row.likely += 1,
                }
            }
            row
        })
        .collect();

    let opts = NgramOptions { top_k: cfg.analysis.ngram_top_k, suppress_stopword_only: cfg.analysis.suppress_stopword_only };
    let mut ngrams = Vec::new();
    let mut push = |prompt: PromptId, group: NgramGroup, texts: Vec<&str>| {
        for &n in &cfg.analysis.ngram_sizes {
            let table = ngram_counts_with(&texts, n, &opts).expect("validated n");
            ngrams.push(NgramReport { prompt, group, documents: texts.len(), table });
        }
    };
    for runs in [&binary_runs, &prob_runs] {
        for r in runs.iter() {
            push(r.prompt, NgramGroup::Concept(r.concept), explained(r).into_iter().map(|(_, e)| e).collect());
        }
    }
    if !binary_runs.is_empty() {
        for answer in [true, false] {
            let texts = binary_runs
                .iter()
                .flat_map(|r| explained(r))
                .filter(|(i, _)| i.label == Some(answer))
                .map(|(_, e)| e)
                .collect();
            push(PromptId::P4, NgramGroup::Answer(answer), texts);
        }
    }
    if !prob_runs.is_empty() {
        for bin in CertaintyBin::ALL {
            let texts = prob_runs
                .iter()
                .flat_map(|r| explained(r))
                .filter(|(i, _)| i.probability.and_then(|p| certainty_bin(p).ok()) == Some(bin))
                .map(|(_, e)| e)
                .collect();
            push(PromptId::P5, NgramGroup::Certainty(bin), texts);
        }
    }

    ReasoningReport { venn, human_venn, certainty, ngrams, samples }
}

fn explained(r: &PromptRun) -> Vec<(&LedgerItem, &str)> {
    r.items
        .iter()
        .filter(|i| i.status == ItemStatus::Parsed)
        .filter_map(|i| i.explanation.as_deref().map(|e| (i, e)))
        .collect()
}

fn error_entries(runs: &[PromptRun]) -> Vec<ErrorEntry> {
    runs.iter()
        .flat_map(|r| {
            r.items.iter().filter(|i| i.status != ItemStatus::Parsed).map(move |i| ErrorEntry {
                prompt: r.prompt,
                concept: r.concept,
                temperature: r.temperature,
                iteration: r.iteration,
                comment_id: i.comment_id.clone(),
                status: i.status,
                reason: i.reason.clone(),
                excerpt: i.excerpt.clone(),
            })
        })
        .collect()
}
