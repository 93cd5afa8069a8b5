//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use hot_annotate::corpus::Concept;
use hot_annotate::experiment::{run_experiment, to_canonical_json, Experiment, ExperimentConfig, ItemStatus, ReportBundle};
use hot_annotate::metrics::{
    apply_threshold, bin_probability, classification_report, f1, krippendorff_alpha, score_agreement_report,
    threshold_sweep, ReliabilityMatrix, Scale, ScoreBin, DEFAULT_SWEEP, YES,
};
use hot_annotate::parser::{load_fixtures, parse_response, BinaryOutcome, ParseMode};
use hot_annotate::prompts::PromptId;
use hot_annotate::reasoning::{certainty_bin, venn_partition, CertaintyBin, HotTriple, LabeledItem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(elapsed: Duration, budget: Duration) -> Result<(), String> {
    ensure(elapsed <= budget, || format!("took {elapsed:?}, budget {budget:?}"))
}

// 1
fn f1_consistency() -> Outcome {
    let start = Instant::now();
    // (precision, recall, reported f1); the hateful "No" row of the second
    // table is left out because its f1 exceeds both inputs.
    let cases = [
        ("hateful yes, binary prompt", 0.30, 0.74, 0.43),
        ("offensive yes, binary prompt", 0.55, 0.85, 0.67),
        ("toxic yes, binary prompt", 0.39, 0.96, 0.55),
        ("hateful yes, probability prompt", 0.45, 0.34, 0.39),
        ("offensive yes, probability prompt", 0.67, 0.55, 0.61),
        ("toxic yes, probability prompt", 0.47, 0.86, 0.61),
    ];
    let mut worst: f64 = 0.0;
    for (name, p, r, want) in cases {
        let got = f1(p, r).ok_or_else(|| format!("{name}: f1 undefined"))?;
        let diff = (got - want).abs();
        worst = worst.max(diff);
        ensure(diff <= 0.015, || format!("{name}: f1({p}, {r}) = {got:.4}, table {want}"))?;
    }
    let typo = f1(0.92, 0.79).unwrap();
    ensure(typo <= 0.92, || format!("harmonic bound check on excluded row gave {typo}"))?;
    within_budget(start.elapsed(), Duration::from_millis(100))?;
    Ok(format!("6 cases, max deviation {worst:.4}; excluded row recomputes to {typo:.2}"))
}

// 2
fn venn_conservation() -> Outcome {
    let start = Instant::now();
    let raw = std::fs::read_to_string(common::tests_dir().join("fixtures/venn_tables.json")).map_err(|e| e.to_string())?;
    let tables: Value = serde_json::from_str(&raw).map_err(|e| e.to_string())?;
    let mut sums = Vec::new();
    for name in ["human_majority", "model_prompt4"] {
        let t = &tables[name];
        let total = t["total"].as_u64().unwrap() as usize;
        let mut items = Vec::new();
        let mut expected = Vec::new();
        for cell in t["cells"].as_array().unwrap() {
            let b = |i: usize| cell[i].as_bool().unwrap();
            let n = cell[3].as_u64().unwrap() as usize;
            let triple = HotTriple::new(b(0), b(1), b(2));
            for k in 0..n {
                items.push(LabeledItem::complete(format!("{}-{k}", triple.key()), b(0), b(1), b(2)));
            }
            expected.push((triple, n));
        }
        let part = venn_partition(&items).map_err(|e| e.to_string())?;
        ensure(part.total() == total, || format!("{name}: partition total {} vs {total}", part.total()))?;
        for (triple, n) in expected {
            ensure(part.count(triple) == n, || format!("{name}: cell {} {} vs {n}", triple.key(), part.count(triple)))?;
        }
        sums.push(total);
    }
    ensure(sums == [3481, 3470], || format!("fixture totals {sums:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..1000 {
        let n = rng.random_range(0..200);
        let items: Vec<LabeledItem> =
            (0..n).map(|i| LabeledItem::complete(format!("c{i}"), rng.random(), rng.random(), rng.random())).collect();
        let part = venn_partition(&items).map_err(|e| e.to_string())?;
        ensure(part.total() == n, || format!("case {case}: total {} vs {n}", part.total()))?;
        let cell_sum: usize = HotTriple::all().map(|t| part.count(t)).sum();
        ensure(cell_sum == n, || format!("case {case}: cells sum {cell_sum} vs {n}"))?;
    }
    within_budget(start.elapsed(), Duration::from_secs(1))?;
    Ok("fixtures sum to 3481 and 3470; 1000 random corpora conserved".into())
}

fn random_matrix(rng: &mut ChaCha8Rng, scale: Scale) -> Vec<Vec<Option<f64>>> {
    let observers = rng.random_range(2..=4);
    let units = rng.random_range(4..=10);
    let missing = rng.random_range(0.0..0.3);
    (0..observers)
        .map(|_| {
            (0..units)
                .map(|_| {
                    if rng.random_bool(missing) {
                        None
                    } else if scale == Scale::Nominal {
                        Some(rng.random_range(0..3) as f64)
                    } else {
                        Some((rng.random_range(0..=10) as f64) / 10.0)
                    }
                })
                .collect()
        })
        .collect()
}

// 3
fn alpha_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut compared = 0;
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let scale = if case % 2 == 0 { Scale::Nominal } else { Scale::Interval };
        let rows = random_matrix(&mut rng, scale);
        let oracle = common::alpha_by_pairs(&rows, scale == Scale::Interval);
        let got = krippendorff_alpha(&ReliabilityMatrix::from_rows(rows.clone(), scale).unwrap());
        match (oracle, got) {
            (Some(want), Ok(a)) => {
                ensure(!a.degenerate, || format!("case {case}: degenerate flag with oracle {want}"))?;
                let diff = (a.value - want).abs();
                worst = worst.max(diff);
                ensure(diff <= 1e-9, || format!("case {case}: alpha {} vs oracle {want}", a.value))?;
                compared += 1;
            }
            // Zero expected disagreement: every pairable value identical.
            (None, Ok(a)) => ensure(a.degenerate && a.value == 1.0, || format!("case {case}: {a:?} without oracle"))?,
            (None, Err(_)) => {}
            (Some(want), Err(e)) => return Err(format!("case {case}: error {e} but oracle {want}")),
        }
    }
    ensure(compared >= 180, || format!("only {compared} comparable matrices"))?;

    for case in 0..50 {
        let scale = if case % 2 == 0 { Scale::Nominal } else { Scale::Interval };
        let units = rng.random_range(4..=10);
        let observers = rng.random_range(2..=4);
        let mut row: Vec<Option<f64>> = (0..units).map(|u| Some((u % 3) as f64)).collect();
        row[0] = Some(0.0);
        row[1] = Some(1.0);
        let rows = vec![row; observers];
        let a = krippendorff_alpha(&ReliabilityMatrix::from_rows(rows, scale).unwrap()).map_err(|e| e.to_string())?;
        ensure(a.value == 1.0, || format!("perfect agreement case {case} gave {}", a.value))?;
    }
    within_budget(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("{compared}/200 matrices compared, max deviation {worst:.1e}; 50 perfect-agreement matrices = 1.0"))
}

fn check_rows<L: PartialEq + Copy>(
    report: &hot_annotate::metrics::ClassificationReport,
    pred: &[L],
    truth: &[L],
    classes: &[L],
    case: usize,
) -> Result<usize, String> {
    let (oracle, acc) = common::brute_force_rows(pred, truth, classes);
    ensure(report.rows.len() == oracle.len(), || format!("case {case}: row count"))?;
    ensure((report.accuracy - acc).abs() <= 1e-12, || format!("case {case}: accuracy {} vs {acc}", report.accuracy))?;
    let mut bounded = 0;
    for (row, want) in report.rows.iter().zip(&oracle) {
        let same = row.support == want.support
            && common::close(row.precision, want.precision, 1e-12)
            && common::close(row.recall, want.recall, 1e-12)
            && common::close(row.f1, want.f1, 1e-12);
        ensure(same, || format!("case {case}: {row:?} vs oracle {want:?}"))?;
        if let (Some(p), Some(r), Some(f)) = (row.precision, row.recall, row.f1) {
            let eps = 1e-12;
            ensure(p.min(r) - eps <= f && f <= p.max(r) + eps, || format!("case {case}: f1 {f} outside [{p}, {r}]"))?;
            bounded += 1;
        }
    }
    Ok(bounded)
}

// 4
fn metric_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut bounded = 0;
    for case in 0..500 {
        let n = rng.random_range(1..80);
        if case % 2 == 0 {
            let bias = rng.random_range(0.0..1.0);
            let truth: Vec<bool> = (0..n).map(|_| rng.random_bool(bias)).collect();
            let pred: Vec<bool> = (0..n).map(|_| rng.random_bool(bias)).collect();
            let report = classification_report(&pred, &truth).map_err(|e| e.to_string())?;
            bounded += check_rows(&report, &pred, &truth, &[true, false], case)?;
        } else {
            let pick = |rng: &mut ChaCha8Rng| ScoreBin::ALL[rng.random_range(0..6)];
            let truth: Vec<ScoreBin> = (0..n).map(|_| pick(&mut rng)).collect();
            let pred: Vec<ScoreBin> = (0..n).map(|_| pick(&mut rng)).collect();
            let report = score_agreement_report(&pred, &truth).map_err(|e| e.to_string())?;
            bounded += check_rows(&report, &pred, &truth, &ScoreBin::ALL, case)?;
        }
    }
    within_budget(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("500 instances match counting oracle; harmonic bound held on {bounded} defined rows"))
}

// 5
fn binning_exactness() -> Outcome {
    let start = Instant::now();
    for i in 0..=1000u32 {
        let p = i as f64 / 1000.0;
        let want = match i {
            0..=99 => ScoreBin::S00,
            100..=299 => ScoreBin::S02,
            300..=499 => ScoreBin::S04,
            500..=699 => ScoreBin::S06,
            700..=899 => ScoreBin::S08,
            _ => ScoreBin::S10,
        };
        let got = bin_probability(p).map_err(|e| e.to_string())?;
        ensure(got == want, || format!("bin_probability({p}) = {got}, want {want}"))?;
        let want = match i {
            0..=200 => CertaintyBin::Unlikely,
            201..=799 => CertaintyBin::Uncertain,
            _ => CertaintyBin::Likely,
        };
        let got = certainty_bin(p).map_err(|e| e.to_string())?;
        ensure(got == want, || format!("certainty_bin({p}) = {got:?}, want {want:?}"))?;
    }
    let edges = [(0.1, ScoreBin::S02), (0.3, ScoreBin::S04), (0.5, ScoreBin::S06), (0.7, ScoreBin::S08), (0.9, ScoreBin::S10)];
    for (p, want) in edges {
        ensure(bin_probability(p) == Ok(want), || format!("edge {p}"))?;
    }
    ensure(certainty_bin(0.2) == Ok(CertaintyBin::Unlikely), || "edge 0.2".into())?;
    ensure(certainty_bin(0.8) == Ok(CertaintyBin::Likely), || "edge 0.8".into())?;
    ensure(bin_probability(1.001).is_err() && certainty_bin(-0.001).is_err(), || "out of range accepted".into())?;
    within_budget(start.elapsed(), Duration::from_secs(1))?;
    Ok("1001 grid points and 7 boundaries exact".into())
}

// 6
fn parser_fixtures() -> Outcome {
    let start = Instant::now();
    let fixtures = load_fixtures(&common::data_dir().join("parser_fixtures.jsonl")).map_err(|e| e.to_string())?;
    let failures: Vec<String> = fixtures.iter().filter_map(|f| f.check().err()).collect();
    ensure(failures.is_empty(), || format!("{} fixture mismatches: {}", failures.len(), failures.join("; ")))?;

    let bin = |raw: &str, p: PromptId, m: ParseMode| parse_response(raw, p, m).ok().and_then(|o| o.binary());
    let prob = |raw: &str, p: PromptId| parse_response(raw, p, ParseMode::Strict).ok().and_then(|o| o.probability());
    ensure(bin("No.", PromptId::P2, ParseMode::Strict) == Some(BinaryOutcome::No), || "bare No.".into())?;
    ensure(prob("0.2", PromptId::P3) == Some(0.2), || "0.2".into())?;
    ensure(prob("0.95", PromptId::P3) == Some(0.95), || "0.95 unrounded".into())?;
    let split = parse_response("Yes.\nThe comment insults the reader.", PromptId::P4, ParseMode::Strict)
        .map_err(|e| format!("explanation split: {e:?}"))?;
    ensure(
        split.binary() == Some(BinaryOutcome::Yes) && split.explanation.as_deref() == Some("The comment insults the reader."),
        || format!("explanation split gave {split:?}"),
    )?;
    let hedge = "It depends on the context. Some readers may find it offensive, others may not.";
    ensure(bin(hedge, PromptId::P1, ParseMode::Lenient) == Some(BinaryOutcome::Uncertain), || "hedged answer".into())?;
    within_budget(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("{} fixtures and 5 named cases as expected", fixtures.len()))
}

// 7
fn threshold_monotonicity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..200 {
        let n = rng.random_range(1..100);
        let probs: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.5) { rng.random_range(0..=20) as f64 / 20.0 } else { rng.random_range(0.0..=1.0) })
            .collect();
        let truth: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        let sweep = threshold_sweep(&probs, &truth, &DEFAULT_SWEEP).map_err(|e| e.to_string())?;
        let mut last_pos = usize::MAX;
        let mut last_recall = f64::INFINITY;
        for point in &sweep {
            let pos = probs.iter().filter(|&&p| apply_threshold(p, point.threshold).unwrap()).count();
            ensure(pos <= last_pos, || format!("case {case}: positives rose at {}", point.threshold))?;
            last_pos = pos;
            if let Some(r) = point.report.row(YES).and_then(|row| row.recall) {
                ensure(r <= last_recall, || format!("case {case}: recall rose at {}", point.threshold))?;
                last_recall = r;
            }
        }
    }
    within_budget(start.elapsed(), Duration::from_secs(2))?;
    Ok("200 instances non-increasing across 0.5..0.9".into())
}

fn replay_config(e: Experiment) -> ExperimentConfig {
    ExperimentConfig::new(e, common::demo_corpus()).with_cassette(common::demo_cassette())
}

fn replay(cfg: &ExperimentConfig) -> Result<ReportBundle, String> {
    run_experiment(cfg).map_err(|e| format!("{}: {e}", cfg.experiment))
}

// 8
fn replay_determinism() -> Outcome {
    let start = Instant::now();
    let mut bytes = 0;
    for e in [Experiment::E1, Experiment::E2, Experiment::E3, Experiment::E4] {
        let cfg = replay_config(e);
        let a = to_canonical_json(&replay(&cfg)?);
        let b = to_canonical_json(&replay(&cfg)?);
        ensure(a == b, || format!("{e}: canonical JSON differs between runs"))?;
        bytes += a.len();
    }
    let mut cfg = replay_config(Experiment::E3);
    cfg.iterations = 2;
    cfg.temperatures = vec![0.0];
    let bundle = replay(&cfg)?;
    ensure(!bundle.alpha.is_empty(), || "no alpha rows".into())?;
    for row in &bundle.alpha {
        let concepts: BTreeSet<Concept> = row.cells.iter().map(|c| c.concept).collect();
        ensure(concepts.len() == 3, || format!("{}: {} concepts", row.prompt, concepts.len()))?;
        for cell in &row.cells {
            let v = cell.alpha.as_ref().map(|a| a.value);
            ensure(v == Some(1.0), || format!("{} {}: alpha {v:?}", row.prompt, cell.concept))?;
        }
    }
    within_budget(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("E1-E4 byte-identical ({bytes} bytes); two-iteration alpha = 1.0 for 3 concepts"))
}

// 9
fn conservation_ledger() -> Outcome {
    let start = Instant::now();
    let mut seen = [0usize; 4];
    let mut runs = 0;
    let mut cache_misses = 0;
    for e in Experiment::ALL {
        let bundle = replay(&replay_config(e))?;
        for run in &bundle.runs {
            let c = run.counts;
            let label = format!("{e} {} {} t={} it={}", run.prompt, run.concept, run.temperature, run.iteration);
            ensure(c.total() == bundle.corpus_size, || format!("{label}: {} counted vs {}", c.total(), bundle.corpus_size))?;
            ensure(run.items.len() == bundle.corpus_size, || format!("{label}: {} ledger items", run.items.len()))?;
            let ids: BTreeSet<&str> = run.items.iter().map(|i| i.comment_id.as_str()).collect();
            ensure(ids.len() == run.items.len(), || format!("{label}: duplicate ledger ids"))?;
            for item in &run.items {
                let slot = match item.status {
                    ItemStatus::Parsed => 0,
                    ItemStatus::Uncertain => 1,
                    ItemStatus::WrongClass => 2,
                    ItemStatus::Failed => 3,
                };
                seen[slot] += 1;
                if item.reason.as_deref().is_some_and(|r| r.contains("no recorded response")) {
                    cache_misses += 1;
                }
            }
            runs += 1;
        }
    }
    ensure(seen[1] > 0 && seen[2] > 0 && seen[3] > 0, || format!("cassette lacks anomalies: {seen:?}"))?;
    ensure(cache_misses > 0, || "no missing-key items".into())?;
    within_budget(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!(
        "{runs} runs conserved; parsed {} uncertain {} wrong_class {} failed {} ({cache_misses} missing keys)",
        seen[0], seen[1], seen[2], seen[3]
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("F1 consistency with reported tables", f1_consistency),
        ("Venn conservation", venn_conservation),
        ("Krippendorff alpha oracle equivalence", alpha_oracle),
        ("metric oracle equivalence", metric_oracle),
        ("binning exactness", binning_exactness),
        ("parser fixture corpus", parser_fixtures),
        ("threshold monotonicity", threshold_monotonicity),
        ("end-to-end replay determinism", replay_determinism),
        ("conservation ledger", conservation_ledger),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let ms = start.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail} ({ms} ms)", n + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {name}: {why} ({ms} ms)", n + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
