//! Replays experiment 2 from the bundled cassette and writes JSON, CSV and
//! markdown reports.
//!
//! ```text
//! cargo run --example replay_experiment -- [out_dir]
//! ```

use std::path::PathBuf;

use hot_annotate::experiment::{emit_report, run_experiment, Experiment, ExperimentConfig, ReportFormat};
use hot_annotate::metrics::display_metric;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("hot-e2"));

    let cfg = ExperimentConfig::new(Experiment::E2, data.join("demo_corpus.jsonl"))
        .with_cassette(data.join("demo_cassette.jsonl"));
    let bundle = run_experiment(&cfg)?;

    for r in &bundle.reports {
        let Some(report) = &r.report else { continue };
        let yes = report.row("Yes").unwrap();
        println!(
            "{} {:<10} F1(yes)={} accuracy={} uncertain={} wrong_class={} failed={}",
            r.prompt,
            r.concept.name(),
            display_metric(yes.f1),
            display_metric(Some(report.accuracy)),
            r.distribution.uncertain,
            r.distribution.wrong_class,
            r.distribution.failed
        );
    }
    let files = emit_report(&bundle, &[ReportFormat::Json, ReportFormat::Csv, ReportFormat::Markdown], &out)?;
    println!("{} files in {}", files.len(), out.display());
    Ok(())
}
