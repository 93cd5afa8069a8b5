//! Cross-prompt grid built from separate experiment bundles.

use std::path::PathBuf;

use hot_annotate::experiment::{compare_prompts, run_experiment, Experiment, ExperimentConfig};
use hot_annotate::metrics::{display_metric, ThresholdConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let mut bundles = Vec::new();
    for e in [Experiment::E1, Experiment::E2, Experiment::E4] {
        let cfg = ExperimentConfig::new(e, data.join("demo_corpus.jsonl")).with_cassette(data.join("demo_cassette.jsonl"));
        bundles.push(run_experiment(&cfg)?);
    }
    let table = compare_prompts(&bundles, &ThresholdConfig::default())?;
    println!("{}", table.header);
    for r in table.rows.iter().filter(|r| r.class_label == "Yes") {
        println!(
            "{} {:<10} P={} R={} F1={} acc={}",
            r.prompt,
            r.concept.name(),
            display_metric(r.precision),
            display_metric(r.recall),
            display_metric(r.f1),
            display_metric(r.accuracy)
        );
    }
    Ok(())
}
