//! Binary report, threshold sweep, and five-level score agreement on a
//! small hand-made sample.

use hot_annotate::metrics::{
    bin_probability, classification_report, display_metric, mturk_score, score_agreement_report, threshold_sweep,
    ClassificationReport, ScoreBin, MetricsError, DEFAULT_SWEEP,
};

fn print(report: &ClassificationReport) {
    println!("{:<6} {:>7} {:>9} {:>6} {:>8}", "Class", "Support", "Precision", "Recall", "F1-score");
    for r in &report.rows {
        println!(
            "{:<6} {:>7} {:>9} {:>6} {:>8}",
            r.class_label,
            r.support,
            display_metric(r.precision),
            display_metric(r.recall),
            display_metric(r.f1)
        );
    }
    println!("accuracy {}", display_metric(Some(report.accuracy)));
}

fn main() -> Result<(), MetricsError> {
    let truth = [true, false, false, true, false, false, true, false];
    let probs = [0.9, 0.2, 0.75, 0.6, 0.05, 0.1, 0.95, 0.3];
    let pred: Vec<bool> = probs.iter().map(|&p| p >= 0.7).collect();
    print(&classification_report(&pred, &truth)?);

    println!("\nsweep");
    for point in threshold_sweep(&probs, &truth, &DEFAULT_SWEEP)? {
        let yes = point.report.row("Yes").unwrap();
        println!("  t={} yes-F1={} recall={}", point.threshold, display_metric(yes.f1), display_metric(yes.recall));
    }

    let votes = [
        [true, true, true, true, false],
        [false; 5],
        [true, false, false, true, false],
        [true, true, false, true, false],
        [false, false, false, false, true],
        [false; 5],
        [true; 5],
        [true, false, true, false, false],
    ];
    let human: Vec<ScoreBin> = votes.iter().map(|v| mturk_score(v)).collect::<Result<_, _>>()?;
    let model: Vec<ScoreBin> = probs.iter().map(|&p| bin_probability(p)).collect::<Result<_, _>>()?;
    println!("\nscore agreement");
    print(&score_agreement_report(&model, &human)?);
    Ok(())
}
