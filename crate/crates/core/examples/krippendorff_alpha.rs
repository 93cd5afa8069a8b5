//! Agreement across repeated runs, nominal and interval.

use hot_annotate::metrics::{krippendorff_alpha, MetricsError, ReliabilityMatrix, Scale};

fn main() -> Result<(), MetricsError> {
    // Three runs over eight comments; None marks an unparsed answer.
    let binary = vec![
        vec![Some(1.0), Some(0.0), Some(0.0), Some(1.0), Some(0.0), Some(1.0), Some(0.0), Some(0.0)],
        vec![Some(1.0), Some(0.0), Some(0.0), Some(1.0), Some(0.0), Some(1.0), None, Some(0.0)],
        vec![Some(1.0), Some(0.0), Some(1.0), Some(1.0), Some(0.0), Some(1.0), Some(0.0), Some(0.0)],
    ];
    let a = krippendorff_alpha(&ReliabilityMatrix::from_rows(binary, Scale::Nominal)?)?;
    println!("binary answers: alpha = {:.3} over {} pairable values", a.value, a.pairable);

    let scores = vec![
        vec![Some(0.9), Some(0.1), Some(0.2), Some(0.8), Some(0.0), Some(0.7)],
        vec![Some(0.8), Some(0.1), Some(0.3), Some(0.8), Some(0.05), Some(0.7)],
        vec![Some(0.9), Some(0.2), Some(0.2), Some(0.9), Some(0.0), Some(0.6)],
    ];
    let a = krippendorff_alpha(&ReliabilityMatrix::from_rows(scores, Scale::Interval)?)?;
    println!("probability scores: alpha = {:.3}", a.value);

    let same = vec![vec![Some(0.0); 4], vec![Some(0.0); 4]];
    let a = krippendorff_alpha(&ReliabilityMatrix::from_rows(same, Scale::Nominal)?)?;
    println!("constant answers: alpha = {} (degenerate = {})", a.value, a.degenerate);
    Ok(())
}
