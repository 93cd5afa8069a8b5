//! Agreement metrics between model labels and human majority labels.
//!
//! Zero denominators produce `None` rather than 0 so that undefined cells
//! never leak into averages; reports render them as "—".

mod alpha;
mod bins;
mod threshold;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use alpha::{krippendorff_alpha, Alpha, ReliabilityMatrix, Scale};
pub use bins::{bin_probability, mturk_score, score_agreement_report, ScoreBin};
pub use threshold::{apply_threshold, threshold_sweep, SweepPoint, ThresholdConfig, DEFAULT_SWEEP};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn predicted_positive(&self) -> usize {
        self.tp + self.fp
    }
}

/// 2×2 contingency counts with `truth` as the reference.
pub fn confusion(pred: &[bool], truth: &[bool]) -> Result<ConfusionCounts, MetricsError> {
    check_lengths(pred.len(), truth.len())?;
    let mut c = ConfusionCounts::default();
    for (&p, &t) in pred.iter().zip(truth) {
        match (p, t) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

fn check_lengths(pred: usize, truth: usize) -> Result<(), MetricsError> {
    if pred != truth {
        return Err(MetricsError::LengthMismatch { pred, truth });
    }
    if pred == 0 {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn precision(c: &ConfusionCounts) -> Option<f64> {
    ratio(c.tp, c.tp + c.fp)
}

pub fn recall(c: &ConfusionCounts) -> Option<f64> {
    ratio(c.tp, c.tp + c.fn_)
}

/// Harmonic mean of precision and recall; undefined when both are zero.
pub fn f1(p: f64, r: f64) -> Option<f64> {
    (p + r > 0.0).then(|| 2.0 * p * r / (p + r))
}

pub fn accuracy(c: &ConfusionCounts) -> Option<f64> {
    ratio(c.tp + c.tn, c.total())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub class_label: String,
    pub support: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub accuracy: f64,
}

impl MetricsRow {
    fn from_counts(label: String, c: &ConfusionCounts, accuracy: f64) -> Self {
        let p = precision(c);
        let r = recall(c);
        MetricsRow {
            class_label: label,
            support: c.tp + c.fn_,
            precision: p,
            recall: r,
            f1: p.zip(r).and_then(|(p, r)| f1(p, r)),
            accuracy,
        }
    }
}

/// Per-class rows plus the shared accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub rows: Vec<MetricsRow>,
    pub accuracy: f64,
    pub total: usize,
}

impl ClassificationReport {
    pub fn row(&self, label: &str) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.class_label == label)
    }
}

/// One-vs-rest report over an explicit class list.
pub fn per_class_report<L: PartialEq + Copy>(
    pred: &[L],
    truth: &[L],
    classes: &[(L, String)],
) -> Result<ClassificationReport, MetricsError> {
    check_lengths(pred.len(), truth.len())?;
    let agree = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    let accuracy = agree as f64 / pred.len() as f64;
    let rows = classes
        .iter()
        .map(|(class, label)| {
            let p: Vec<bool> = pred.iter().map(|x| x == class).collect();
            let t: Vec<bool> = truth.iter().map(|x| x == class).collect();
            let c = confusion(&p, &t).expect("lengths already checked");
            MetricsRow::from_counts(label.clone(), &c, accuracy)
        })
        .collect();
    Ok(ClassificationReport { rows, accuracy, total: pred.len() })
}

pub const YES: &str = "Yes";
pub const NO: &str = "No";

/// Binary report with one row for "Yes" and one for "No".
pub fn classification_report(pred: &[bool], truth: &[bool]) -> Result<ClassificationReport, MetricsError> {
    per_class_report(pred, truth, &[(true, YES.to_string()), (false, NO.to_string())])
}

/// Rounds half away from zero to `places` decimals, tolerating binary
/// representation error at the halfway point.
pub fn round_half_up(x: f64, places: i32) -> f64 {
    let scale = 10f64.powi(places);
    let scaled = x * scale;
    let nudged = scaled + scaled.signum() * 1e-9;
    nudged.round() / scale
}

/// Two-decimal display string; undefined values render as "—".
pub fn display_metric(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{:.2}", round_half_up(x, 2)),
        None => "\u{2014}".to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("prediction and truth lengths differ ({pred} vs {truth})")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("no items to compare")]
    Empty,
    #[error("value {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("thresholds must be sorted ascending")]
    UnsortedThresholds,
    #[error("not enough pairable values to compute agreement")]
    InsufficientData,
    #[error("expected 5 votes, got {0}")]
    WrongArity(usize),
    #[error("invalid reliability matrix: {0}")]
    InvalidMatrix(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const T: bool = true;
    const F: bool = false;

    #[test]
    fn confusion_examples() {
        let c = confusion(&[T, T, F, F], &[T, F, F, T]).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 1, tn: 1, fp: 1, fn_: 1 });
        let c = confusion(&[T; 4], &[T; 4]).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 4, ..Default::default() });
        let truth = [T, F, T, F, F];
        let pred: Vec<bool> = truth.iter().map(|t| !t).collect();
        let c = confusion(&pred, &truth).unwrap();
        assert_eq!((c.tp, c.tn), (0, 0));
        assert_eq!(confusion(&[T], &[T, F]), Err(MetricsError::LengthMismatch { pred: 1, truth: 2 }));
        assert_eq!(confusion(&[], &[]), Err(MetricsError::Empty));
    }

    #[test]
    fn f1_matches_published_rows() {
        assert_eq!(round_half_up(f1(0.30, 0.74).unwrap(), 2), 0.43);
        assert_eq!(round_half_up(f1(0.55, 0.85).unwrap(), 2), 0.67);
        assert!((f1(0.30, 0.74).unwrap() - 0.42692).abs() < 1e-4);
        assert_eq!(f1(0.5, 0.5), Some(0.5));
        assert_eq!(f1(0.0, 0.0), None);
    }

    #[test]
    fn undefined_denominators() {
        let c = ConfusionCounts { tp: 0, fp: 0, tn: 3, fn_: 2 };
        assert_eq!(precision(&c), None);
        assert_eq!(recall(&c), Some(0.0));
        assert_eq!(accuracy(&ConfusionCounts::default()), None);
        assert_eq!(display_metric(None), "—");
    }

    #[test]
    fn hand_enumerated_report() {
        // Yes: tp=1 fp=1 fn=0; No: tp=2 fp=0 fn=1; 3 of 4 agree.
        let r = classification_report(&[T, T, F, F], &[T, F, F, F]).unwrap();
        let yes = r.row(YES).unwrap();
        assert_eq!((yes.precision, yes.recall), (Some(0.5), Some(1.0)));
        assert!((yes.f1.unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(yes.support, 1);
        let no = r.row(NO).unwrap();
        assert_eq!(no.precision, Some(1.0));
        assert!((no.recall.unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((no.f1.unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(no.support, 3);
        assert_eq!(r.accuracy, 0.75);
        assert_eq!(yes.accuracy, no.accuracy);
    }

    #[test]
    fn perfect_report() {
        let r = classification_report(&[T, F, T], &[T, F, T]).unwrap();
        for row in &r.rows {
            assert_eq!((row.precision, row.recall, row.f1), (Some(1.0), Some(1.0), Some(1.0)));
        }
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(round_half_up(0.425, 2), 0.43);
        assert_eq!(round_half_up(0.675, 2), 0.68);
        assert_eq!(round_half_up(0.4249, 2), 0.42);
        assert_eq!(display_metric(Some(0.665)), "0.67");
        assert_eq!(display_metric(Some(1.0)), "1.00");
    }

    proptest! {
        #[test]
        fn label_swap_duality(pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..40)) {
            let (pred, truth): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
            let a = classification_report(&pred, &truth).unwrap();
            let np: Vec<bool> = pred.iter().map(|x| !x).collect();
            let nt: Vec<bool> = truth.iter().map(|x| !x).collect();
            let b = classification_report(&np, &nt).unwrap();
            prop_assert_eq!(a.accuracy, b.accuracy);
            let strip = |r: &MetricsRow| (r.support, r.precision, r.recall, r.f1);
            prop_assert_eq!(strip(&a.rows[0]), strip(&b.rows[1]));
            prop_assert_eq!(strip(&a.rows[1]), strip(&b.rows[0]));
        }

        #[test]
        fn metrics_bounded(pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..40)) {
            let (pred, truth): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
            let r = classification_report(&pred, &truth).unwrap();
            for row in &r.rows {
                for v in [row.precision, row.recall, row.f1].into_iter().flatten() {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
                if let (Some(p), Some(rc), Some(f)) = (row.precision, row.recall, row.f1) {
                    prop_assert!(p.min(rc) <= f + 1e-12 && f <= p.max(rc) + 1e-12);
                }
            }
            let c = confusion(&pred, &truth).unwrap();
            prop_assert_eq!(c.total(), pred.len());
        }
    }
}
