use std::fmt;

use serde::{Deserialize, Serialize};

use super::{per_class_report, ClassificationReport, MetricsError};

/// Six-level score shared by binned probabilities and 5-rater vote counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScoreBin {
    #[serde(rename = "0.0")]
    S00,
    #[serde(rename = "0.2")]
    S02,
    #[serde(rename = "0.4")]
    S04,
    #[serde(rename = "0.6")]
    S06,
    #[serde(rename = "0.8")]
    S08,
    #[serde(rename = "1.0")]
    S10,
}

impl ScoreBin {
    pub const ALL: [ScoreBin; 6] =
        [ScoreBin::S00, ScoreBin::S02, ScoreBin::S04, ScoreBin::S06, ScoreBin::S08, ScoreBin::S10];

    pub fn value(self) -> f64 {
        self as u8 as f64 * 0.2
    }

    pub fn label(self) -> &'static str {
        match self {
            ScoreBin::S00 => "0.0",
            ScoreBin::S02 => "0.2",
            ScoreBin::S04 => "0.4",
            ScoreBin::S06 => "0.6",
            ScoreBin::S08 => "0.8",
            ScoreBin::S10 => "1.0",
        }
    }

    /// The bin for `k` true votes out of five.
    pub fn from_true_count(k: usize) -> Option<ScoreBin> {
        ScoreBin::ALL.get(k).copied()
    }
}

impl fmt::Display for ScoreBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Half-open intervals [0, .1), [.1, .3), [.3, .5), [.5, .7), [.7, .9) and
/// the closed [.9, 1].
pub fn bin_probability(p: f64) -> Result<ScoreBin, MetricsError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(MetricsError::OutOfRange(p));
    }
    Ok(match p {
        p if p < 0.1 => ScoreBin::S00,
        p if p < 0.3 => ScoreBin::S02,
        p if p < 0.5 => ScoreBin::S04,
        p if p < 0.7 => ScoreBin::S06,
        p if p < 0.9 => ScoreBin::S08,
        _ => ScoreBin::S10,
    })
}

/// 0.2 per true vote; requires exactly five votes.
pub fn mturk_score(votes: &[bool]) -> Result<ScoreBin, MetricsError> {
    if votes.len() != 5 {
        return Err(MetricsError::WrongArity(votes.len()));
    }
    let k = votes.iter().filter(|&&v| v).count();
    Ok(ScoreBin::from_true_count(k).expect("k <= 5"))
}

/// Six-row one-vs-rest report, one row per score level.
pub fn score_agreement_report(pred: &[ScoreBin], truth: &[ScoreBin]) -> Result<ClassificationReport, MetricsError> {
    let classes: Vec<(ScoreBin, String)> = ScoreBin::ALL.iter().map(|b| (*b, b.label().to_string())).collect();
    per_class_report(pred, truth, &classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probability_bins() {
        assert_eq!(bin_probability(0.05), Ok(ScoreBin::S00));
        assert_eq!(bin_probability(0.1), Ok(ScoreBin::S02));
        assert_eq!(bin_probability(0.3), Ok(ScoreBin::S04));
        assert_eq!(bin_probability(0.5), Ok(ScoreBin::S06));
        assert_eq!(bin_probability(0.7), Ok(ScoreBin::S08));
        assert_eq!(bin_probability(0.9), Ok(ScoreBin::S10));
        assert_eq!(bin_probability(1.0), Ok(ScoreBin::S10));
        assert_eq!(bin_probability(0.0), Ok(ScoreBin::S00));
        assert!(bin_probability(1.01).is_err());
        assert!(bin_probability(f64::NAN).is_err());
    }

    #[test]
    fn vote_scores() {
        assert_eq!(mturk_score(&[true, false, false, false, false]), Ok(ScoreBin::S02));
        assert_eq!(mturk_score(&[false; 5]), Ok(ScoreBin::S00));
        assert_eq!(mturk_score(&[true; 5]), Ok(ScoreBin::S10));
        assert_eq!(mturk_score(&[true; 3]), Err(MetricsError::WrongArity(3)));
        assert!((ScoreBin::S06.value() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn score_report_shape() {
        let bins = [ScoreBin::S00, ScoreBin::S04, ScoreBin::S10, ScoreBin::S10];
        let r = score_agreement_report(&bins, &bins).unwrap();
        let labels: Vec<_> = r.rows.iter().map(|r| r.class_label.as_str()).collect();
        assert_eq!(labels, ["0.0", "0.2", "0.4", "0.6", "0.8", "1.0"]);
        assert_eq!(r.rows[5].support, 2);
        for row in &r.rows {
            for v in [row.precision, row.recall, row.f1].into_iter().flatten() {
                assert_eq!(v, 1.0);
            }
        }
        assert_eq!(r.rows[1].precision, None);
        assert_eq!(r.accuracy, 1.0);
    }
}
