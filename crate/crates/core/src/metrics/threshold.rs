use serde::{Deserialize, Serialize};

use super::{classification_report, ClassificationReport, MetricsError};
use crate::corpus::{Concept, PerConcept};

/// The five cut-offs swept over probability outputs.
pub const DEFAULT_SWEEP: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];

/// Per-concept probability cut-off. A value at or above the threshold is
/// positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig(pub PerConcept<f64>);

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig(PerConcept { hateful: 0.7, offensive: 0.7, toxic: 0.9 })
    }
}

impl ThresholdConfig {
    pub fn new(hateful: f64, offensive: f64, toxic: f64) -> Result<Self, MetricsError> {
        let cfg = ThresholdConfig(PerConcept { hateful, offensive, toxic });
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        for (_, &t) in self.0.iter() {
            check_unit(t)?;
        }
        Ok(())
    }

    pub fn get(&self, c: Concept) -> f64 {
        *self.0.get(c)
    }

    pub fn apply(&self, c: Concept, p: f64) -> Result<bool, MetricsError> {
        apply_threshold(p, self.get(c))
    }
}

fn check_unit(v: f64) -> Result<(), MetricsError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(MetricsError::OutOfRange(v))
    }
}

pub fn apply_threshold(p: f64, t: f64) -> Result<bool, MetricsError> {
    check_unit(p)?;
    check_unit(t)?;
    Ok(p >= t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub report: ClassificationReport,
}

/// One binary report per threshold. Thresholds must be ascending.
pub fn threshold_sweep(probs: &[f64], truth: &[bool], thresholds: &[f64]) -> Result<Vec<SweepPoint>, MetricsError> {
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(MetricsError::UnsortedThresholds);
    }
    thresholds
        .iter()
        .map(|&t| {
            let pred = probs.iter().map(|&p| apply_threshold(p, t)).collect::<Result<Vec<_>, _>>()?;
            Ok(SweepPoint { threshold: t, report: classification_report(&pred, truth)? })
        })
        .collect()
}
