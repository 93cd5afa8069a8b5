//! Krippendorff's alpha over a coincidence matrix.

use serde::{Deserialize, Serialize};

use super::MetricsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Nominal,
    Interval,
}

impl Scale {
    fn delta2(self, a: f64, b: f64) -> f64 {
        match self {
            Scale::Nominal => {
                if a == b {
                    0.0
                } else {
                    1.0
                }
            }
            Scale::Interval => (a - b) * (a - b),
        }
    }
}

/// Observers (rows) by units (columns); `None` marks a missing value.
/// Nominal labels are encoded as numbers and compared for equality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityMatrix {
    pub units: Vec<String>,
    pub observers: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
    pub scale: Scale,
}

impl ReliabilityMatrix {
    pub fn new(
        units: Vec<String>,
        observers: Vec<String>,
        cells: Vec<Vec<Option<f64>>>,
        scale: Scale,
    ) -> Result<Self, MetricsError> {
        if cells.len() != observers.len() {
            return Err(MetricsError::InvalidMatrix(format!(
                "{} rows for {} observers",
                cells.len(),
                observers.len()
            )));
        }
        if let Some(bad) = cells.iter().position(|row| row.len() != units.len()) {
            return Err(MetricsError::InvalidMatrix(format!("row {bad} has {} cells", cells[bad].len())));
        }
        if cells.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(MetricsError::InvalidMatrix("non-finite value".into()));
        }
        Ok(ReliabilityMatrix { units, observers, cells, scale })
    }

    /// Matrix with generated ids, rows given per observer.
    pub fn from_rows(cells: Vec<Vec<Option<f64>>>, scale: Scale) -> Result<Self, MetricsError> {
        let n_units = cells.first().map_or(0, Vec::len);
        let units = (0..n_units).map(|u| format!("u{u}")).collect();
        let observers = (0..cells.len()).map(|o| format!("o{o}")).collect();
        Self::new(units, observers, cells, scale)
    }

    /// Non-missing values of one unit.
    fn unit_values(&self, unit: usize) -> Vec<f64> {
        self.cells.iter().filter_map(|row| row[unit]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alpha {
    pub value: f64,
    /// Every pairable value was identical, so expected disagreement is zero
    /// and `value` is 1.0 by convention.
    pub degenerate: bool,
    /// Number of pairable values (n in the coincidence matrix).
    pub pairable: usize,
}

pub fn krippendorff_alpha(m: &ReliabilityMatrix) -> Result<Alpha, MetricsError> {
    if m.observers.len() < 2 {
        return Err(MetricsError::InsufficientData);
    }
    let units: Vec<Vec<f64>> = (0..m.units.len()).map(|u| m.unit_values(u)).filter(|v| v.len() >= 2).collect();
    if units.is_empty() {
        return Err(MetricsError::InsufficientData);
    }

    let mut values: Vec<f64> = units.iter().flatten().copied().collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let index = |v: f64| values.binary_search_by(|x| x.total_cmp(&v)).expect("value present");

    let k = values.len();
    let mut coincidence = vec![0.0f64; k * k];
    for unit in &units {
        let weight = 1.0 / (unit.len() - 1) as f64;
        for (i, &a) in unit.iter().enumerate() {
            for (j, &b) in unit.iter().enumerate() {
                if i != j {
                    coincidence[index(a) * k + index(b)] += weight;
                }
            }
        }
    }

    let marginals: Vec<f64> = (0..k).map(|c| coincidence[c * k..(c + 1) * k].iter().sum()).collect();
    let n: f64 = marginals.iter().sum();
    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..k {
        for d in 0..k {
            let delta = m.scale.delta2(values[c], values[d]);
            observed += coincidence[c * k + d] * delta;
            expected += marginals[c] * marginals[d] * delta;
        }
    }
    observed /= n;
    expected /= n * (n - 1.0);

    let pairable = units.iter().map(Vec::len).sum();
    if expected == 0.0 {
        return Ok(Alpha { value: 1.0, degenerate: true, pairable });
    }
    Ok(Alpha { value: 1.0 - observed / expected, degenerate: false, pairable })
}
