//! Independent reference implementations and fixture helpers shared by the
//! integration tests.

#![allow(dead_code)]

use std::path::PathBuf;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn demo_corpus() -> PathBuf {
    data_dir().join("demo_corpus.jsonl")
}

pub fn demo_cassette() -> PathBuf {
    data_dir().join("demo_cassette.jsonl")
}

pub fn tests_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests")
}

/// Krippendorff's alpha by direct enumeration of value pairs.
///
/// Observed disagreement averages over ordered pairs within each unit,
/// each unit weighted by 1/(m_u - 1); expected disagreement averages over
/// every ordered pair of pairable values in the whole matrix. Returns
/// `None` when fewer than one unit is pairable or expected disagreement is
/// zero.
pub fn alpha_by_pairs(rows: &[Vec<Option<f64>>], interval: bool) -> Option<f64> {
    let n_units = rows.first().map_or(0, Vec::len);
    let delta = |a: f64, b: f64| if interval { (a - b).powi(2) } else if a == b { 0.0 } else { 1.0 };
    let mut pairable: Vec<f64> = Vec::new();
    let mut observed = 0.0;
    for u in 0..n_units {
        let vals: Vec<f64> = rows.iter().filter_map(|r| r[u]).collect();
        if vals.len() < 2 {
            continue;
        }
        let mut within = 0.0;
        for i in 0..vals.len() {
            for j in 0..vals.len() {
                if i != j {
                    within += delta(vals[i], vals[j]);
                }
            }
        }
        observed += within / (vals.len() - 1) as f64;
        pairable.extend(vals);
    }
    let n = pairable.len() as f64;
    if pairable.is_empty() {
        return None;
    }
    let mut expected = 0.0;
    for i in 0..pairable.len() {
        for j in 0..pairable.len() {
            if i != j {
                expected += delta(pairable[i], pairable[j]);
            }
        }
    }
    let d_o = observed / n;
    let d_e = expected / (n * (n - 1.0));
    if d_e == 0.0 {
        return None;
    }
    Some(1.0 - d_o / d_e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub support: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

/// Per-class one-vs-rest metrics by explicit counting.
pub fn brute_force_rows<L: PartialEq + Copy>(pred: &[L], truth: &[L], classes: &[L]) -> (Vec<OracleRow>, f64) {
    let mut rows = Vec::new();
    for &class in classes {
        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        for k in 0..pred.len() {
            let p = pred[k] == class;
            let t = truth[k] == class;
            if p && t {
                tp += 1;
            } else if p {
                fp += 1;
            } else if t {
                fn_ += 1;
            }
        }
        let precision = if tp + fp == 0 { None } else { Some(tp as f64 / (tp + fp) as f64) };
        let recall = if tp + fn_ == 0 { None } else { Some(tp as f64 / (tp + fn_) as f64) };
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            _ => None,
        };
        rows.push(OracleRow { support: tp + fn_, precision, recall, f1 });
    }
    let agree = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    (rows, agree as f64 / pred.len() as f64)
}

pub fn close(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs() <= tol,
        (None, None) => true,
        _ => false,
    }
}
