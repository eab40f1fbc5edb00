//! Regression metrics, histograms and the Bhattacharyya distance.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Added inside the logarithm of the Bhattacharyya distance so that
/// disjoint histograms give a large finite distance.
pub const BHATTACHARYYA_FLOOR: f64 = 1e-12;

/// Point-prediction metrics. `r2` and `pearson` are `None` when `y_true` is constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMetrics {
    pub mse: f64,
    pub mae: f64,
    pub r2: Option<f64>,
    pub pearson: Option<f64>,
}

impl PointMetrics {
    pub fn r2(&self) -> Result<f64> {
        self.r2.ok_or(Error::UndefinedMetric("R² needs a non-constant y_true"))
    }

    pub fn pearson(&self) -> Result<f64> {
        self.pearson.ok_or(Error::UndefinedMetric("Pearson correlation needs a non-constant y_true"))
    }
}

/// One row of a results table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub mse: f64,
    pub mae: f64,
    pub r2: f64,
    pub bhattacharyya: f64,
    pub pearson: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// MSE, MAE, R² (residual form `1 - SS_res/SS_tot`) and Pearson correlation.
///
/// If the predictions are constant while `y_true` is not, the correlation is
/// reported as 0.
pub fn point_metrics(y_true: &[f64], y_pred: &[f64]) -> Result<PointMetrics> {
    if y_true.is_empty() {
        return Err(Error::EmptySample);
    }
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch { expected: y_true.len(), got: y_pred.len() });
    }
    let n = y_true.len() as f64;
    let mse = y_true.iter().zip(y_pred).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
    let mae = y_true.iter().zip(y_pred).map(|(a, b)| libm::fabs(a - b)).sum::<f64>() / n;

    let my = mean(y_true);
    let mp = mean(y_pred);
    let ss_tot: f64 = y_true.iter().map(|y| (y - my) * (y - my)).sum();
    if !(ss_tot > 0.0) {
        return Ok(PointMetrics { mse, mae, r2: None, pearson: None });
    }
    let ss_res = residual_sum(y_true, y_pred);
    let r2 = 1.0 - ss_res / ss_tot;

    let ss_pred: f64 = y_pred.iter().map(|p| (p - mp) * (p - mp)).sum();
    let pearson = if ss_pred > 0.0 {
        let cov: f64 = y_true.iter().zip(y_pred).map(|(y, p)| (y - my) * (p - mp)).sum();
        (cov / libm::sqrt(ss_tot * ss_pred)).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    Ok(PointMetrics { mse, mae, r2: Some(r2), pearson: Some(pearson) })
}

pub fn residual_sum(y_true: &[f64], y_pred: &[f64]) -> f64 {
    y_true.iter().zip(y_pred).map(|(y, p)| (y - p) * (y - p)).sum()
}

pub fn total_sum(y_true: &[f64]) -> f64 {
    let m = mean(y_true);
    y_true.iter().map(|y| (y - m) * (y - m)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    /// Probability mass per bin.
    pub density: Vec<f64>,
    /// Number of values that fell outside the edges and were clamped into a boundary bin.
    pub clamped: usize,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.density.len()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

/// `bins` equal-width bins over `[lo, hi]`.
pub fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Result<Vec<f64>> {
    if bins == 0 || !(hi > lo) {
        return Err(Error::Config(alloc::format!("cannot build {bins} bins over [{lo}, {hi}]")));
    }
    let w = (hi - lo) / bins as f64;
    let mut e: Vec<f64> = (0..bins).map(|i| lo + i as f64 * w).collect();
    e.push(hi);
    Ok(e)
}

/// Normalized bin masses. Bins are right-open except the last; values outside
/// the edges go to the nearest boundary bin and are counted in `clamped`.
pub fn histogram(values: &[f64], edges: &[f64]) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("histogram edges must be strictly increasing with at least one bin".into()));
    }
    let bins = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[bins]);
    let mut counts = alloc::vec![0usize; bins];
    let mut clamped = 0;
    for &v in values {
        let b = if v.is_nan() {
            return Err(Error::InvalidParams("histogram of NaN".into()));
        } else if v < lo {
            clamped += 1;
            0
        } else if v >= hi {
            if v > hi {
                clamped += 1;
            }
            bins - 1
        } else {
            // first edge strictly greater than v, minus one
            edges.partition_point(|e| *e <= v) - 1
        };
        counts[b] += 1;
    }
    let n = values.len() as f64;
    let density = counts.iter().map(|&c| c as f64 / n).collect();
    Ok(Histogram { edges: edges.to_vec(), density, clamped })
}

/// `-ln(Σ_b √(p_b·q_b) + ε)`, clamped at 0.
pub fn bhattacharyya(p: &Histogram, q: &Histogram) -> Result<f64> {
    if p.edges != q.edges || p.density.len() != q.density.len() {
        return Err(Error::IncompatibleHistogram("bin edges differ"));
    }
    let bc: f64 = p.density.iter().zip(&q.density).map(|(a, b)| libm::sqrt(a * b)).sum();
    Ok(bhattacharyya_from_masses(bc))
}

fn bhattacharyya_from_masses(coefficient: f64) -> f64 {
    (-libm::log(coefficient + BHATTACHARYYA_FLOOR)).max(0.0)
}

/// Bhattacharyya distance between raw mass vectors over the same bins.
pub fn bhattacharyya_masses(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::IncompatibleHistogram("bin counts differ"));
    }
    Ok(bhattacharyya_from_masses(p.iter().zip(q).map(|(a, b)| libm::sqrt(a * b)).sum()))
}
