//! Summary statistics for Monte-Carlo output.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::compensated_sum;

/// `Φ(x)`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `samples` and
/// `N(0, σ²)`.
pub fn ks_to_normal(samples: &[f64], sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::invalid(format!("σ² must be positive, got {sigma2}")));
    }
    if samples.len() < 2 {
        return Err(Error::invalid("KS distance needs at least two samples"));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("samples must be finite"));
    }
    let sigma = sigma2.sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = normal_cdf(x / sigma);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(d.clamp(0.0, 1.0))
}

pub fn mean(samples: &[f64]) -> f64 {
    compensated_sum(samples.iter().copied()) / samples.len() as f64
}

/// Unbiased sample variance.
pub fn variance(samples: &[f64]) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let m = mean(samples);
    compensated_sum(samples.iter().map(|v| (v - m) * (v - m))) / (samples.len() - 1) as f64
}

/// Linear-interpolation quantile of already sorted data, `p ∈ [0, 1]`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, 0.5)
}

/// Histogram plus moments of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSummary {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub mean: f64,
    pub variance: f64,
    /// Absent when the reference variance is zero.
    pub ks_to_normal: Option<f64>,
    pub replicates: usize,
}

impl HistogramSummary {
    /// Freedman–Diaconis bins unless `bins` is given; `sigma2` is the
    /// variance of the reference normal for the KS distance.
    pub fn new(samples: &[f64], sigma2: f64, bins: Option<usize>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("empty sample"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("samples must be finite"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
        let count = match bins {
            Some(0) => return Err(Error::invalid("bin count must be ≥ 1")),
            Some(b) => b,
            None => freedman_diaconis(&sorted),
        };
        let width = if hi > lo {
            (hi - lo) / count as f64
        } else {
            1.0
        };
        let bin_edges: Vec<f64> = (0..=count).map(|k| lo + k as f64 * width).collect();
        let mut counts = alloc::vec![0u64; count];
        for &v in &sorted {
            let k = (((v - lo) / width) as usize).min(count - 1);
            counts[k] += 1;
        }
        let ks = if sigma2 > 0.0 && samples.len() >= 2 {
            Some(ks_to_normal(samples, sigma2)?)
        } else {
            None
        };
        Ok(Self {
            bin_edges,
            counts,
            mean: mean(samples),
            variance: variance(samples),
            ks_to_normal: ks,
            replicates: samples.len(),
        })
    }
}

fn freedman_diaconis(sorted: &[f64]) -> usize {
    let n = sorted.len() as f64;
    let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    let range = sorted[sorted.len() - 1] - sorted[0];
    if iqr <= 0.0 || range <= 0.0 {
        return 1;
    }
    let width = 2.0 * iqr / n.cbrt();
    ((range / width).ceil() as usize).clamp(1, 10_000)
}
