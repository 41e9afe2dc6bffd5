//! Ranking score and reputation–error correlation.

use std::cmp::Ordering;

use thiserror::Error;

use crate::graph::BenchmarkSet;
use crate::synth::SynthTruth;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("empty benchmark set")]
    EmptyBenchmark,
    #[error("benchmark item {item} out of range for {num_items} items")]
    BenchmarkOutOfRange { item: usize, num_items: usize },
    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("correlation needs at least 2 values, got {0}")]
    TooShort(usize),
    #[error("fraction {0} outside (0, 1]")]
    BadFraction(f64),
}

/// Mean normalized rank of the benchmark items; lower is better.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankingScore {
    pub value: f64,
    pub benchmark_size: usize,
}

/// Descending by quality, unrated (NaN) last.
fn by_quality_desc(a: f64, b: f64) -> Ordering {
    match (a.is_nan(), b.is_nan()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        (false, false) => b.partial_cmp(&a).unwrap(),
    }
}

/// 1-based position of every item in the descending quality order, ties
/// sharing the average of the positions they span.
pub fn midranks(qualities: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..qualities.len()).collect();
    order.sort_by(|&a, &b| by_quality_desc(qualities[a], qualities[b]));
    let mut ranks = vec![0.0; qualities.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len()
            && by_quality_desc(qualities[order[start]], qualities[order[end]]) == Ordering::Equal
        {
            end += 1;
        }
        // positions start+1 ..= end
        let mid = (start + 1 + end) as f64 / 2.0;
        for &item in &order[start..end] {
            ranks[item] = mid;
        }
        start = end;
    }
    ranks
}

/// `RS = (1/|E|) Σ_{α∈E} D_α / M` with `M = qualities.len()`.
pub fn ranking_score(
    qualities: &[f64],
    benchmark: &BenchmarkSet,
) -> Result<RankingScore, MetricError> {
    if benchmark.is_empty() {
        return Err(MetricError::EmptyBenchmark);
    }
    let m = qualities.len();
    if let Some(&item) = benchmark.items().iter().find(|&&i| i >= m) {
        return Err(MetricError::BenchmarkOutOfRange { item, num_items: m });
    }
    let ranks = midranks(qualities);
    let total: f64 = benchmark.items().iter().map(|&a| ranks[a] / m as f64).sum();
    Ok(RankingScore {
        value: total / benchmark.len() as f64,
        benchmark_size: benchmark.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub value: f64,
    /// Set when either input had zero variance; `value` is then 0.
    pub degenerate: bool,
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation, MetricError> {
    if x.len() != y.len() {
        return Err(MetricError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(MetricError::TooShort(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Ok(Correlation {
            value: 0.0,
            degenerate: true,
        });
    }
    Ok(Correlation {
        value: (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0),
        degenerate: false,
    })
}

/// Pearson(R_i, e_i) over users.
pub fn reputation_error_correlation(
    reputations: &[f64],
    true_errors: &[f64],
) -> Result<Correlation, MetricError> {
    pearson(reputations, true_errors)
}

/// Indices of the `⌈fraction·n⌉` largest values; ties at the cut go to the
/// lower index.
pub fn top_fraction(values: &[f64], fraction: f64) -> Result<Vec<usize>, MetricError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(MetricError::BadFraction(fraction));
    }
    let count = ((fraction * values.len() as f64) - 1e-9).ceil().max(0.0) as usize;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| by_quality_desc(values[a], values[b]).then(a.cmp(&b)));
    order.truncate(count.min(values.len()));
    order.sort_unstable();
    Ok(order)
}

/// Benchmark of the items with the highest intrinsic quality.
pub fn top_fraction_benchmark(
    truth: &SynthTruth,
    fraction: f64,
) -> Result<BenchmarkSet, MetricError> {
    let n = truth.intrinsic_quality.len();
    let items = top_fraction(&truth.intrinsic_quality, fraction)?;
    BenchmarkSet::new(items, n).map_err(|_| MetricError::EmptyBenchmark)
}
