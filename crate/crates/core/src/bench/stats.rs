use crate::error::{Error, Result};

/// Summary columns of a run-time table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunStats {
    pub count: usize,
    pub arithmetic_mean: f64,
    pub geometric_mean: f64,
    pub min: f64,
    pub max: f64,
    /// Sample standard deviation (divisor `count - 1`), zero for one sample.
    pub std_dev: f64,
}

/// Statistics over strictly positive samples.
///
/// Rounding can push the computed means a few ulps past each other; both are
/// clamped so that `min <= geometric_mean <= arithmetic_mean <= max` holds.
pub fn compute_stats(samples: &[f64]) -> Result<RunStats> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(&bad) = samples.iter().find(|v| **v <= 0.0 || !v.is_finite()) {
        return Err(Error::NonpositiveSample(bad));
    }
    let count = samples.len();
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = (samples.iter().sum::<f64>() / count as f64).clamp(min, max);
    let log_mean = samples.iter().map(|v| v.ln()).sum::<f64>() / count as f64;
    let geometric_mean = log_mean.exp().clamp(min, mean);
    let std_dev = if count > 1 {
        let ss: f64 = samples.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (count - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(RunStats { count, arithmetic_mean: mean, geometric_mean, min, max, std_dev })
}
