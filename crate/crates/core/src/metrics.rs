use std::time::Duration;

use crate::error::{Error, Result};

/// Timing and work for one multiply or extraction.
#[derive(Clone, Debug, PartialEq)]
pub struct RunMetrics {
    pub partial_products: u64,
    pub elapsed_seconds: f64,
    /// Partial products per second.
    pub rate: f64,
    pub nodes: usize,
    pub scale_label: String,
}

// Below timer resolution; keeps the rate finite.
const MIN_ELAPSED: f64 = 1e-9;

impl RunMetrics {
    pub fn new(partial_products: u64, elapsed: Duration, nodes: usize, scale_label: String) -> Self {
        let elapsed_seconds = elapsed.as_secs_f64().max(MIN_ELAPSED);
        RunMetrics {
            partial_products,
            elapsed_seconds,
            rate: partial_products as f64 / elapsed_seconds,
            nodes,
            scale_label,
        }
    }
}

/// Speedup ratio of `rate` over a baseline rate.
pub fn compute_speedup(baseline_rate: f64, rate: f64) -> Result<f64> {
    // also rejects NaN
    if baseline_rate.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::ZeroBaseline);
    }
    Ok(rate / baseline_rate)
}
