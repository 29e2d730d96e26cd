//! Empirical CDF and windowed hit fractions.

use super::window::OnTimeWindow;
use crate::error::{Error, Result};
use crate::time::Secs;

/// Sorted samples supporting O(log n) CDF queries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalCdf {
    sorted: Vec<Secs>,
}

impl EmpiricalCdf {
    pub fn new(samples: &[Secs]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Argument("empirical CDF of an empty sample".into()));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_unstable();
        Ok(EmpiricalCdf { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Fraction of samples `<= x`.
    pub fn cdf(&self, x: Secs) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.len() as f64
    }

    /// Number of samples in `[lo, hi]`.
    pub fn count_between(&self, lo: Secs, hi: Secs) -> usize {
        if hi < lo {
            return 0;
        }
        let below = self.sorted.partition_point(|&s| s < lo);
        let upto = self.sorted.partition_point(|&s| s <= hi);
        upto - below
    }

    /// Fraction of samples in `[x + early, x + late]`.
    pub fn window_fraction(&self, x: Secs, window: OnTimeWindow) -> f64 {
        let lo = x.saturating_add(window.early);
        let hi = x.saturating_add(window.late);
        self.count_between(lo, hi) as f64 / self.len() as f64
    }
}

/// Fraction of `samples` falling in `[x + early, x + late]`.
pub fn empirical_cdf_window(samples: &[Secs], x: Secs, window: OnTimeWindow) -> Result<f64> {
    Ok(EmpiricalCdf::new(samples)?.window_fraction(x, window))
}
