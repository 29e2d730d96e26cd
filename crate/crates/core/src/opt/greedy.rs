//! Sequential greedy choice of segment times from empirical distributions.

use super::space::SearchSpace;
use super::SearchOutcome;
use crate::error::{Error, Result};
use crate::sim::{EmpiricalCdf, OnTimeWindow, ReplayTable};
use crate::time::{Secs, MINUTE};

/// The whole minute `x` in `[lo, hi]` maximizing the fraction of `samples`
/// in `[60x + early, 60x + late]`, smallest `x` on ties.
pub fn greedy_segment(samples: &[Secs], lo: i64, hi: i64, window: OnTimeWindow) -> Result<(i64, f64)> {
    let cdf = EmpiricalCdf::new(samples)?;
    let mut best = (lo, f64::NEG_INFINITY);
    for x in lo..=hi {
        let f = cdf.window_fraction(x * MINUTE, window);
        if f > best.1 {
            best = (x, f);
        }
    }
    Ok(best)
}

/// Picks segment times front to back. For segment `j` the earlier choices
/// are replayed on every historical day, and the arrival at the next
/// timepoint minus the scheduled time at timepoint `j` forms the sample
/// distribution for [`greedy_segment`]. A first-departure dimension, if any,
/// stays at zero.
pub fn greedy(space: &SearchSpace, table: &ReplayTable, window: OnTimeWindow) -> Result<SearchOutcome> {
    if table.days.is_empty() {
        return Err(Error::Evaluation(format!("trip {} has no replayable days", table.trip_id)));
    }
    let off = space.dims() - space.segment_count();
    let mut v = space.lo.clone();
    if off == 1 {
        v[0] = 0i64.clamp(space.lo[0], space.hi[0]);
    }
    let mut history = Vec::new();
    for j in 0..space.segment_count() {
        let scheduled = space.decode(&v).scheduled_times();
        let samples: Vec<Secs> = table
            .days
            .iter()
            .map(|day| {
                let mut arrival = 0;
                day.walk(&scheduled, |k, arr, _| {
                    if k == j + 1 {
                        arrival = arr;
                    }
                });
                arrival - scheduled[j]
            })
            .collect();
        let (x, f) = greedy_segment(&samples, space.lo[off + j], space.hi[off + j], window)?;
        v[off + j] = x;
        history.push(f);
    }
    Ok(SearchOutcome {
        best: v,
        value: f64::NAN,
        iterations: space.segment_count(),
        evaluations: 0,
        history,
    })
}
