//! Integer-minute search spaces over segment travel times.

use serde::{Deserialize, Serialize};

use crate::data::{HistoricalStore, MonthSet};
use crate::error::{Error, Result};
use crate::sim::CandidateTimetable;
use crate::time::{Secs, MINUTE};

/// How far the first departure may move when it is unlocked, in minutes.
pub const FIRST_DEPARTURE_SLACK: i64 = 5;

/// Box bounds on a decision vector.
///
/// The vector holds one scheduled travel time per segment in whole minutes.
/// When `shift_first` is set it is prefixed by a first-departure offset in
/// minutes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub trip_id: String,
    pub first_departure: Secs,
    pub shift_first: bool,
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl SearchSpace {
    /// Segment bounds only, first departure fixed.
    pub fn new(
        trip_id: impl Into<String>,
        first_departure: Secs,
        lo: Vec<i64>,
        hi: Vec<i64>,
    ) -> Result<Self> {
        let space = SearchSpace {
            trip_id: trip_id.into(),
            first_departure,
            shift_first: false,
            lo,
            hi,
        };
        space.validate()?;
        Ok(space)
    }

    /// Bounds from the floor of the shortest and the ceiling of the longest
    /// cleaned travel time on each segment of the trip in `months`.
    pub fn from_history(store: &HistoricalStore, trip_id: &str, months: &MonthSet) -> Result<Self> {
        let pattern = store.pattern(trip_id)?;
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for seg in 0..pattern.segment_count() {
            let times = store.trip_travel_times(trip_id, seg, months)?;
            let (Some(min), Some(max)) = (times.iter().min(), times.iter().max()) else {
                return Err(Error::Evaluation(format!(
                    "segment {} -> {} of trip {trip_id} has no travel times",
                    pattern.timepoints[seg], pattern.timepoints[seg + 1]
                )));
            };
            let l = min.div_euclid(MINUTE).max(1);
            lo.push(l);
            hi.push((max + MINUTE - 1).div_euclid(MINUTE).max(l));
        }
        SearchSpace::new(trip_id, pattern.first_time(), lo, hi)
    }

    /// Widens the bounds so that `segment_minutes` lies inside.
    pub fn including(mut self, segment_minutes: &[i64]) -> Self {
        let off = self.offset();
        for (j, &m) in segment_minutes.iter().enumerate() {
            let m = m.max(1);
            self.lo[off + j] = self.lo[off + j].min(m);
            self.hi[off + j] = self.hi[off + j].max(m);
        }
        self
    }

    /// Adds a leading first-departure offset dimension.
    pub fn with_first_departure_shift(mut self) -> Self {
        if !self.shift_first {
            self.shift_first = true;
            self.lo.insert(0, -FIRST_DEPARTURE_SLACK);
            self.hi.insert(0, FIRST_DEPARTURE_SLACK);
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.len() != self.hi.len() || self.lo.len() <= self.offset() {
            return Err(Error::Argument("search space needs matching, non-empty bounds".into()));
        }
        for (j, (l, h)) in self.lo.iter().zip(&self.hi).enumerate() {
            let segment = j >= self.offset();
            if l > h || (segment && *l < 1) {
                return Err(Error::Argument(format!("bad bounds [{l}, {h}] in dimension {j}")));
            }
        }
        Ok(())
    }

    fn offset(&self) -> usize {
        usize::from(self.shift_first)
    }

    pub fn dims(&self) -> usize {
        self.lo.len()
    }

    pub fn segment_count(&self) -> usize {
        self.lo.len() - self.offset()
    }

    /// Number of grid points.
    pub fn size(&self) -> u128 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l + 1) as u128)
            .fold(1u128, |acc, w| acc.saturating_mul(w))
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        v.len() == self.dims() && v.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (l, h))| l <= x && x <= h)
    }

    pub fn clamp(&self, v: &mut [i64]) {
        for (x, (l, h)) in v.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *x = (*x).clamp(*l, *h);
        }
    }

    /// Decision vector for a candidate with whole-minute segments and the
    /// space's first departure; segment times are rounded to the nearest
    /// minute otherwise.
    pub fn encode(&self, candidate: &CandidateTimetable) -> Vec<i64> {
        let mut v = Vec::with_capacity(self.dims());
        if self.shift_first {
            v.push((candidate.first_departure - self.first_departure).div_euclid(MINUTE));
        }
        v.extend(
            candidate
                .segment_times
                .iter()
                .map(|s| ((s + MINUTE / 2).div_euclid(MINUTE)).max(1)),
        );
        v
    }

    pub fn decode(&self, v: &[i64]) -> CandidateTimetable {
        let (shift, minutes) = if self.shift_first {
            (v[0], &v[1..])
        } else {
            (0, v)
        };
        CandidateTimetable::from_minutes(&*self.trip_id, self.first_departure + shift * MINUTE, minutes)
    }
}
