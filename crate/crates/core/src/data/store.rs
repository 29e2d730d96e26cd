//! Immutable, queryable store of cleaned historical trips.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::gtfs::TripPattern;
use super::mad::mad_outliers_secs;
use super::records::{Direction, TimepointId, TimepointRecord};
use crate::error::{Error, Result};
use crate::time::{MonthKey, Secs};

pub type MonthSet = BTreeSet<MonthKey>;

/// Adjacent pair of timepoints.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub from: TimepointId,
    pub to: TimepointId,
}

impl Segment {
    pub fn new(from: TimepointId, to: TimepointId) -> Self {
        Segment { from, to }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

/// Cleaned records grouped by trip and service date, plus the trip patterns.
///
/// Records are kept sorted by `(trip_id, service_date, sequence)` so every
/// trip-day is a contiguous slice. The store is never mutated after
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoricalStore {
    patterns: BTreeMap<String, TripPattern>,
    records: Vec<TimepointRecord>,
    days: BTreeMap<(String, NaiveDate), Range<usize>>,
    remove_outliers: bool,
}

impl HistoricalStore {
    /// Assembles a store from already-cleaned records. Records whose trip has
    /// no pattern are kept but are not reachable through trip queries.
    pub fn from_parts(patterns: Vec<TripPattern>, mut records: Vec<TimepointRecord>) -> Self {
        records.sort_by(|a, b| {
            (&a.trip_id, a.service_date, a.sequence).cmp(&(&b.trip_id, b.service_date, b.sequence))
        });
        let mut days = BTreeMap::new();
        let mut start = 0;
        for i in 1..=records.len() {
            let boundary = i == records.len()
                || records[i].trip_id != records[start].trip_id
                || records[i].service_date != records[start].service_date;
            if boundary {
                let key = (records[start].trip_id.clone(), records[start].service_date);
                days.insert(key, start..i);
                start = i;
            }
        }
        HistoricalStore {
            patterns: patterns.into_iter().map(|p| (p.trip_id.clone(), p)).collect(),
            records,
            days,
            remove_outliers: true,
        }
    }

    /// Toggles MAD outlier removal in travel-time queries (on by default).
    pub fn with_outlier_removal(mut self, on: bool) -> Self {
        self.remove_outliers = on;
        self
    }

    pub fn outlier_removal(&self) -> bool {
        self.remove_outliers
    }

    pub fn records(&self) -> &[TimepointRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn patterns(&self) -> impl Iterator<Item = &TripPattern> {
        self.patterns.values()
    }

    pub fn pattern(&self, trip_id: &str) -> Result<&TripPattern> {
        self.patterns
            .get(trip_id)
            .ok_or_else(|| Error::lookup("trip", trip_id))
    }

    /// The trip whose vehicle continues into `trip_id`, if any.
    pub fn predecessor(&self, trip_id: &str) -> Option<&TripPattern> {
        self.patterns
            .values()
            .find(|p| p.next_trip_id.as_deref() == Some(trip_id))
    }

    pub fn trips_for(&self, route_id: &str, direction: Direction) -> Vec<&TripPattern> {
        self.patterns
            .values()
            .filter(|p| p.route_id == route_id && p.direction == direction)
            .collect()
    }

    /// Every month with at least one record.
    pub fn months(&self) -> MonthSet {
        self.days.keys().map(|(_, d)| MonthKey::of(*d)).collect()
    }

    pub fn trip_months(&self, trip_id: &str) -> MonthSet {
        self.trip_day_keys(trip_id)
            .map(|d| MonthKey::of(*d))
            .collect()
    }

    fn trip_day_keys<'a>(&'a self, trip_id: &'a str) -> impl Iterator<Item = &'a NaiveDate> + 'a {
        let lo = (trip_id.to_string(), NaiveDate::MIN);
        self.days
            .range(lo..)
            .take_while(move |((t, _), _)| t == trip_id)
            .map(|((_, d), _)| d)
    }

    pub fn day(&self, trip_id: &str, date: NaiveDate) -> Option<&[TimepointRecord]> {
        self.days
            .get(&(trip_id.to_string(), date))
            .map(|r| &self.records[r.clone()])
    }

    /// Trip-days in date order restricted to `months`.
    pub fn trip_days<'a>(
        &'a self,
        trip_id: &'a str,
        months: &'a MonthSet,
    ) -> impl Iterator<Item = (NaiveDate, &'a [TimepointRecord])> + 'a {
        let lo = (trip_id.to_string(), NaiveDate::MIN);
        self.days
            .range(lo..)
            .take_while(move |((t, _), _)| t == trip_id)
            .filter(move |((_, d), _)| months.contains(&MonthKey::of(*d)))
            .map(move |((_, d), r)| (*d, &self.records[r.clone()]))
    }

    /// Distinct segments across all patterns.
    pub fn segments(&self) -> BTreeSet<Segment> {
        self.patterns
            .values()
            .flat_map(|p| {
                p.timepoints
                    .windows(2)
                    .map(|w| Segment::new(w[0].clone(), w[1].clone()))
            })
            .collect()
    }

    /// Raw (unfiltered) travel times for position `seg` of a trip, one per
    /// trip-day with both endpoints observed, in date order. Negative values
    /// are included.
    pub fn raw_trip_travel_times(
        &self,
        trip_id: &str,
        seg: usize,
        months: &MonthSet,
    ) -> Result<Vec<(NaiveDate, Secs)>> {
        let pattern = self.pattern(trip_id)?;
        if seg + 1 >= pattern.len() {
            return Err(Error::lookup("segment index", format!("{trip_id}#{seg}")));
        }
        let (from, to) = (&pattern.timepoints[seg], &pattern.timepoints[seg + 1]);
        Ok(self
            .trip_days(trip_id, months)
            .filter_map(|(date, recs)| {
                let dep = recs.iter().find(|r| &r.timepoint == from)?.actual_departure?;
                let arr = recs.iter().find(|r| &r.timepoint == to)?.actual_arrival?;
                Some((date, arr - dep))
            })
            .collect())
    }

    /// Travel times for one segment of one trip: negatives excluded, MAD
    /// outliers removed when enabled.
    pub fn trip_travel_times(&self, trip_id: &str, seg: usize, months: &MonthSet) -> Result<Vec<Secs>> {
        let raw: Vec<Secs> = self
            .raw_trip_travel_times(trip_id, seg, months)?
            .into_iter()
            .map(|(_, t)| t)
            .filter(|&t| t >= 0)
            .collect();
        Ok(self.filter_outliers(raw))
    }

    /// Travel times over a segment pooled across every trip that serves it.
    pub fn travel_times(&self, segment: &Segment, months: &MonthSet) -> Result<Vec<Secs>> {
        let mut found = false;
        let mut out = Vec::new();
        for p in self.patterns.values() {
            for (j, w) in p.timepoints.windows(2).enumerate() {
                if w[0] == segment.from && w[1] == segment.to {
                    found = true;
                    out.extend(
                        self.raw_trip_travel_times(&p.trip_id, j, months)?
                            .into_iter()
                            .map(|(_, t)| t)
                            .filter(|&t| t >= 0),
                    );
                }
            }
        }
        if !found {
            return Err(Error::lookup("segment", segment.to_string()));
        }
        Ok(self.filter_outliers(out))
    }

    fn filter_outliers(&self, samples: Vec<Secs>) -> Vec<Secs> {
        if !self.remove_outliers {
            return samples;
        }
        let flagged: BTreeSet<usize> = mad_outliers_secs(&samples).into_iter().collect();
        samples
            .into_iter()
            .enumerate()
            .filter(|(i, _)| !flagged.contains(i))
            .map(|(_, t)| t)
            .collect()
    }
}
