//! Candidate timetables and their CSV form.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::data::{TimepointId, TripPattern};
use crate::error::{Error, Result};
use crate::time::{format_clock, parse_clock, Secs, MINUTE};

pub const CANDIDATE_HEADER: [&str; 3] = ["trip_id", "timepoint_id", "scheduled_time"];

/// A trip timetable as a first departure plus scheduled segment durations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CandidateTimetable {
    pub trip_id: String,
    pub first_departure: Secs,
    /// Seconds per segment; whole minutes for optimizer output.
    pub segment_times: Vec<Secs>,
}

impl CandidateTimetable {
    /// The published schedule of a pattern, exactly as given.
    pub fn from_pattern(pattern: &TripPattern) -> Self {
        CandidateTimetable {
            trip_id: pattern.trip_id.clone(),
            first_departure: pattern.first_time(),
            segment_times: pattern.scheduled_times.windows(2).map(|w| w[1] - w[0]).collect(),
        }
    }

    pub fn from_minutes(trip_id: impl Into<String>, first_departure: Secs, minutes: &[i64]) -> Self {
        CandidateTimetable {
            trip_id: trip_id.into(),
            first_departure,
            segment_times: minutes.iter().map(|m| m * MINUTE).collect(),
        }
    }

    /// Absolute scheduled time at every timepoint.
    pub fn scheduled_times(&self) -> Vec<Secs> {
        std::iter::once(self.first_departure)
            .chain(self.segment_times.iter().scan(self.first_departure, |t, d| {
                *t += d;
                Some(*t)
            }))
            .collect()
    }

    /// Segment times in minutes, if every one is a whole minute.
    pub fn minutes(&self) -> Option<Vec<i64>> {
        self.segment_times
            .iter()
            .map(|s| (s % MINUTE == 0).then_some(s / MINUTE))
            .collect()
    }

    /// Checks positivity against a pattern's length.
    pub fn validate_for(&self, pattern: &TripPattern) -> Result<()> {
        if self.segment_times.len() != pattern.segment_count() {
            return Err(Error::Argument(format!(
                "candidate for {} has {} segments, pattern has {}",
                self.trip_id,
                self.segment_times.len(),
                pattern.segment_count()
            )));
        }
        if self.segment_times.iter().any(|&s| s <= 0) {
            return Err(Error::Argument(format!(
                "candidate for {} has a non-positive segment time",
                self.trip_id
            )));
        }
        Ok(())
    }

    /// Checks the optimizer invariant: whole minutes, each at least one.
    pub fn validate_minutes(&self) -> Result<()> {
        match self.minutes() {
            Some(m) if m.iter().all(|&x| x >= 1) => Ok(()),
            _ => Err(Error::Argument(format!(
                "candidate for {} is not whole positive minutes",
                self.trip_id
            ))),
        }
    }
}

/// Writes `trip_id,timepoint_id,scheduled_time` rows, one per timepoint.
pub fn write_candidates<W: Write>(
    writer: W,
    rows: &[(&CandidateTimetable, &TripPattern)],
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CANDIDATE_HEADER)?;
    for (cand, pattern) in rows {
        cand.validate_for(pattern)?;
        for (tp, t) in pattern.timepoints.iter().zip(cand.scheduled_times()) {
            wtr.write_record([cand.trip_id.as_str(), tp.as_str(), &format_clock(t)])?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<candidates>", e))?;
    Ok(())
}

/// Reads candidate CSV; rows for each trip must be in travel order.
pub fn read_candidates<R: Read>(reader: R) -> Result<Vec<(CandidateTimetable, Vec<TimepointId>)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CANDIDATE_HEADER {
        return Err(Error::Header {
            file: "candidate timetable".into(),
            expected: CANDIDATE_HEADER.join(","),
            found: header.join(","),
        });
    }
    let mut order: Vec<String> = Vec::new();
    let mut trips: BTreeMap<String, Vec<(TimepointId, Secs)>> = BTreeMap::new();
    for row in rdr.records() {
        let row = row?;
        let trip = row.get(0).unwrap_or("").to_string();
        let tp = TimepointId::new(row.get(1).unwrap_or(""))?;
        let t = parse_clock(row.get(2).unwrap_or(""))?;
        if !trips.contains_key(&trip) {
            order.push(trip.clone());
        }
        trips.entry(trip).or_default().push((tp, t));
    }
    order
        .into_iter()
        .map(|trip| {
            let stops = &trips[&trip];
            if stops.len() < 2 || stops.windows(2).any(|w| w[1].1 <= w[0].1) {
                return Err(Error::Ingest {
                    file: "candidate timetable".into(),
                    message: format!("trip {trip} needs >= 2 increasing times"),
                });
            }
            let cand = CandidateTimetable {
                trip_id: trip.clone(),
                first_departure: stops[0].1,
                segment_times: stops.windows(2).map(|w| w[1].1 - w[0].1).collect(),
            };
            Ok((cand, stops.iter().map(|s| s.0.clone()).collect()))
        })
        .collect()
}
