//! Record cleaning: missing values, duplicates, ordering, and the counts that
//! go into the cleaning report.

use std::collections::{BTreeMap, HashSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::gtfs::TripPattern;
use super::mad::mad_outliers_secs;
use super::records::TimepointRecord;
use super::store::HistoricalStore;
use crate::time::MonthKey;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub input: usize,
    pub kept: usize,
    pub duplicates: usize,
    pub missing: usize,
    /// Records whose timepoint is not part of their trip's pattern, or whose
    /// trip has no pattern.
    pub unknown_timepoint: usize,
    /// Records dropped because their trip-day breaks sequence or schedule order.
    pub invalid_order: usize,
    /// Adjacent timepoint pairs with arrival before the upstream departure.
    /// These records are kept; the pair is excluded from travel times.
    pub negative_travel_times: usize,
    /// Travel-time samples flagged by MAD per (trip, segment, month).
    pub outliers: usize,
    pub trips_without_records: usize,
}

impl CleaningReport {
    /// True when nothing was removed or flagged.
    pub fn is_clean(&self) -> bool {
        self.duplicates == 0
            && self.missing == 0
            && self.unknown_timepoint == 0
            && self.invalid_order == 0
            && self.negative_travel_times == 0
            && self.outliers == 0
    }
}

/// Cleans records against patterns inferred from the records themselves.
pub fn clean(records: Vec<TimepointRecord>) -> (HistoricalStore, CleaningReport) {
    let patterns = infer_patterns(&records);
    clean_with_patterns(records, patterns)
}

/// Cleans records against static trip patterns. Trips present in the
/// records but absent from `patterns` get an inferred pattern.
pub fn clean_with_patterns(
    records: Vec<TimepointRecord>,
    mut patterns: Vec<TripPattern>,
) -> (HistoricalStore, CleaningReport) {
    let mut report = CleaningReport {
        input: records.len(),
        ..Default::default()
    };

    let complete: Vec<TimepointRecord> = records
        .into_iter()
        .filter(|r| {
            let ok = r.actuals().is_some();
            report.missing += usize::from(!ok);
            ok
        })
        .collect();

    let mut seen: HashSet<(NaiveDate, String, String)> = HashSet::new();
    let unique: Vec<TimepointRecord> = complete
        .into_iter()
        .filter(|r| {
            let key = (r.service_date, r.trip_id.clone(), r.timepoint.as_str().to_string());
            let fresh = seen.insert(key);
            report.duplicates += usize::from(!fresh);
            fresh
        })
        .collect();

    let known: HashSet<&str> = patterns.iter().map(|p| p.trip_id.as_str()).collect();
    let missing_patterns: Vec<TripPattern> = infer_patterns(&unique)
        .into_iter()
        .filter(|p| !known.contains(p.trip_id.as_str()))
        .collect();
    patterns.extend(missing_patterns);
    let by_trip: BTreeMap<&str, &TripPattern> =
        patterns.iter().map(|p| (p.trip_id.as_str(), p)).collect();

    let mut groups: BTreeMap<(String, NaiveDate), Vec<TimepointRecord>> = BTreeMap::new();
    for r in unique {
        let on_pattern = by_trip
            .get(r.trip_id.as_str())
            .is_some_and(|p| p.position(&r.timepoint).is_some());
        if !on_pattern {
            report.unknown_timepoint += 1;
            continue;
        }
        groups
            .entry((r.trip_id.clone(), r.service_date))
            .or_default()
            .push(r);
    }

    let mut kept = Vec::new();
    for ((trip, _), mut day) in groups {
        day.sort_by_key(|r| r.sequence);
        let pattern = by_trip[trip.as_str()];
        let positions: Vec<usize> = day
            .iter()
            .map(|r| pattern.position(&r.timepoint).expect("filtered above"))
            .collect();
        let ordered = day.windows(2).all(|w| {
            w[0].sequence < w[1].sequence && w[0].scheduled_time < w[1].scheduled_time
        }) && positions.windows(2).all(|w| w[0] < w[1]);
        if !ordered {
            report.invalid_order += day.len();
            continue;
        }
        for (i, w) in day.windows(2).enumerate() {
            if positions[i] + 1 != positions[i + 1] {
                continue;
            }
            let (_, dep) = w[0].actuals().expect("complete");
            let (arr, _) = w[1].actuals().expect("complete");
            if arr < dep {
                report.negative_travel_times += 1;
            }
        }
        kept.extend(day);
    }
    report.kept = kept.len();

    let store = HistoricalStore::from_parts(patterns, kept);
    let months = store.months();
    for p in store.patterns() {
        for seg in 0..p.segment_count() {
            let raw = store
                .raw_trip_travel_times(&p.trip_id, seg, &months)
                .unwrap_or_default();
            let mut per_month: BTreeMap<MonthKey, Vec<i64>> = BTreeMap::new();
            for (date, t) in raw.into_iter().filter(|(_, t)| *t >= 0) {
                per_month.entry(MonthKey::of(date)).or_default().push(t);
            }
            report.outliers += per_month
                .values()
                .map(|v| mad_outliers_secs(v).len())
                .sum::<usize>();
        }
        if store.trip_months(&p.trip_id).is_empty() {
            report.trips_without_records += 1;
        }
    }
    (store, report)
}

/// Derives a pattern per trip from the trip-day with the most complete
/// records (earliest date on ties). Trips whose best day is degenerate are
/// skipped.
pub fn infer_patterns(records: &[TimepointRecord]) -> Vec<TripPattern> {
    let mut days: BTreeMap<&str, BTreeMap<NaiveDate, Vec<&TimepointRecord>>> = BTreeMap::new();
    for r in records {
        days.entry(r.trip_id.as_str())
            .or_default()
            .entry(r.service_date)
            .or_default()
            .push(r);
    }
    let mut out = Vec::new();
    for (trip, by_date) in days {
        let Some((_, best)) = by_date
            .iter()
            .rev()
            .max_by_key(|(_, recs)| recs.len())
        else {
            continue;
        };
        let mut best: Vec<&TimepointRecord> = best.clone();
        best.sort_by_key(|r| r.sequence);
        best.dedup_by(|a, b| a.timepoint == b.timepoint);
        let pattern = TripPattern::new(
            best[0].route_id.clone(),
            trip,
            best[0].direction,
            best.iter().map(|r| r.timepoint.clone()).collect(),
            best.iter().map(|r| r.scheduled_time).collect(),
        );
        if let Ok(p) = pattern {
            out.push(p);
        }
    }
    out
}
