//! Replaying historical trip-days under a candidate timetable.
//!
//! Per day, the historical segment travel times and passenger dwell times are
//! held fixed. A bus that would arrive before the new scheduled time waits
//! for it, so the simulated departure at each timepoint is
//! `max(scheduled, simulated arrival + dwell)`.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::candidate::CandidateTimetable;
use super::window::OnTimeWindow;
use crate::data::{HistoricalStore, MonthSet, TimepointId, TimepointRecord, TripPattern};
use crate::error::{Error, Result};
use crate::time::Secs;

const MAX_CHAIN_DEPTH: usize = 64;

/// Passenger-driven dwell at a timepoint. An early bus is charged only the
/// time it stays past its scheduled time; a late bus the time it stays past
/// its arrival.
pub fn dwell_time(scheduled: Secs, arrival: Secs, departure: Secs) -> Secs {
    if arrival <= scheduled {
        (departure - scheduled).max(0)
    } else {
        departure - arrival
    }
}

/// [`dwell_time`] of a record, if it has both actual times.
pub fn record_dwell(record: &TimepointRecord) -> Option<Secs> {
    let (arr, dep) = record.actuals()?;
    Some(dwell_time(record.scheduled_time, arr, dep))
}

/// Which delay is scored at a trip's first timepoint.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FirstStopDelay {
    /// Simulated arrival of the vehicle at the first timepoint.
    #[default]
    Arrival,
    /// Simulated departure from the first timepoint.
    Departure,
    /// The first timepoint is not scored.
    Excluded,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOptions {
    #[serde(default)]
    pub first_stop: FirstStopDelay,
}

/// Delay carried in from the vehicle's previous trip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Upstream {
    /// Previous trip's simulated arrival delay at its last timepoint.
    pub arrival_delay: Secs,
    /// Scheduled layover between the two trips.
    pub layover: Secs,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SkipReason {
    MissingTimepoint(TimepointId),
    NegativeTravelTime { segment: usize },
}

impl std::fmt::Display for SkipReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SkipReason::MissingTimepoint(tp) => write!(f, "no observation at {tp}"),
            SkipReason::NegativeTravelTime { segment } => {
                write!(f, "negative travel time on segment {segment}")
            }
        }
    }
}

/// Schedule-independent facts about one historical trip-day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayTrace {
    pub date: NaiveDate,
    /// `arrival[j+1] - departure[j]` per segment.
    pub travel: Vec<Secs>,
    /// Passenger dwell per timepoint.
    pub dwell: Vec<Secs>,
    /// Historical first-timepoint arrival minus the published first departure.
    pub first_arrival_offset: Secs,
    /// Absolute arrival of the vehicle from its previous trip, expressed
    /// against this trip's published first departure.
    pub upstream_arrival: Option<Secs>,
}

impl DayTrace {
    /// Extracts travel and dwell times for `pattern` from one day's records.
    pub fn from_records(
        pattern: &TripPattern,
        records: &[TimepointRecord],
        upstream: Option<Upstream>,
    ) -> std::result::Result<DayTrace, SkipReason> {
        let mut actual = Vec::with_capacity(pattern.len());
        for tp in &pattern.timepoints {
            let found = records
                .iter()
                .find(|r| &r.timepoint == tp)
                .and_then(|r| Some((r, r.actuals()?)));
            match found {
                Some(x) => actual.push(x),
                None => return Err(SkipReason::MissingTimepoint(tp.clone())),
            }
        }
        let mut travel = Vec::with_capacity(pattern.segment_count());
        for (j, w) in actual.windows(2).enumerate() {
            let t = w[1].1 .0 - w[0].1 .1;
            if t < 0 {
                return Err(SkipReason::NegativeTravelTime { segment: j });
            }
            travel.push(t);
        }
        let dwell = actual
            .iter()
            .zip(&pattern.scheduled_times)
            .map(|((_, (arr, dep)), sched)| dwell_time(*sched, *arr, *dep))
            .collect();
        let published_first = pattern.first_time();
        Ok(DayTrace {
            date: records.first().map(|r| r.service_date).unwrap_or_default(),
            travel,
            dwell,
            first_arrival_offset: actual[0].1 .0 - published_first,
            upstream_arrival: upstream.map(|u| published_first - u.layover + u.arrival_delay),
        })
    }

    /// Simulated arrival at the first timepoint for a given first departure.
    #[inline]
    fn first_arrival(&self, first_departure: Secs) -> Secs {
        match self.upstream_arrival {
            // layover absorbs the upstream delay; never earlier than scheduled
            Some(up) => first_departure.max(up),
            None => first_departure + self.first_arrival_offset,
        }
    }

    /// Runs the departure recurrence, calling `visit(j, arrival, departure)`
    /// for each timepoint in order.
    #[inline]
    pub fn walk(&self, scheduled: &[Secs], mut visit: impl FnMut(usize, Secs, Secs)) {
        let mut arr = self.first_arrival(scheduled[0]);
        let mut dep = scheduled[0].max(arr + self.dwell[0]);
        visit(0, arr, dep);
        for j in 0..self.travel.len() {
            arr = dep + self.travel[j];
            dep = scheduled[j + 1].max(arr + self.dwell[j + 1]);
            visit(j + 1, arr, dep);
        }
    }
}

/// Simulated times and delays of one trip-day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayedDay {
    pub service_date: NaiveDate,
    pub scheduled: Vec<Secs>,
    pub arrivals: Vec<Secs>,
    pub departures: Vec<Secs>,
    /// Arrival delay `arrival - scheduled` per timepoint.
    pub delays: Vec<Secs>,
}

fn replay_trace(trace: &DayTrace, scheduled: &[Secs]) -> ReplayedDay {
    let n = scheduled.len();
    let mut arrivals = Vec::with_capacity(n);
    let mut departures = Vec::with_capacity(n);
    trace.walk(scheduled, |_, a, d| {
        arrivals.push(a);
        departures.push(d);
    });
    let delays = arrivals.iter().zip(scheduled).map(|(a, s)| a - s).collect();
    ReplayedDay {
        service_date: trace.date,
        scheduled: scheduled.to_vec(),
        arrivals,
        departures,
        delays,
    }
}

/// Replays one historical day of `pattern` under `candidate`.
///
/// Without `upstream` the vehicle reaches the first timepoint at its
/// historical time. With it, the first arrival is pushed by whatever part of
/// the upstream delay the layover cannot absorb.
pub fn replay_day(
    pattern: &TripPattern,
    candidate: &CandidateTimetable,
    day_records: &[TimepointRecord],
    upstream: Option<Upstream>,
) -> Result<ReplayedDay> {
    candidate.validate_for(pattern)?;
    let trace = DayTrace::from_records(pattern, day_records, upstream)
        .map_err(|r| Error::Evaluation(format!("trip {}: {r}", pattern.trip_id)))?;
    Ok(replay_trace(&trace, &candidate.scheduled_times()))
}

/// All replayable days of one trip over a month set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayTable {
    pub trip_id: String,
    pub timepoints: Vec<TimepointId>,
    pub published: Vec<Secs>,
    pub days: Vec<DayTrace>,
    pub skipped: Vec<(NaiveDate, SkipReason)>,
}

impl ReplayTable {
    pub fn build(store: &HistoricalStore, trip_id: &str, months: &MonthSet) -> Result<ReplayTable> {
        let pattern = store.pattern(trip_id)?;
        let mut days = Vec::new();
        let mut skipped = Vec::new();
        for (date, recs) in store.trip_days(trip_id, months) {
            let upstream = upstream_for(store, pattern, date, 0);
            match DayTrace::from_records(pattern, recs, upstream) {
                Ok(t) => days.push(t),
                Err(reason) => skipped.push((date, reason)),
            }
        }
        Ok(ReplayTable {
            trip_id: trip_id.to_string(),
            timepoints: pattern.timepoints.clone(),
            published: pattern.scheduled_times.clone(),
            days,
            skipped,
        })
    }

    pub fn published_first(&self) -> Secs {
        self.published[0]
    }

    pub fn replay(&self, day: usize, scheduled: &[Secs]) -> ReplayedDay {
        replay_trace(&self.days[day], scheduled)
    }

    /// Counts on-time hits under absolute scheduled times. `per_timepoint`,
    /// when given, accumulates hits per timepoint.
    pub fn tally(
        &self,
        scheduled: &[Secs],
        window: OnTimeWindow,
        opts: SimOptions,
        mut per_timepoint: Option<&mut [u64]>,
    ) -> Tally {
        let mut hits = 0u64;
        for day in &self.days {
            day.walk(scheduled, |j, arr, dep| {
                let delay = match (j, opts.first_stop) {
                    (0, FirstStopDelay::Excluded) => return,
                    (0, FirstStopDelay::Departure) => dep - scheduled[0],
                    _ => arr - scheduled[j],
                };
                if window.contains(delay) {
                    hits += 1;
                    if let Some(p) = per_timepoint.as_deref_mut() {
                        p[j] += 1;
                    }
                }
            });
        }
        let scored = match opts.first_stop {
            FirstStopDelay::Excluded => self.published.len() - 1,
            _ => self.published.len(),
        };
        Tally {
            hits,
            total: (self.days.len() * scored) as u64,
        }
    }
}

fn upstream_for(
    store: &HistoricalStore,
    pattern: &TripPattern,
    date: NaiveDate,
    depth: usize,
) -> Option<Upstream> {
    if depth >= MAX_CHAIN_DEPTH {
        return None;
    }
    let prev = store.predecessor(&pattern.trip_id)?;
    let layover = prev.scheduled_layover?;
    let recs = store.day(&prev.trip_id, date)?;
    let up = upstream_for(store, prev, date, depth + 1);
    let trace = DayTrace::from_records(prev, recs, up).ok()?;
    let mut last_arrival = 0;
    trace.walk(&prev.scheduled_times, |_, a, _| last_arrival = a);
    Some(Upstream {
        arrival_delay: last_arrival - prev.last_time(),
        layover,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub hits: u64,
    pub total: u64,
}

impl Tally {
    pub fn otp(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.hits as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimepointOtp {
    pub timepoint: TimepointId,
    pub otp: f64,
}

/// On-time performance of one candidate over a set of historical days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OtpReport {
    pub trip_id: String,
    pub otp: f64,
    pub hits: u64,
    pub total: u64,
    pub days: usize,
    pub skipped_days: usize,
    pub per_timepoint: Vec<TimepointOtp>,
    pub seed: Option<u64>,
    pub wall_time: f64,
}

/// Scores candidates of one trip against a fixed replay table.
#[derive(Debug, Clone)]
pub struct Evaluator {
    pub table: ReplayTable,
    pub window: OnTimeWindow,
    pub opts: SimOptions,
}

impl Evaluator {
    pub fn new(table: ReplayTable, window: OnTimeWindow, opts: SimOptions) -> Result<Self> {
        if table.days.is_empty() {
            return Err(Error::Evaluation(format!(
                "trip {} has no replayable days ({} skipped)",
                table.trip_id,
                table.skipped.len()
            )));
        }
        Ok(Evaluator { table, window, opts })
    }

    pub fn for_trip(
        store: &HistoricalStore,
        trip_id: &str,
        months: &MonthSet,
        window: OnTimeWindow,
        opts: SimOptions,
    ) -> Result<Self> {
        Evaluator::new(ReplayTable::build(store, trip_id, months)?, window, opts)
    }

    pub fn tally(&self, scheduled: &[Secs]) -> Tally {
        self.table.tally(scheduled, self.window, self.opts, None)
    }

    pub fn otp(&self, candidate: &CandidateTimetable) -> f64 {
        self.tally(&candidate.scheduled_times()).otp()
    }

    pub fn report(&self, candidate: &CandidateTimetable) -> Result<OtpReport> {
        if candidate.segment_times.len() + 1 != self.table.published.len() {
            return Err(Error::Argument(format!(
                "candidate for {} has {} segments, trip has {}",
                candidate.trip_id,
                candidate.segment_times.len(),
                self.table.published.len() - 1
            )));
        }
        let times = candidate.scheduled_times();
        let mut per = vec![0u64; times.len()];
        let tally = self.table.tally(&times, self.window, self.opts, Some(&mut per));
        let days = self.table.days.len() as f64;
        let per_timepoint = self
            .table
            .timepoints
            .iter()
            .zip(per)
            .enumerate()
            .filter(|(j, _)| !(*j == 0 && self.opts.first_stop == FirstStopDelay::Excluded))
            .map(|(_, (tp, h))| TimepointOtp {
                timepoint: tp.clone(),
                otp: h as f64 / days,
            })
            .collect();
        Ok(OtpReport {
            trip_id: self.table.trip_id.clone(),
            otp: tally.otp(),
            hits: tally.hits,
            total: tally.total,
            days: self.table.days.len(),
            skipped_days: self.table.skipped.len(),
            per_timepoint,
            seed: None,
            wall_time: 0.0,
        })
    }
}

/// Replays every historical day of the trip in `months` under `candidate`
/// and scores arrival delays against `window`.
pub fn on_time_performance(
    pattern: &TripPattern,
    candidate: &CandidateTimetable,
    store: &HistoricalStore,
    months: &MonthSet,
    window: OnTimeWindow,
) -> Result<OtpReport> {
    on_time_performance_with(pattern, candidate, store, months, window, SimOptions::default())
}

pub fn on_time_performance_with(
    pattern: &TripPattern,
    candidate: &CandidateTimetable,
    store: &HistoricalStore,
    months: &MonthSet,
    window: OnTimeWindow,
    opts: SimOptions,
) -> Result<OtpReport> {
    candidate.validate_for(pattern)?;
    Evaluator::for_trip(store, &pattern.trip_id, months, window, opts)?.report(candidate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::*;
    use proptest::prelude::*;

    #[test]
    fn dwell_for_early_and_late_buses() {
        let sched = clock("11:02:00");
        assert_eq!(dwell_time(sched, clock("10:58:00"), clock("11:04:00")), 120);
        assert_eq!(dwell_time(sched, clock("11:05:00"), clock("11:06:00")), 60);
        assert_eq!(dwell_time(sched, clock("10:58:00"), sched), 0);
        // left before the scheduled time: no passenger dwell is attributed
        assert_eq!(dwell_time(sched, clock("10:58:00"), clock("11:00:00")), 0);
    }

    #[test]
    fn published_schedule_reproduces_history() {
        let store = table_store();
        let t1 = store.pattern("121359").unwrap();
        let recs = store.day("121359", NaiveDate::from_ymd_opt(2016, 8, 8).unwrap()).unwrap();
        let day = replay_day(t1, &CandidateTimetable::from_pattern(t1), recs, None).unwrap();
        let arr: Vec<_> = recs.iter().map(|r| r.actual_arrival.unwrap()).collect();
        let dep: Vec<_> = recs.iter().map(|r| r.actual_departure.unwrap()).collect();
        assert_eq!(day.arrivals, arr);
        assert_eq!(day.departures, dep);
        assert_eq!(day.delays, vec![-14 * 60, 8 * 60, 9 * 60, 9 * 60]);
    }

    #[test]
    fn upstream_delay_beyond_layover_pushes_first_stop() {
        let store = table_store();
        let t2 = store.pattern("121360").unwrap();
        let recs = store.day("121360", NaiveDate::from_ymd_opt(2016, 8, 8).unwrap()).unwrap();
        let up = Upstream { arrival_delay: 9 * 60, layover: 120 };
        let day = replay_day(t2, &CandidateTimetable::from_pattern(t2), recs, Some(up)).unwrap();
        assert_eq!(day.arrivals[0], clock("11:27:00"));
        assert_eq!(day.delays[0], 7 * 60);
        // 3 minutes of dwell on top of the push
        assert_eq!(day.departures[0], clock("11:30:00"));
        assert_eq!(day.delays, vec![7 * 60, 9 * 60, 11 * 60, 14 * 60]);
    }

    #[test]
    fn upstream_delay_within_layover_is_absorbed() {
        let store = table_store();
        let t2 = store.pattern("121360").unwrap();
        let recs = store.day("121360", NaiveDate::from_ymd_opt(2016, 8, 8).unwrap()).unwrap();
        for delay in [-300, 0, 60, 120] {
            let up = Upstream { arrival_delay: delay, layover: 120 };
            let day = replay_day(t2, &CandidateTimetable::from_pattern(t2), recs, Some(up)).unwrap();
            assert_eq!(day.arrivals[0], t2.first_time(), "delay {delay}");
        }
    }

    #[test]
    fn fixed_point_with_exact_travel_and_no_dwell() {
        let store = table_store();
        let t1 = store.pattern("121359").unwrap();
        let mut recs: Vec<_> = table_records().into_iter().take(4).collect();
        for r in &mut recs {
            r.actual_arrival = Some(r.scheduled_time);
            r.actual_departure = Some(r.scheduled_time);
        }
        let day = replay_day(t1, &CandidateTimetable::from_pattern(t1), &recs, None).unwrap();
        assert!(day.delays.iter().all(|&d| d == 0));
    }

    #[test]
    fn table_scenario_is_zero_of_eight() {
        let store = table_store();
        let months = store.months();
        let w = OnTimeWindow::default();
        let mut hits = 0;
        let mut total = 0;
        for trip in ["121359", "121360"] {
            let p = store.pattern(trip).unwrap();
            let r = on_time_performance(p, &CandidateTimetable::from_pattern(p), &store, &months, w).unwrap();
            hits += r.hits;
            total += r.total;
        }
        assert_eq!((hits, total), (0, 8));
        let p = store.pattern("121360").unwrap();
        let r = on_time_performance(p, &CandidateTimetable::from_pattern(p), &store, &months, OnTimeWindow::unbounded()).unwrap();
        assert_eq!(r.otp, 1.0);
    }

    #[test]
    fn late_bound_is_inclusive() {
        let store = table_store();
        let months = store.months();
        let p = store.pattern("121359").unwrap();
        let mut cand = CandidateTimetable::from_pattern(p);
        // shift SY19 so its arrival delay is exactly +300
        cand.segment_times[0] += 3 * 60;
        cand.segment_times[1] -= 3 * 60;
        let w = OnTimeWindow::default();
        let r = on_time_performance(p, &cand, &store, &months, w).unwrap();
        assert_eq!(r.per_timepoint[1].otp, 1.0);
        let tight = OnTimeWindow::new(-60, 299).unwrap();
        let r = on_time_performance(p, &cand, &store, &months, tight).unwrap();
        assert_eq!(r.per_timepoint[1].otp, 0.0);
    }

    #[test]
    fn first_stop_modes() {
        let store = table_store();
        let months = store.months();
        let p = store.pattern("121359").unwrap();
        let cand = CandidateTimetable::from_pattern(p);
        let w = OnTimeWindow::default();
        let dep = SimOptions { first_stop: FirstStopDelay::Departure };
        let r = on_time_performance_with(p, &cand, &store, &months, w, dep).unwrap();
        assert_eq!((r.hits, r.total), (1, 4));
        let ex = SimOptions { first_stop: FirstStopDelay::Excluded };
        let r = on_time_performance_with(p, &cand, &store, &months, w, ex).unwrap();
        assert_eq!((r.hits, r.total), (0, 3));
        assert_eq!(r.per_timepoint.len(), 3);
    }

    #[test]
    fn no_days_is_an_error() {
        let store = table_store();
        let p = store.pattern("121359").unwrap();
        let months: MonthSet = [crate::time::MonthKey::new(2017, 1)].into();
        let err = on_time_performance(p, &CandidateTimetable::from_pattern(p), &store, &months, OnTimeWindow::default());
        assert!(matches!(err, Err(Error::Evaluation(_))));
    }

    #[test]
    fn incomplete_day_is_skipped() {
        let mut recs = table_records();
        recs.remove(2);
        let store = crate::data::clean_with_patterns(recs, table_patterns()).0;
        let table = ReplayTable::build(&store, "121359", &store.months()).unwrap();
        assert!(table.days.is_empty());
        assert_eq!(table.skipped.len(), 1);
        // the chained trip loses its upstream and falls back to its own history
        let table = ReplayTable::build(&store, "121360", &store.months()).unwrap();
        assert_eq!(table.days[0].upstream_arrival, None);
    }

    fn arb_trace() -> impl Strategy<Value = (DayTrace, Vec<Secs>)> {
        (2usize..7).prop_flat_map(|n| {
            (
                prop::collection::vec(0i64..900, n - 1),
                prop::collection::vec(0i64..200, n),
                -300i64..300,
                prop::option::of(0i64..2000),
                prop::collection::vec(60i64..900, n - 1),
            )
                .prop_map(|(travel, dwell, off, up, gaps)| {
                    let mut times = vec![36_000];
                    for g in gaps {
                        times.push(times.last().unwrap() + g);
                    }
                    let trace = DayTrace {
                        date: NaiveDate::from_ymd_opt(2016, 5, 1).unwrap(),
                        travel,
                        dwell,
                        first_arrival_offset: off,
                        upstream_arrival: up.map(|u| 36_000 - 600 + u),
                    };
                    (trace, times)
                })
        })
    }

    proptest! {
        #[test]
        fn delaying_a_stop_never_advances_downstream(
            (trace, times) in arb_trace(),
            stop in 0usize..7,
            delta in 1i64..600,
        ) {
            let stop = stop % times.len();
            let base = replay_trace(&trace, &times);
            let mut later = times.clone();
            later[stop] += delta;
            let shifted = replay_trace(&trace, &later);
            for j in stop..times.len() {
                prop_assert!(shifted.departures[j] >= base.departures[j]);
            }
            for j in 0..times.len() {
                prop_assert!(base.departures[j] >= base.arrivals[j].max(times[j]));
                prop_assert!(shifted.departures[j] >= shifted.arrivals[j].max(later[j]));
            }
        }
    }
}
