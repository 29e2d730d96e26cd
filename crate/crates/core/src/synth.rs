//! Synthetic timepoint histories with monthly travel-time regimes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

use crate::data::{
    median, write_static, write_timepoints, Direction, TimepointId, TimepointRecord, TripPattern,
    GTFS_DIR, TIMEPOINTS_FILE,
};
use crate::error::{Error, Result};
use crate::time::{parse_clock, MonthKey, Secs, MINUTE};

/// Travel-time law of one regime: lognormal per segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    /// Median seconds per outbound segment.
    pub segment_medians: Vec<f64>,
    /// Standard deviation of the log travel time.
    pub dispersion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub route_id: String,
    pub n_timepoints: usize,
    pub days_per_month: u32,
    pub months: Vec<MonthKey>,
    pub regimes: Vec<Regime>,
    /// Regime index per month.
    pub regime_of: BTreeMap<MonthKey, usize>,
    /// Exponential dwell mean per outbound timepoint, seconds.
    pub dwell_means: Vec<f64>,
    /// Clock time of the outbound first departure, `H:MM:SS`.
    pub first_departure: String,
    /// Latest arrival before schedule at the first timepoint, seconds.
    pub max_early_start: Secs,
    /// Adds the reverse trip on the same vehicle after this layover.
    pub return_layover: Option<Secs>,
    /// Minutes added to every published segment time.
    pub schedule_offset: i64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn segments(&self) -> usize {
        self.n_timepoints.saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Argument(m));
        if self.n_timepoints < 2 {
            return bad("n_timepoints must be at least 2".into());
        }
        if self.days_per_month == 0 {
            return bad("days_per_month must be positive".into());
        }
        if self.months.is_empty() || self.regimes.is_empty() {
            return bad("months and regimes must be non-empty".into());
        }
        for (i, r) in self.regimes.iter().enumerate() {
            if r.segment_medians.len() != self.segments() {
                return bad(format!("regime {i} needs {} segment medians", self.segments()));
            }
            if r.segment_medians.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
                return bad(format!("regime {i} has a non-positive median"));
            }
            if !(r.dispersion.is_finite() && r.dispersion >= 0.0) {
                return bad(format!("regime {i} has an invalid dispersion"));
            }
        }
        for m in &self.months {
            if self.days_per_month > m.days_in_month() {
                return bad(format!("month {m} has fewer than {} days", self.days_per_month));
            }
            match self.regime_of.get(m) {
                Some(&r) if r < self.regimes.len() => {}
                _ => return bad(format!("month {m} has no valid regime")),
            }
        }
        if self.dwell_means.len() != self.n_timepoints
            || self.dwell_means.iter().any(|d| !(d.is_finite() && *d >= 0.0))
        {
            return bad(format!("dwell_means needs {} non-negative values", self.n_timepoints));
        }
        parse_clock(&self.first_departure)?;
        if self.max_early_start < 0 || self.return_layover.is_some_and(|l| l < 0) {
            return bad("max_early_start and return_layover must be non-negative".into());
        }
        Ok(())
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: SynthSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Published minutes per outbound segment: the median over months of
    /// each month's regime median, rounded, plus the offset.
    pub fn published_minutes(&self) -> Vec<i64> {
        (0..self.segments())
            .map(|j| {
                let per_month: Vec<f64> = self
                    .months
                    .iter()
                    .map(|m| self.regimes[self.regime_of[m]].segment_medians[j])
                    .collect();
                let m = median(&per_month).expect("months non-empty");
                ((m / MINUTE as f64).round() as i64 + self.schedule_offset).max(1)
            })
            .collect()
    }

    pub fn outbound_trip_id(&self) -> String {
        format!("{}_out", self.route_id)
    }

    pub fn return_trip_id(&self) -> String {
        format!("{}_in", self.route_id)
    }
}

/// The benchmark used across the test suites: five timepoints over four
/// months, three in a base regime and one three minutes slower per segment,
/// thirty days each, with a published schedule two minutes short of the base
/// medians on every segment.
pub fn standard_benchmark(seed: u64) -> SynthSpec {
    two_regime_benchmark(seed, 180.0)
}

/// [`standard_benchmark`] with the slow regime `shift` seconds per segment
/// above the base regime.
pub fn two_regime_benchmark(seed: u64, shift: f64) -> SynthSpec {
    let base = vec![480.0, 420.0, 540.0, 360.0];
    let months: Vec<MonthKey> = (5..=8).map(|m| MonthKey::new(2016, m)).collect();
    let regime_of = months.iter().zip([0, 0, 0, 1]).map(|(m, r)| (*m, r)).collect();
    SynthSpec {
        route_id: "R1".into(),
        n_timepoints: 5,
        days_per_month: 30,
        months,
        regimes: vec![
            Regime {
                segment_medians: base.clone(),
                dispersion: 0.15,
            },
            Regime {
                segment_medians: base.iter().map(|m| m + shift).collect(),
                dispersion: 0.15,
            },
        ],
        regime_of,
        dwell_means: vec![10.0, 20.0, 20.0, 20.0, 30.0],
        first_departure: "07:30:00".into(),
        max_early_start: 60,
        return_layover: Some(300),
        schedule_offset: -2,
        seed,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub patterns: Vec<TripPattern>,
    pub records: Vec<TimepointRecord>,
}

impl SynthData {
    /// Writes `<dir>/gtfs/` and `<dir>/timepoints.csv`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        write_static(dir.join(GTFS_DIR), &self.patterns)?;
        let path = dir.join(TIMEPOINTS_FILE);
        let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_timepoints(BufWriter::new(f), &self.records)
    }
}

struct Draws {
    rng: ChaCha8Rng,
}

impl Draws {
    fn travel(&mut self, median: f64, dispersion: f64) -> Secs {
        let x = if dispersion == 0.0 {
            median
        } else {
            LogNormal::new(median.ln(), dispersion)
                .expect("validated")
                .sample(&mut self.rng)
        };
        (x.round() as Secs).max(1)
    }

    fn dwell(&mut self, mean: f64) -> Secs {
        if mean == 0.0 {
            return 0;
        }
        Exp::new(1.0 / mean).expect("validated").sample(&mut self.rng).round() as Secs
    }
}

/// Runs one trip-day, returning `(arrival, departure)` per timepoint. A bus
/// ahead of schedule holds until the scheduled time.
fn drive(
    draws: &mut Draws,
    scheduled: &[Secs],
    first_arrival: Secs,
    medians: &[f64],
    dispersion: f64,
    dwell_means: &[f64],
) -> Vec<(Secs, Secs)> {
    let mut out = Vec::with_capacity(scheduled.len());
    let mut arr = first_arrival;
    for j in 0..scheduled.len() {
        let dwell = draws.dwell(dwell_means[j]);
        let dep = scheduled[j].max(arr + dwell);
        out.push((arr, dep));
        if j + 1 < scheduled.len() {
            arr = dep + draws.travel(medians[j], dispersion);
        }
    }
    out
}

fn cumulative(first: Secs, minutes: &[i64]) -> Vec<Secs> {
    std::iter::once(first)
        .chain(minutes.iter().scan(first, |t, m| {
            *t += m * MINUTE;
            Some(*t)
        }))
        .collect()
}

/// Generates the trip patterns and one record per timepoint per day.
pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let tps: Vec<TimepointId> = (0..spec.n_timepoints)
        .map(|i| TimepointId::new(format!("TP{}", i + 1)))
        .collect::<Result<_>>()?;
    let out_minutes = spec.published_minutes();
    let out_times = cumulative(parse_clock(&spec.first_departure)?, &out_minutes);
    let mut outbound = TripPattern::new(
        &*spec.route_id,
        spec.outbound_trip_id(),
        Direction::Outbound,
        tps.clone(),
        out_times.clone(),
    )?;

    let mut patterns = Vec::new();
    let inbound = match spec.return_layover {
        Some(layover) => {
            let back_minutes: Vec<i64> = out_minutes.iter().rev().copied().collect();
            let first = out_times.last().expect("n >= 2") + layover;
            outbound.next_trip_id = Some(spec.return_trip_id());
            outbound.scheduled_layover = Some(layover);
            outbound.block_id = Some(format!("{}_block", spec.route_id));
            let mut p = TripPattern::new(
                &*spec.route_id,
                spec.return_trip_id(),
                Direction::Inbound,
                tps.iter().rev().cloned().collect(),
                cumulative(first, &back_minutes),
            )?;
            p.block_id = outbound.block_id.clone();
            Some(p)
        }
        None => None,
    };

    let mut draws = Draws {
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
    };
    let mut records = Vec::new();
    let back_dwell: Vec<f64> = spec.dwell_means.iter().rev().copied().collect();
    for month in &spec.months {
        let regime = &spec.regimes[spec.regime_of[month]];
        let back_medians: Vec<f64> = regime.segment_medians.iter().rev().copied().collect();
        for day in 1..=spec.days_per_month {
            let date = NaiveDate::from_ymd_opt(month.year, month.month, day).expect("validated day");
            let early = draws.rng.random_range(0..=spec.max_early_start);
            let out = drive(
                &mut draws,
                &outbound.scheduled_times,
                outbound.first_time() - early,
                &regime.segment_medians,
                regime.dispersion,
                &spec.dwell_means,
            );
            push_records(&mut records, date, &outbound, &out);
            if let Some(p) = &inbound {
                let back = drive(
                    &mut draws,
                    &p.scheduled_times,
                    out.last().expect("n >= 2").0,
                    &back_medians,
                    regime.dispersion,
                    &back_dwell,
                );
                push_records(&mut records, date, p, &back);
            }
        }
    }
    patterns.push(outbound);
    patterns.extend(inbound);
    Ok(SynthData { patterns, records })
}

fn push_records(out: &mut Vec<TimepointRecord>, date: NaiveDate, p: &TripPattern, times: &[(Secs, Secs)]) {
    for (j, (tp, &(arr, dep))) in p.timepoints.iter().zip(times).enumerate() {
        out.push(TimepointRecord {
            service_date: date,
            route_id: p.route_id.clone(),
            trip_id: p.trip_id.clone(),
            direction: p.direction,
            timepoint: tp.clone(),
            sequence: j as u32 + 1,
            scheduled_time: p.scheduled_times[j],
            actual_arrival: Some(arr),
            actual_departure: Some(dep),
            vehicle_id: Some(format!("{}_bus", p.route_id)),
        });
    }
}
