//! Per-trip and per-cluster optimization runs.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::objective::{Objective, TripObjective};
use super::{exhaustive, ga, greedy, pso, Engine, GaConfig, PsoConfig, SearchOutcome, SearchSpace};
use super::DEFAULT_EXHAUSTIVE_LIMIT;
use crate::cluster::MonthClustering;
use crate::data::{HistoricalStore, MonthSet};
use crate::error::Result;
use crate::sim::{CandidateTimetable, Evaluator, OnTimeWindow, SimOptions};
use crate::time::MonthKey;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizeSettings {
    pub engine: Engine,
    pub window: OnTimeWindow,
    pub sim: SimOptions,
    pub ga: GaConfig,
    pub pso: PsoConfig,
    pub exhaustive_limit: u64,
    /// Lets the first departure move by a few minutes.
    pub shift_first_departure: bool,
    pub seed: u64,
}

impl Default for OptimizeSettings {
    fn default() -> Self {
        OptimizeSettings {
            engine: Engine::Ga,
            window: OnTimeWindow::default(),
            sim: SimOptions::default(),
            ga: GaConfig::default(),
            pso: PsoConfig::default(),
            exhaustive_limit: DEFAULT_EXHAUSTIVE_LIMIT as u64,
            shift_first_departure: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub engine: Engine,
    pub trip_id: String,
    pub months: Vec<MonthKey>,
    pub best: CandidateTimetable,
    pub lower_bounds: Vec<i64>,
    pub upper_bounds: Vec<i64>,
    /// Published schedule.
    pub otp_before: f64,
    pub otp_after: f64,
    /// Scored arrivals behind each OTP figure.
    pub observations: u64,
    pub iterations: usize,
    pub evaluations: usize,
    pub history: Vec<f64>,
    pub seed: u64,
    /// Seconds spent in the engine.
    pub wall_time: f64,
}

fn run_engine<O: Objective + ?Sized>(
    settings: &OptimizeSettings,
    space: &SearchSpace,
    evaluator: &Evaluator,
    objective: &O,
    incumbent: &[i64],
) -> Result<SearchOutcome> {
    match settings.engine {
        Engine::Exhaustive => exhaustive(space, objective, settings.exhaustive_limit as u128),
        Engine::Ga => ga(space, objective, incumbent, &settings.ga, settings.seed),
        Engine::Pso => pso(space, objective, incumbent, &settings.pso, settings.seed),
        Engine::Greedy => {
            let mut out = greedy(space, &evaluator.table, settings.window)?;
            out.value = objective.evaluate(&out.best);
            out.evaluations = 1;
            Ok(out)
        }
    }
}

/// Optimizes one trip's timetable against its history in `months`.
///
/// The published schedule, rounded to minutes, is always inside the search
/// space, and is returned instead of the engine's answer if that scores
/// lower.
pub fn optimize_trip(
    store: &HistoricalStore,
    trip_id: &str,
    months: &MonthSet,
    settings: &OptimizeSettings,
) -> Result<OptimizationResult> {
    let pattern = store.pattern(trip_id)?;
    let evaluator = Evaluator::for_trip(store, trip_id, months, settings.window, settings.sim)?;
    let published = CandidateTimetable::from_pattern(pattern);
    let mut space = SearchSpace::from_history(store, trip_id, months)?;
    let published_minutes = space.encode(&published);
    space = space.including(&published_minutes);
    if settings.shift_first_departure {
        space = space.with_first_departure_shift();
    }
    let incumbent = space.encode(&published);
    let objective = TripObjective {
        space: &space,
        evaluator: &evaluator,
    };

    let start = Instant::now();
    let mut out = run_engine(settings, &space, &evaluator, &objective, &incumbent)?;
    let incumbent_value = objective.evaluate(&incumbent);
    if out.value < incumbent_value {
        log::debug!("{} on {trip_id} fell below the incumbent; keeping it", settings.engine);
        out.best = incumbent;
        out.value = incumbent_value;
    }
    let wall_time = start.elapsed().as_secs_f64();

    Ok(OptimizationResult {
        engine: settings.engine,
        trip_id: trip_id.to_string(),
        months: months.iter().copied().collect(),
        best: space.decode(&out.best),
        lower_bounds: space.lo.clone(),
        upper_bounds: space.hi.clone(),
        otp_before: evaluator.otp(&published),
        otp_after: out.value,
        observations: evaluator.tally(&published.scheduled_times()).total,
        iterations: out.iterations,
        evaluations: out.evaluations,
        history: out.history,
        seed: settings.seed,
        wall_time,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterOutcome {
    pub id: usize,
    pub months: Vec<MonthKey>,
    pub result: Option<OptimizationResult>,
    /// OTP of the unclustered schedule on this cluster's months.
    pub unclustered_otp: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRun {
    pub trip_id: String,
    pub unclustered: OptimizationResult,
    pub clusters: Vec<ClusterOutcome>,
}

impl ClusterRun {
    /// Observation-weighted OTP of the per-cluster schedules, over the
    /// clusters that succeeded.
    pub fn clustered_otp(&self) -> Option<f64> {
        let (num, den) = self
            .clusters
            .iter()
            .filter_map(|c| c.result.as_ref())
            .fold((0.0, 0u64), |(n, d), r| (n + r.otp_after * r.observations as f64, d + r.observations));
        (den > 0).then(|| num / den as f64)
    }
}

/// Runs the engine once over all of the trip's months and once per month
/// cluster. A failing cluster is recorded without affecting the others.
pub fn optimize_cluster(
    store: &HistoricalStore,
    clustering: &MonthClustering,
    settings: &OptimizeSettings,
) -> Result<ClusterRun> {
    let trip_id = clustering.trip_id.as_str();
    let all = store.trip_months(trip_id);
    let unclustered = optimize_trip(store, trip_id, &all, settings)?;
    let clusters = clustering
        .clusters()
        .into_par_iter()
        .enumerate()
        .map(|(id, months)| {
            let outcome = optimize_trip(store, trip_id, &months, settings).and_then(|r| {
                let ev = Evaluator::for_trip(store, trip_id, &months, settings.window, settings.sim)?;
                Ok((ev.otp(&unclustered.best), r))
            });
            match outcome {
                Ok((base, r)) => ClusterOutcome {
                    id,
                    months: months.into_iter().collect(),
                    result: Some(r),
                    unclustered_otp: Some(base),
                    error: None,
                },
                Err(e) => ClusterOutcome {
                    id,
                    months: months.into_iter().collect(),
                    result: None,
                    unclustered_otp: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(ClusterRun {
        trip_id: trip_id.to_string(),
        unclustered,
        clusters,
    })
}
