//! Optimize, stability and sweep runs and their output files.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{file_stem, prepare_out_dir, write_file, write_json, RunConfig};
use crate::cluster::{build_features, cluster_months, MonthClustering};
use crate::data::LoadedData;
use crate::error::{Error, Result};
use crate::opt::{optimize_cluster, optimize_trip, ClusterRun, Engine, OptimizationResult};
use crate::sim::{write_candidates, CandidateTimetable, Evaluator};

fn refuse_existing(path: &Path, force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(Error::Argument(format!(
            "{} already exists; pass --force to overwrite",
            path.display()
        )));
    }
    Ok(())
}

/// Trip id used for rows aggregated over every trip.
pub const ALL_TRIPS: &str = "ALL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripRun {
    pub clustering: Option<MonthClustering>,
    pub run: ClusterRun,
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub trip_id: String,
    pub variant: String,
    pub otp: f64,
    pub observations: u64,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub seed: u64,
    pub trips: Vec<TripRun>,
    pub summary: Vec<SummaryRow>,
}

impl RunOutput {
    pub fn row(&self, trip_id: &str, variant: &str) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.trip_id == trip_id && r.variant == variant)
    }
}

fn clustering_for(cfg: &RunConfig, loaded: &LoadedData, trip_id: &str, seed: u64) -> Result<MonthClustering> {
    let store = &loaded.store;
    let features = match build_features(store, trip_id) {
        Ok(f) => f,
        Err(Error::ClusteringUnavailable(msg)) => {
            log::warn!("{msg}; using one cluster");
            return Ok(MonthClustering::single(trip_id, &store.trip_months(trip_id)));
        }
        Err(e) => return Err(e),
    };
    cluster_months(&features, &cfg.cluster_config(seed))
}

fn run_trip(cfg: &RunConfig, loaded: &LoadedData, trip_id: &str, seed: u64) -> Result<TripRun> {
    let settings = cfg.settings(seed)?;
    let store = &loaded.store;
    if !cfg.clusters {
        let months = store.trip_months(trip_id);
        let unclustered = optimize_trip(store, trip_id, &months, &settings)?;
        return Ok(TripRun {
            clustering: None,
            run: ClusterRun {
                trip_id: trip_id.to_string(),
                unclustered,
                clusters: Vec::new(),
            },
        });
    }
    let clustering = clustering_for(cfg, loaded, trip_id, seed)?;
    let run = optimize_cluster(store, &clustering, &settings)?;
    for c in &run.clusters {
        if let Some(e) = &c.error {
            log::warn!("trip {trip_id} cluster {}: {e}", c.id);
        }
    }
    Ok(TripRun {
        clustering: Some(clustering),
        run,
    })
}

fn weighted(rows: &[&SummaryRow]) -> (f64, u64, f64) {
    let obs: u64 = rows.iter().map(|r| r.observations).sum();
    let hits: f64 = rows.iter().map(|r| r.otp * r.observations as f64).sum();
    let time: f64 = rows.iter().map(|r| r.wall_time).sum();
    (if obs > 0 { hits / obs as f64 } else { 0.0 }, obs, time)
}

fn summarize(engine: Engine, trips: &[TripRun]) -> Vec<SummaryRow> {
    let unclustered = format!("{engine}_unclustered");
    let clustered = format!("{engine}_clustered");
    let mut rows = Vec::new();
    for t in trips {
        let u = &t.run.unclustered;
        rows.push(SummaryRow {
            trip_id: u.trip_id.clone(),
            variant: "original".into(),
            otp: u.otp_before,
            observations: u.observations,
            wall_time: 0.0,
        });
        rows.push(SummaryRow {
            trip_id: u.trip_id.clone(),
            variant: unclustered.clone(),
            otp: u.otp_after,
            observations: u.observations,
            wall_time: u.wall_time,
        });
        if t.clustering.is_some() {
            let done: Vec<&OptimizationResult> = t.run.clusters.iter().filter_map(|c| c.result.as_ref()).collect();
            rows.push(SummaryRow {
                trip_id: u.trip_id.clone(),
                variant: clustered.clone(),
                otp: t.run.clustered_otp().unwrap_or(0.0),
                observations: done.iter().map(|r| r.observations).sum(),
                wall_time: done.iter().map(|r| r.wall_time).sum(),
            });
        }
    }
    let variants: Vec<String> = rows.iter().take(3).map(|r| r.variant.clone()).collect();
    for variant in variants {
        let same: Vec<&SummaryRow> = rows.iter().filter(|r| r.variant == variant).collect();
        let (otp, observations, wall_time) = weighted(&same);
        rows.push(SummaryRow {
            trip_id: ALL_TRIPS.into(),
            variant,
            otp,
            observations,
            wall_time,
        });
    }
    rows
}

/// Runs every configured trip once with `seed`.
pub fn optimize_all(cfg: &RunConfig, loaded: &LoadedData, seed: u64) -> Result<RunOutput> {
    let trip_ids = cfg.trip_ids(loaded)?;
    let trips = trip_ids
        .par_iter()
        .map(|t| run_trip(cfg, loaded, t, seed))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(cfg.engine, &trips);
    Ok(RunOutput { seed, trips, summary })
}

fn csv_text<F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>>(f: F) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    f(&mut w)?;
    let bytes = w.into_inner().map_err(|e| Error::Argument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn summary_csv(rows: &[SummaryRow]) -> Result<String> {
    csv_text(|w| {
        w.write_record(["trip_id", "variant", "otp", "observations", "wall_time"])?;
        for r in rows {
            w.write_record([
                r.trip_id.clone(),
                r.variant.clone(),
                format!("{:.6}", r.otp),
                r.observations.to_string(),
                format!("{:.6}", r.wall_time),
            ])?;
        }
        Ok(())
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn repeats_csv(outputs: &[RunOutput]) -> Result<String> {
    csv_text(|w| {
        w.write_record(["run", "seed", "trip_id", "variant", "otp", "wall_time"])?;
        for (i, out) in outputs.iter().enumerate() {
            for r in &out.summary {
                w.write_record([
                    i.to_string(),
                    out.seed.to_string(),
                    r.trip_id.clone(),
                    r.variant.clone(),
                    format!("{:.6}", r.otp),
                    format!("{:.6}", r.wall_time),
                ])?;
            }
        }
        for (j, r) in outputs[0].summary.iter().enumerate() {
            let otps: Vec<f64> = outputs.iter().map(|o| o.summary[j].otp).collect();
            let times: Vec<f64> = outputs.iter().map(|o| o.summary[j].wall_time).collect();
            let (om, os) = mean_std(&otps);
            let (tm, ts) = mean_std(&times);
            for (label, otp, time) in [("mean", om, tm), ("std", os, ts)] {
                w.write_record([
                    label.to_string(),
                    String::new(),
                    r.trip_id.clone(),
                    r.variant.clone(),
                    format!("{otp:.6}"),
                    format!("{time:.6}"),
                ])?;
            }
        }
        Ok(())
    })
}

fn write_timetable(path: &Path, candidate: &CandidateTimetable, loaded: &LoadedData) -> Result<()> {
    let pattern = loaded.store.pattern(&candidate.trip_id)?;
    let mut buf = Vec::new();
    write_candidates(&mut buf, &[(candidate, pattern)])?;
    write_file(path, buf)
}

fn write_report(
    path: &Path,
    cfg: &RunConfig,
    loaded: &LoadedData,
    result: &OptimizationResult,
    candidate: &CandidateTimetable,
) -> Result<()> {
    let months = result.months.iter().copied().collect();
    let settings = cfg.settings(result.seed)?;
    let start = std::time::Instant::now();
    let ev = Evaluator::for_trip(&loaded.store, &result.trip_id, &months, settings.window, settings.sim)?;
    let mut report = ev.report(candidate)?;
    report.seed = Some(result.seed);
    report.wall_time = start.elapsed().as_secs_f64();
    write_json(path, &report)
}

/// Writes the files of one optimize invocation; `outputs[0]` supplies the
/// timetables and per-run detail.
pub fn write_optimize_outputs(dir: &Path, cfg: &RunConfig, loaded: &LoadedData, outputs: &[RunOutput]) -> Result<()> {
    let first = outputs
        .first()
        .ok_or_else(|| Error::Argument("no runs to write".into()))?;
    write_json(&dir.join("config.json"), cfg)?;
    write_json(&dir.join("cleaning_report.json"), &loaded.report)?;
    write_file(&dir.join("summary.csv"), summary_csv(&first.summary)?)?;
    if outputs.len() > 1 {
        write_file(&dir.join("repeats.csv"), repeats_csv(outputs)?)?;
    }
    for t in &first.trips {
        let u = &t.run.unclustered;
        let stem = file_stem(&u.trip_id);
        let published = CandidateTimetable::from_pattern(loaded.store.pattern(&u.trip_id)?);
        write_report(&dir.join(format!("reports/{stem}__original.json")), cfg, loaded, u, &published)?;
        write_json(&dir.join(format!("results/{stem}__unclustered.json")), u)?;
        write_timetable(&dir.join(format!("timetables/{stem}__unclustered.csv")), &u.best, loaded)?;
        write_report(&dir.join(format!("reports/{stem}__unclustered.json")), cfg, loaded, u, &u.best)?;
        if let Some(c) = &t.clustering {
            write_json(&dir.join(format!("clustering/{stem}.json")), &c.export())?;
        }
        for c in &t.run.clusters {
            let name = format!("{stem}__cluster{}", c.id);
            match &c.result {
                Some(r) => {
                    write_json(&dir.join(format!("results/{name}.json")), r)?;
                    write_timetable(&dir.join(format!("timetables/{name}.csv")), &r.best, loaded)?;
                    write_report(&dir.join(format!("reports/{name}.json")), cfg, loaded, r, &r.best)?;
                }
                None => write_json(&dir.join(format!("results/{name}.error.json")), c)?,
            }
        }
    }
    Ok(())
}

/// The `optimize` subcommand: `repeat` runs with consecutive seeds.
pub fn optimize(cfg: &RunConfig, force: bool) -> Result<Vec<RunOutput>> {
    cfg.validate()?;
    let dir = cfg.out_dir()?;
    let loaded = cfg.load()?;
    cfg.trip_ids(&loaded)?;
    prepare_out_dir(dir, force)?;
    let outputs = (0..cfg.repeat as u64)
        .map(|i| optimize_all(cfg, &loaded, cfg.seed + i))
        .collect::<Result<Vec<_>>>()?;
    write_optimize_outputs(dir, cfg, &loaded, &outputs)?;
    Ok(outputs)
}

/// Repeated runs of each engine, written to `stability.csv`.
pub fn stability(cfg: &RunConfig, engines: &[Engine], force: bool) -> Result<String> {
    cfg.validate()?;
    let dir = cfg.out_dir()?;
    let loaded = cfg.load()?;
    cfg.trip_ids(&loaded)?;
    let path = dir.join("stability.csv");
    refuse_existing(&path, force)?;
    let mut rows: Vec<(Engine, String, usize, u64, f64, f64, f64)> = Vec::new();
    for &engine in engines {
        let ecfg = RunConfig { engine, ..cfg.clone() };
        for run in 0..cfg.repeat {
            let seed = cfg.seed + run as u64;
            let out = optimize_all(&ecfg, &loaded, seed)?;
            let before = out.row(ALL_TRIPS, "original").map_or(0.0, |r| r.otp);
            for variant in ["unclustered", "clustered"] {
                if let Some(r) = out.row(ALL_TRIPS, &format!("{engine}_{variant}")) {
                    rows.push((engine, variant.into(), run, seed, before, r.otp, r.wall_time));
                }
            }
        }
    }
    let text = csv_text(|w| {
        w.write_record(["engine", "variant", "run", "seed", "otp_before", "otp_after", "wall_time"])?;
        for (e, v, run, seed, b, a, t) in &rows {
            w.write_record([
                e.to_string(),
                v.clone(),
                run.to_string(),
                seed.to_string(),
                format!("{b:.6}"),
                format!("{a:.6}"),
                format!("{t:.6}"),
            ])?;
        }
        let mut groups: Vec<(Engine, &str)> = Vec::new();
        for r in &rows {
            if !groups.contains(&(r.0, r.1.as_str())) {
                groups.push((r.0, r.1.as_str()));
            }
        }
        for (e, v) in groups {
            let pick = |f: fn(&(Engine, String, usize, u64, f64, f64, f64)) -> f64| -> Vec<f64> {
                rows.iter().filter(|r| r.0 == e && r.1 == v).map(f).collect()
            };
            let (bm, bs) = mean_std(&pick(|r| r.4));
            let (am, as_) = mean_std(&pick(|r| r.5));
            let (tm, ts) = mean_std(&pick(|r| r.6));
            for (label, b, a, t) in [("mean", bm, am, tm), ("std", bs, as_, ts)] {
                w.write_record([
                    e.to_string(),
                    v.to_string(),
                    label.to_string(),
                    String::new(),
                    format!("{b:.6}"),
                    format!("{a:.6}"),
                    format!("{t:.6}"),
                ])?;
            }
        }
        Ok(())
    })?;
    write_file(&path, &text)?;
    Ok(text)
}

/// Hyper-parameters that can be swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    PopSize,
    CrossoverRate,
    MutationRate,
    SwarmSize,
    W,
    C1,
    C2,
}

impl SweepParam {
    pub const ALL: [SweepParam; 7] = [
        SweepParam::PopSize,
        SweepParam::CrossoverRate,
        SweepParam::MutationRate,
        SweepParam::SwarmSize,
        SweepParam::W,
        SweepParam::C1,
        SweepParam::C2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::PopSize => "pop_size",
            SweepParam::CrossoverRate => "crossover_rate",
            SweepParam::MutationRate => "mutation_rate",
            SweepParam::SwarmSize => "swarm_size",
            SweepParam::W => "w",
            SweepParam::C1 => "c1",
            SweepParam::C2 => "c2",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        SweepParam::ALL.into_iter().find(|p| p.name() == name).ok_or_else(|| {
            let names: Vec<&str> = SweepParam::ALL.iter().map(|p| p.name()).collect();
            Error::Argument(format!("unknown sweep parameter `{name}`; expected one of {}", names.join(", ")))
        })
    }

    pub fn engine(self) -> Engine {
        match self {
            SweepParam::PopSize | SweepParam::CrossoverRate | SweepParam::MutationRate => Engine::Ga,
            _ => Engine::Pso,
        }
    }

    /// `base` with this parameter set to `value` and the matching engine.
    pub fn apply(self, base: &RunConfig, value: f64) -> Result<RunConfig> {
        let mut cfg = RunConfig {
            engine: self.engine(),
            ..base.clone()
        };
        let count = || -> Result<usize> {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(Error::Argument(format!("{} needs a whole number, got {value}", self.name())));
            }
            Ok(value as usize)
        };
        match self {
            SweepParam::PopSize => cfg.ga.pop_size = count()?,
            SweepParam::CrossoverRate => cfg.ga.crossover_rate = value,
            SweepParam::MutationRate => cfg.ga.mutation_rate = value,
            SweepParam::SwarmSize => cfg.pso.swarm_size = count()?,
            SweepParam::W => cfg.pso.w = value,
            SweepParam::C1 => cfg.pso.c1 = value,
            SweepParam::C2 => cfg.pso.c2 = value,
        }
        cfg.ga.validate()?;
        cfg.pso.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    pub run: usize,
    pub otp: f64,
    pub wall_time: f64,
}

/// Runs the parameter's engine `repeat` times per grid value, without
/// clustering, and writes `sweep_<param>.csv`.
pub fn sweep(cfg: &RunConfig, param: SweepParam, values: &[f64], force: bool) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    if values.is_empty() {
        return Err(Error::Argument("sweep grid is empty".into()));
    }
    let configs = values
        .iter()
        .map(|&v| {
            let mut c = param.apply(cfg, v)?;
            c.clusters = false;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let dir = cfg.out_dir()?;
    let loaded = cfg.load()?;
    cfg.trip_ids(&loaded)?;
    let path = dir.join(format!("sweep_{}.csv", param.name()));
    refuse_existing(&path, force)?;
    let points: Vec<(usize, usize)> = (0..values.len())
        .flat_map(|i| (0..cfg.repeat).map(move |r| (i, r)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(i, run)| {
            let out = optimize_all(&configs[i], &loaded, cfg.seed + run as u64)?;
            let row = out
                .row(ALL_TRIPS, &format!("{}_unclustered", param.engine()))
                .expect("unclustered row always present");
            Ok(SweepRow {
                param: param.name().into(),
                value: values[i],
                run,
                otp: row.otp,
                wall_time: row.wall_time,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let text = csv_text(|w| {
        w.write_record(["param", "value", "run", "otp", "wall_time"])?;
        for r in &rows {
            w.write_record([
                r.param.clone(),
                r.value.to_string(),
                r.run.to_string(),
                format!("{:.6}", r.otp),
                format!("{:.6}", r.wall_time),
            ])?;
        }
        Ok(())
    })?;
    write_file(&path, text)?;
    Ok(rows)
}
