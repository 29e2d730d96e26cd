//! End-to-end runs behind the CLI: configuration, data loading and the
//! output files of each subcommand.

pub mod pipeline;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cluster::ClusterConfig;
use crate::data::{self, LoadedData};
use crate::error::{Error, Result};
use crate::opt::{Engine, GaConfig, OptimizeSettings, PsoConfig, DEFAULT_EXHAUSTIVE_LIMIT};
use crate::sim::{FirstStopDelay, OnTimeWindow, SimOptions};
use crate::time::Secs;

pub use pipeline::{
    optimize, optimize_all, stability, sweep, write_optimize_outputs, RunOutput, SummaryRow, SweepParam,
    SweepRow, TripRun,
};
pub use report::{render_report, ReportOutcome};

/// Exit status for usage errors.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for unreadable or inconsistent data.
pub const EXIT_DATA: i32 = 3;
/// Exit status when an exhaustive search is refused.
pub const EXIT_REFUSED: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Argument(_) => EXIT_USAGE,
        Error::SearchRefused { .. } => EXIT_REFUSED,
        _ => EXIT_DATA,
    }
}

/// Everything that determines a run. Loaded from JSON, then overridden by
/// command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Dataset root holding `gtfs/` and `timepoints.csv`.
    pub data: Option<PathBuf>,
    pub gtfs: Option<PathBuf>,
    pub records: Option<PathBuf>,
    pub window_early: Secs,
    pub window_late: Secs,
    pub first_stop: FirstStopDelay,
    pub engine: Engine,
    pub ga: GaConfig,
    pub pso: PsoConfig,
    pub exhaustive_limit: u64,
    pub shift_first_departure: bool,
    pub clusters: bool,
    pub upper_limit: usize,
    pub min_silhouette: f64,
    pub kmeans_restarts: usize,
    pub remove_outliers: bool,
    /// Trips to optimize; empty means every trip with history.
    pub trips: Vec<String>,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub repeat: usize,
    /// Worker threads; 0 uses every core.
    #[serde(skip_serializing)]
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let window = OnTimeWindow::default();
        RunConfig {
            data: None,
            gtfs: None,
            records: None,
            window_early: window.early,
            window_late: window.late,
            first_stop: FirstStopDelay::default(),
            engine: Engine::Ga,
            ga: GaConfig::default(),
            pso: PsoConfig::default(),
            exhaustive_limit: DEFAULT_EXHAUSTIVE_LIMIT as u64,
            shift_first_departure: false,
            clusters: true,
            upper_limit: 4,
            min_silhouette: 0.25,
            kmeans_restarts: 1,
            remove_outliers: true,
            trips: Vec::new(),
            out: None,
            seed: 0,
            repeat: 1,
            jobs: 0,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Argument(format!("config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.window()?;
        if self.repeat == 0 {
            return Err(Error::Argument("repeat must be at least 1".into()));
        }
        self.ga.validate()?;
        self.pso.validate()?;
        Ok(())
    }

    pub fn window(&self) -> Result<OnTimeWindow> {
        OnTimeWindow::new(self.window_early, self.window_late)
    }

    pub fn settings(&self, seed: u64) -> Result<OptimizeSettings> {
        Ok(OptimizeSettings {
            engine: self.engine,
            window: self.window()?,
            sim: SimOptions {
                first_stop: self.first_stop,
            },
            ga: self.ga,
            pso: self.pso,
            exhaustive_limit: self.exhaustive_limit,
            shift_first_departure: self.shift_first_departure,
            seed,
        })
    }

    pub fn cluster_config(&self, seed: u64) -> ClusterConfig {
        ClusterConfig {
            upper_limit: self.upper_limit,
            min_silhouette: self.min_silhouette,
            restarts: self.kmeans_restarts,
            seed,
        }
    }

    fn input_paths(&self) -> Result<(PathBuf, PathBuf)> {
        let root = self.data.as_deref();
        let gtfs = self
            .gtfs
            .clone()
            .or_else(|| root.map(|r| r.join(data::GTFS_DIR)));
        let records = self
            .records
            .clone()
            .or_else(|| root.map(|r| r.join(data::TIMEPOINTS_FILE)));
        match (gtfs, records) {
            (Some(g), Some(r)) => Ok((g, r)),
            _ => Err(Error::Argument(
                "no input data: pass --data DIR or both --gtfs and --records".into(),
            )),
        }
    }

    /// Ingests and cleans the configured dataset.
    pub fn load(&self) -> Result<LoadedData> {
        let (gtfs, records) = self.input_paths()?;
        let mut loaded = data::load(gtfs, records)?;
        loaded.store = loaded.store.with_outlier_removal(self.remove_outliers);
        for rejected in &loaded.feed.rejected {
            log::warn!("rejected trip {}: {}", rejected.trip_id, rejected.reason);
        }
        Ok(loaded)
    }

    /// Configured trips, or every trip with at least one month of history.
    pub fn trip_ids(&self, loaded: &LoadedData) -> Result<Vec<String>> {
        if !self.trips.is_empty() {
            for t in &self.trips {
                loaded.store.pattern(t)?;
            }
            return Ok(self.trips.clone());
        }
        let trips: Vec<String> = loaded
            .store
            .patterns()
            .filter(|p| !loaded.store.trip_months(&p.trip_id).is_empty())
            .map(|p| p.trip_id.clone())
            .collect();
        if trips.is_empty() {
            return Err(Error::Evaluation("no trip has timepoint history".into()));
        }
        Ok(trips)
    }

    pub fn out_dir(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::Argument("--out DIR is required".into()))
    }
}

/// Creates `dir`, refusing to reuse a non-empty directory unless `force`.
pub fn prepare_out_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let occupied = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .next()
            .is_some();
        if occupied && !force {
            return Err(Error::Argument(format!(
                "{} already has outputs; pass --force to overwrite",
                dir.display()
            )));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text)
}

/// A trip id made safe for use in a file name.
pub fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}
