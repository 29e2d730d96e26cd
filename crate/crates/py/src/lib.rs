//! Python bindings. Results that have a JSON form in the CLI come back as
//! plain dicts.

use pyo3::exceptions::{PyFileNotFoundError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

use busopt::cluster::{build_features, cluster_months, ClusterConfig};
use busopt::data::{self, clean_with_patterns, CleaningReport, HistoricalStore, MonthSet};
use busopt::opt::{optimize_trip, Engine, OptimizeSettings};
use busopt::sim::{CandidateTimetable, Evaluator, OnTimeWindow, SimOptions};
use busopt::synth::{generate, two_regime_benchmark};
use busopt::{Error, MonthKey};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::MissingFile(_) => PyFileNotFoundError::new_err(err.to_string()),
        Error::SearchRefused { .. } | Error::Evaluation(_) => PyRuntimeError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn to_dict<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn window(early: i64, late: i64) -> PyResult<OnTimeWindow> {
    OnTimeWindow::new(early, late).map_err(to_py)
}

/// Indices of samples more than three scaled MADs from the median.
#[pyfunction]
fn mad_outliers(samples: Vec<f64>) -> Vec<usize> {
    data::mad_outliers(&samples)
}

/// Fraction of samples in [x + early, x + late].
#[pyfunction]
#[pyo3(signature = (samples, x, early=-60, late=300))]
fn empirical_cdf_window(samples: Vec<i64>, x: i64, early: i64, late: i64) -> PyResult<f64> {
    busopt::sim::empirical_cdf_window(&samples, x, window(early, late)?).map_err(to_py)
}

#[pyfunction]
fn dwell_time(scheduled: i64, arrival: i64, departure: i64) -> i64 {
    busopt::sim::dwell_time(scheduled, arrival, departure)
}

#[pyfunction]
fn silhouette_score(points: Vec<Vec<f64>>, labels: Vec<usize>) -> PyResult<f64> {
    if points.len() != labels.len() {
        return Err(PyValueError::new_err("points and labels differ in length"));
    }
    Ok(busopt::cluster::silhouette_score(&points, &labels))
}

/// Cleaned timepoint history.
#[pyclass(frozen)]
struct Dataset {
    store: HistoricalStore,
    report: CleaningReport,
}

impl Dataset {
    fn months_arg(&self, trip: &str, months: Option<Vec<String>>) -> PyResult<MonthSet> {
        match months {
            None => Ok(self.store.trip_months(trip)),
            Some(list) => list
                .iter()
                .map(|m| m.parse::<MonthKey>().map_err(to_py))
                .collect(),
        }
    }
}

#[pymethods]
impl Dataset {
    /// Reads a GTFS directory and a timepoint CSV.
    #[staticmethod]
    fn load(gtfs_dir: &str, records_file: &str) -> PyResult<Self> {
        let loaded = data::load(gtfs_dir, records_file).map_err(to_py)?;
        Ok(Dataset { store: loaded.store, report: loaded.report })
    }

    /// The built-in two-regime benchmark.
    #[staticmethod]
    #[pyo3(signature = (seed=0, shift=180.0))]
    fn synthetic(seed: u64, shift: f64) -> PyResult<Self> {
        let d = generate(&two_regime_benchmark(seed, shift)).map_err(to_py)?;
        let (store, report) = clean_with_patterns(d.records, d.patterns);
        Ok(Dataset { store, report })
    }

    fn trip_ids(&self) -> Vec<String> {
        self.store.patterns().map(|p| p.trip_id.clone()).collect()
    }

    fn months(&self, trip: &str) -> Vec<String> {
        self.store.trip_months(trip).iter().map(|m| m.to_string()).collect()
    }

    fn published_times(&self, trip: &str) -> PyResult<Vec<i64>> {
        Ok(self.store.pattern(trip).map_err(to_py)?.scheduled_times.clone())
    }

    fn cleaning_report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.report)
    }

    #[pyo3(signature = (trip, upper_limit=4, seed=0))]
    fn cluster<'py>(&self, py: Python<'py>, trip: &str, upper_limit: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let cfg = ClusterConfig { upper_limit, seed, ..Default::default() };
        let c = py
            .detach(|| build_features(&self.store, trip).and_then(|f| cluster_months(&f, &cfg)))
            .map_err(to_py)?;
        to_dict(py, &c.export())
    }

    /// On-time performance of the published timetable, or of per-segment
    /// minutes starting at the published first departure.
    #[pyo3(signature = (trip, minutes=None, months=None, early=-60, late=300))]
    fn evaluate(
        &self,
        trip: &str,
        minutes: Option<Vec<i64>>,
        months: Option<Vec<String>>,
        early: i64,
        late: i64,
    ) -> PyResult<f64> {
        let pattern = self.store.pattern(trip).map_err(to_py)?;
        let cand = match minutes {
            None => CandidateTimetable::from_pattern(pattern),
            Some(m) => CandidateTimetable::from_minutes(trip, pattern.first_time(), &m),
        };
        cand.validate_for(pattern).map_err(to_py)?;
        let months = self.months_arg(trip, months)?;
        let ev = Evaluator::for_trip(&self.store, trip, &months, window(early, late)?, SimOptions::default())
            .map_err(to_py)?;
        Ok(ev.otp(&cand))
    }

    #[pyo3(signature = (trip, engine="ga", seed=0, months=None, early=-60, late=300))]
    fn optimize<'py>(
        &self,
        py: Python<'py>,
        trip: &str,
        engine: &str,
        seed: u64,
        months: Option<Vec<String>>,
        early: i64,
        late: i64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let engine: Engine = engine.parse().map_err(to_py)?;
        let months = self.months_arg(trip, months)?;
        let settings = OptimizeSettings { engine, seed, window: window(early, late)?, ..Default::default() };
        let r = py
            .detach(|| optimize_trip(&self.store, trip, &months, &settings))
            .map_err(to_py)?;
        to_dict(py, &r)
    }

    fn __len__(&self) -> usize {
        self.store.records().len()
    }
}

#[pymodule(name = "busopt")]
fn busopt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(mad_outliers, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_cdf_window, m)?)?;
    m.add_function(wrap_pyfunction!(dwell_time, m)?)?;
    m.add_function(wrap_pyfunction!(silhouette_score, m)?)?;
    m.add_class::<Dataset>()?;
    Ok(())
}
