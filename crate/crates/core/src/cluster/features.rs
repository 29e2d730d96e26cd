//! Per-month travel-time feature vectors.

use serde::{Deserialize, Serialize};

use crate::data::{median, HistoricalStore, MonthSet};
use crate::error::{Error, Result};
use crate::time::MonthKey;

/// `[mean, median, std]` of travel time per segment, concatenated in
/// segment order. Units are seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub month: MonthKey,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub trip_id: String,
    pub vectors: Vec<FeatureVector>,
    /// Months dropped because some segment had no observation.
    pub excluded: Vec<MonthKey>,
}

impl FeatureSet {
    pub fn months(&self) -> Vec<MonthKey> {
        self.vectors.iter().map(|v| v.month).collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.vectors.iter().map(|v| v.values.clone()).collect()
    }
}

/// Mean, median and population standard deviation.
pub fn summarize(samples: &[i64]) -> Option<[f64; 3]> {
    if samples.is_empty() {
        return None;
    }
    let xs: Vec<f64> = samples.iter().map(|&x| x as f64).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Some([mean, median(&xs)?, var.sqrt()])
}

/// One feature vector per month of the trip's history that has at least one
/// travel time on every segment.
pub fn build_features(store: &HistoricalStore, trip_id: &str) -> Result<FeatureSet> {
    let pattern = store.pattern(trip_id)?;
    let mut vectors = Vec::new();
    let mut excluded = Vec::new();
    'months: for month in store.trip_months(trip_id) {
        let only: MonthSet = [month].into();
        let mut values = Vec::with_capacity(3 * pattern.segment_count());
        for seg in 0..pattern.segment_count() {
            let times = store.trip_travel_times(trip_id, seg, &only)?;
            match summarize(&times) {
                Some(s) => values.extend(s),
                None => {
                    excluded.push(month);
                    continue 'months;
                }
            }
        }
        vectors.push(FeatureVector { month, values });
    }
    if vectors.is_empty() {
        return Err(Error::ClusteringUnavailable(format!(
            "trip {trip_id} has no month with observations on every segment"
        )));
    }
    Ok(FeatureSet {
        trip_id: trip_id.to_string(),
        vectors,
        excluded,
    })
}

/// Per-dimension z-score with the population standard deviation; constant
/// dimensions map to 0.
pub fn normalize(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let Some(dim) = points.first().map(Vec::len) else {
        return Vec::new();
    };
    let n = points.len() as f64;
    let mut out = points.to_vec();
    for d in 0..dim {
        let mean = points.iter().map(|p| p[d]).sum::<f64>() / n;
        let var = points.iter().map(|p| (p[d] - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        for p in &mut out {
            p[d] = if std > 0.0 { (p[d] - mean) / std } else { 0.0 };
        }
    }
    out
}
