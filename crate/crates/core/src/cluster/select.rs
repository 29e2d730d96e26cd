//! Choosing the number of month clusters by silhouette.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::features::{normalize, FeatureSet};
use super::kmeans::{kmeans_with, silhouette_score, trivial_fit, KMeansFit, DEFAULT_MAX_ITER};
use crate::data::MonthSet;
use crate::error::Result;
use crate::time::MonthKey;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    /// Largest k tried.
    pub upper_limit: usize,
    /// Below this mean silhouette the single-cluster answer is returned.
    pub min_silhouette: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            upper_limit: 4,
            min_silhouette: 0.25,
            restarts: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub fit: KMeansFit,
    pub silhouette: f64,
    /// Mean silhouette of every k tried.
    pub scores: Vec<(usize, f64)>,
}

/// Runs k-means for k in `2..=min(upper_limit, n - 1)` and keeps the best
/// mean silhouette (smallest k on ties). Falls back to k = 1 with fewer than
/// three points or when the best silhouette is under the threshold.
pub fn select_k(points: &[Vec<f64>], cfg: &ClusterConfig) -> Result<KSelection> {
    let n = points.len();
    let trivial = || KSelection {
        fit: trivial_fit(points),
        silhouette: 0.0,
        scores: Vec::new(),
    };
    if n < 3 || cfg.upper_limit < 2 {
        return Ok(trivial());
    }
    let mut scores = Vec::new();
    let mut best: Option<(KMeansFit, f64)> = None;
    for k in 2..=cfg.upper_limit.min(n - 1) {
        let fit = kmeans_with(points, k, cfg.seed, cfg.restarts, DEFAULT_MAX_ITER)?;
        let s = silhouette_score(points, &fit.labels);
        scores.push((k, s));
        if best.as_ref().is_none_or(|(_, b)| s > *b) {
            best = Some((fit, s));
        }
    }
    match best {
        Some((fit, s)) if s >= cfg.min_silhouette => Ok(KSelection {
            fit,
            silhouette: s,
            scores,
        }),
        _ => Ok(KSelection {
            scores,
            ..trivial()
        }),
    }
}

/// Months grouped into clusters for one trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthClustering {
    pub trip_id: String,
    pub k: usize,
    pub assignment: BTreeMap<MonthKey, usize>,
    /// Centroids in normalized feature space.
    pub centroids: Vec<Vec<f64>>,
    pub silhouette: f64,
    pub objective: f64,
    /// Months left out of feature building for lack of data; they join no
    /// cluster.
    pub excluded: Vec<MonthKey>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterEntry {
    pub id: usize,
    pub months: Vec<MonthKey>,
}

/// JSON shape of a clustering result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringExport {
    pub k: usize,
    pub silhouette: f64,
    pub clusters: Vec<ClusterEntry>,
}

impl MonthClustering {
    /// The whole month set as one cluster.
    pub fn single(trip_id: &str, months: &MonthSet) -> Self {
        MonthClustering {
            trip_id: trip_id.to_string(),
            k: 1,
            assignment: months.iter().map(|m| (*m, 0)).collect(),
            centroids: Vec::new(),
            silhouette: 0.0,
            objective: 0.0,
            excluded: Vec::new(),
        }
    }

    pub fn clusters(&self) -> Vec<MonthSet> {
        let mut out = vec![MonthSet::new(); self.k];
        for (m, &c) in &self.assignment {
            out[c].insert(*m);
        }
        out
    }

    pub fn export(&self) -> ClusteringExport {
        ClusteringExport {
            k: self.k,
            silhouette: self.silhouette,
            clusters: self
                .clusters()
                .into_iter()
                .enumerate()
                .map(|(id, months)| ClusterEntry {
                    id,
                    months: months.into_iter().collect(),
                })
                .collect(),
        }
    }
}

/// Normalizes a trip's feature vectors and clusters its months.
pub fn cluster_months(features: &FeatureSet, cfg: &ClusterConfig) -> Result<MonthClustering> {
    let points = if features.vectors.len() >= 2 {
        normalize(&features.points())
    } else {
        features.points()
    };
    let sel = select_k(&points, cfg)?;
    Ok(MonthClustering {
        trip_id: features.trip_id.clone(),
        k: sel.fit.k,
        assignment: features
            .months()
            .into_iter()
            .zip(sel.fit.labels.iter().copied())
            .collect(),
        centroids: sel.fit.centroids,
        silhouette: sel.silhouette,
        objective: sel.fit.objective,
        excluded: features.excluded.clone(),
    })
}
