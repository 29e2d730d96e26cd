//! Month clustering on per-segment travel-time statistics.

pub mod features;
pub mod kmeans;
pub mod select;

pub use features::{build_features, normalize, summarize, FeatureSet, FeatureVector};
pub use kmeans::{
    kmeans, kmeans_with, objective, silhouette_samples, silhouette_score, trivial_fit, KMeansFit,
};
pub use select::{
    cluster_months, select_k, ClusterConfig, ClusterEntry, ClusteringExport, KSelection,
    MonthClustering,
};
