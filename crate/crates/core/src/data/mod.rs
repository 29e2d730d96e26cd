//! Static schedule and timepoint history: parsing, cleaning and the
//! queryable store.

pub mod clean;
pub mod gtfs;
pub mod mad;
pub mod records;
pub mod store;

pub use clean::{clean, clean_with_patterns, infer_patterns, CleaningReport};
pub use gtfs::{ingest_static, write_static, RejectedTrip, StaticFeed, TripPattern};
pub use mad::{mad_outliers, mad_outliers_secs, median};
pub use records::{
    ingest_timepoints, read_timepoints, write_timepoints, Direction, RowError, TimepointId,
    TimepointIngest, TimepointRecord,
};
pub use store::{HistoricalStore, MonthSet, Segment};

use std::path::Path;

use crate::error::Result;

/// Standard on-disk dataset layout: `<root>/gtfs/` and `<root>/timepoints.csv`.
pub const GTFS_DIR: &str = "gtfs";
pub const TIMEPOINTS_FILE: &str = "timepoints.csv";

/// Everything produced by loading and cleaning a dataset.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub store: HistoricalStore,
    pub feed: StaticFeed,
    pub ingest: TimepointIngest,
    pub report: CleaningReport,
}

/// Ingests a static feed plus timepoint history and cleans them.
pub fn load(gtfs_dir: impl AsRef<Path>, records_file: impl AsRef<Path>) -> Result<LoadedData> {
    let feed = ingest_static(gtfs_dir)?;
    let mut ingest = ingest_timepoints(records_file)?;
    let records = std::mem::take(&mut ingest.records);
    let (store, report) = clean_with_patterns(records, feed.patterns.clone());
    Ok(LoadedData {
        store,
        feed,
        ingest,
        report,
    })
}
