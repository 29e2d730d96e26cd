//! Historical timepoint records and the timepoint CSV format.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::{format_clock, parse_clock, Secs};

pub const TIMEPOINT_HEADER: [&str; 10] = [
    "service_date",
    "route_id",
    "trip_id",
    "direction",
    "timepoint_id",
    "sequence",
    "scheduled_time",
    "actual_arrival",
    "actual_departure",
    "vehicle_id",
];

/// Short alphanumeric timepoint code such as `SY19`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimepointId(String);

impl TimepointId {
    pub fn new(value: impl Into<String>) -> Result<Self> {
        let value = value.into();
        let trimmed = value.trim();
        if trimmed.is_empty() {
            return Err(Error::Argument("empty timepoint id".into()));
        }
        Ok(TimepointId(trimmed.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TimepointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Outbound,
    Inbound,
}

impl Direction {
    /// GTFS `direction_id`: 0 is outbound, 1 is inbound.
    pub fn from_gtfs(id: &str) -> Option<Self> {
        match id.trim() {
            "0" => Some(Direction::Outbound),
            "1" => Some(Direction::Inbound),
            _ => None,
        }
    }

    pub fn gtfs_id(self) -> &'static str {
        match self {
            Direction::Outbound => "0",
            Direction::Inbound => "1",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Outbound => "outbound",
            Direction::Inbound => "inbound",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "outbound" | "0" => Ok(Direction::Outbound),
            "inbound" | "1" => Ok(Direction::Inbound),
            other => Err(Error::Argument(format!("bad direction `{other}`"))),
        }
    }
}

/// One observation of a bus at a timepoint on a dated trip.
///
/// Actual times are optional so that incomplete rows survive parsing and can
/// be counted by the cleaner.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimepointRecord {
    pub service_date: NaiveDate,
    pub route_id: String,
    pub trip_id: String,
    pub direction: Direction,
    pub timepoint: TimepointId,
    pub sequence: u32,
    pub scheduled_time: Secs,
    pub actual_arrival: Option<Secs>,
    pub actual_departure: Option<Secs>,
    pub vehicle_id: Option<String>,
}

impl TimepointRecord {
    /// Both actual times, if present.
    pub fn actuals(&self) -> Option<(Secs, Secs)> {
        Some((self.actual_arrival?, self.actual_departure?))
    }
}

/// A row that could not be turned into a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    /// 1-based line number in the file (the header is line 1).
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimepointIngest {
    pub records: Vec<TimepointRecord>,
    pub rows: u64,
    pub errors: Vec<RowError>,
}

pub fn ingest_timepoints(path: impl AsRef<Path>) -> Result<TimepointIngest> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_timepoints(file, &path.display().to_string())
}

/// Parses timepoint CSV from any reader; `name` is used in error messages.
pub fn read_timepoints<R: Read>(reader: R, name: &str) -> Result<TimepointIngest> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let found: Vec<&str> = header.iter().collect();
    // vehicle_id is the only optional trailing column
    let ok = found == TIMEPOINT_HEADER || found == TIMEPOINT_HEADER[..9];
    if !ok {
        return Err(Error::Header {
            file: name.to_string(),
            expected: TIMEPOINT_HEADER.join(","),
            found: found.join(","),
        });
    }

    let mut out = TimepointIngest::default();
    for (i, row) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        out.rows += 1;
        let parsed = row
            .map_err(|e| e.to_string())
            .and_then(|row| parse_row(&row));
        match parsed {
            Ok(rec) => out.records.push(rec),
            Err(message) => out.errors.push(RowError { line, message }),
        }
    }
    Ok(out)
}

/// Parses one comma-separated data line without a header.
pub fn parse_timepoint_line(line: &str) -> std::result::Result<TimepointRecord, String> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(line.as_bytes());
    match rdr.records().next() {
        Some(Ok(row)) => parse_row(&row),
        Some(Err(e)) => Err(e.to_string()),
        None => Err("empty line".into()),
    }
}

fn parse_row(row: &csv::StringRecord) -> std::result::Result<TimepointRecord, String> {
    if row.len() != 9 && row.len() != 10 {
        return Err(format!("expected 9 or 10 fields, found {}", row.len()));
    }
    let get = |i: usize| row.get(i).unwrap_or("");
    let nonempty = |i: usize| -> std::result::Result<&str, String> {
        let v = get(i);
        if v.is_empty() {
            Err(format!("empty {}", TIMEPOINT_HEADER[i]))
        } else {
            Ok(v)
        }
    };
    let opt_time = |i: usize| -> std::result::Result<Option<Secs>, String> {
        match get(i) {
            "" => Ok(None),
            tok => parse_clock(tok)
                .map(Some)
                .map_err(|_| format!("bad {} `{tok}`", TIMEPOINT_HEADER[i])),
        }
    };

    let service_date = NaiveDate::parse_from_str(nonempty(0)?, "%Y-%m-%d")
        .map_err(|_| format!("bad service_date `{}`", get(0)))?;
    let direction: Direction = nonempty(3)?.parse().map_err(|e: Error| e.to_string())?;
    let timepoint = TimepointId::new(nonempty(4)?).map_err(|e| e.to_string())?;
    let sequence: u32 = nonempty(5)?
        .parse()
        .ok()
        .filter(|&s| s >= 1)
        .ok_or_else(|| format!("bad sequence `{}`", get(5)))?;
    let scheduled_time =
        parse_clock(nonempty(6)?).map_err(|_| format!("bad scheduled_time `{}`", get(6)))?;
    let actual_arrival = opt_time(7)?;
    let actual_departure = opt_time(8)?;
    if let (Some(a), Some(d)) = (actual_arrival, actual_departure) {
        if d < a {
            return Err(format!(
                "actual_departure {} precedes actual_arrival {}",
                format_clock(d),
                format_clock(a)
            ));
        }
    }
    let vehicle_id = match get(9) {
        "" => None,
        v => Some(v.to_string()),
    };

    Ok(TimepointRecord {
        service_date,
        route_id: nonempty(1)?.to_string(),
        trip_id: nonempty(2)?.to_string(),
        direction,
        timepoint,
        sequence,
        scheduled_time,
        actual_arrival,
        actual_departure,
        vehicle_id,
    })
}

/// Writes records in the timepoint CSV format (always with `vehicle_id`).
pub fn write_timepoints<W: Write>(writer: W, records: &[TimepointRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(TIMEPOINT_HEADER)?;
    let opt = |t: Option<Secs>| t.map(format_clock).unwrap_or_default();
    for r in records {
        wtr.write_record([
            r.service_date.format("%Y-%m-%d").to_string(),
            r.route_id.clone(),
            r.trip_id.clone(),
            r.direction.to_string(),
            r.timepoint.to_string(),
            r.sequence.to_string(),
            format_clock(r.scheduled_time),
            opt(r.actual_arrival),
            opt(r.actual_departure),
            r.vehicle_id.clone().unwrap_or_default(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<timepoints>", e))?;
    Ok(())
}
