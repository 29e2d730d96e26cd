//! Static schedule (GTFS subset) ingestion and export.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use super::records::{Direction, TimepointId};
use crate::error::{Error, Result};
use crate::time::{format_clock, parse_clock, Secs};

pub const REQUIRED_FILES: [&str; 4] = ["routes.txt", "trips.txt", "stop_times.txt", "stops.txt"];
pub const TRIP_LINKS_FILE: &str = "trip_links.txt";

/// Ordered timepoints of a trip and its chaining to the vehicle's next trip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripPattern {
    pub route_id: String,
    pub trip_id: String,
    pub direction: Direction,
    pub block_id: Option<String>,
    pub timepoints: Vec<TimepointId>,
    pub scheduled_times: Vec<Secs>,
    pub next_trip_id: Option<String>,
    /// Present iff `next_trip_id` is.
    pub scheduled_layover: Option<Secs>,
}

impl TripPattern {
    /// Builds an unchained pattern, checking length and monotonicity.
    pub fn new(
        route_id: impl Into<String>,
        trip_id: impl Into<String>,
        direction: Direction,
        timepoints: Vec<TimepointId>,
        scheduled_times: Vec<Secs>,
    ) -> Result<Self> {
        let pattern = TripPattern {
            route_id: route_id.into(),
            trip_id: trip_id.into(),
            direction,
            block_id: None,
            timepoints,
            scheduled_times,
            next_trip_id: None,
            scheduled_layover: None,
        };
        pattern.validate().map_err(Error::Argument)?;
        Ok(pattern)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let n = self.timepoints.len();
        if n < 2 {
            return Err(format!("trip {} has {n} timepoint(s), need at least 2", self.trip_id));
        }
        if self.scheduled_times.len() != n {
            return Err(format!("trip {} has mismatched schedule length", self.trip_id));
        }
        if self.scheduled_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(format!("trip {} has non-monotone stop times", self.trip_id));
        }
        let unique: BTreeSet<_> = self.timepoints.iter().collect();
        if unique.len() != n {
            return Err(format!("trip {} repeats a timepoint", self.trip_id));
        }
        if self.next_trip_id.is_some() != self.scheduled_layover.is_some() {
            return Err(format!("trip {} has inconsistent chaining", self.trip_id));
        }
        if self.scheduled_layover.is_some_and(|l| l < 0) {
            return Err(format!("trip {} has negative layover", self.trip_id));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.timepoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timepoints.is_empty()
    }

    pub fn segment_count(&self) -> usize {
        self.timepoints.len().saturating_sub(1)
    }

    pub fn first_time(&self) -> Secs {
        self.scheduled_times[0]
    }

    pub fn last_time(&self) -> Secs {
        *self.scheduled_times.last().expect("pattern has timepoints")
    }

    pub fn position(&self, tp: &TimepointId) -> Option<usize> {
        self.timepoints.iter().position(|t| t == tp)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedTrip {
    pub trip_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticFeed {
    pub patterns: Vec<TripPattern>,
    pub rejected: Vec<RejectedTrip>,
}

struct Table {
    columns: HashMap<String, usize>,
    rows: Vec<csv::StringRecord>,
    name: String,
}

impl Table {
    fn read(dir: &Path, name: &str) -> Result<Table> {
        let path = dir.join(name);
        if !path.is_file() {
            return Err(Error::MissingFile(path));
        }
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut rdr = csv::ReaderBuilder::new()
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(file);
        let columns = rdr
            .headers()?
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim_start_matches('\u{feff}').to_string(), i))
            .collect();
        let rows = rdr.records().collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Table {
            columns,
            rows,
            name: name.to_string(),
        })
    }

    fn require(&self, col: &str) -> Result<usize> {
        self.columns.get(col).copied().ok_or_else(|| Error::Ingest {
            file: self.name.clone(),
            message: format!("missing column `{col}`"),
        })
    }

    fn optional(&self, col: &str) -> Option<usize> {
        self.columns.get(col).copied()
    }
}

fn cell(row: &csv::StringRecord, idx: Option<usize>) -> &str {
    idx.and_then(|i| row.get(i)).unwrap_or("")
}

struct StopTime {
    sequence: u32,
    stop_id: String,
    time: Secs,
}

/// Reads `routes.txt`, `trips.txt`, `stop_times.txt` and `stops.txt` from
/// `dir` and returns one pattern per trip, keeping only timepoint stops.
///
/// Trips are chained through `block_id`; trips without a block may be linked
/// by an optional `trip_links.txt` (`trip_id,next_trip_id`).
pub fn ingest_static(dir: impl AsRef<Path>) -> Result<StaticFeed> {
    let dir = dir.as_ref();
    for name in REQUIRED_FILES {
        if !dir.join(name).is_file() {
            return Err(Error::MissingFile(dir.join(name)));
        }
    }
    let routes = Table::read(dir, "routes.txt")?;
    let trips = Table::read(dir, "trips.txt")?;
    let stop_times = Table::read(dir, "stop_times.txt")?;
    let stops = Table::read(dir, "stops.txt")?;

    let route_col = routes.require("route_id")?;
    let known_routes: BTreeSet<&str> = routes.rows.iter().map(|r| cell(r, Some(route_col))).collect();
    let stop_col = stops.require("stop_id")?;
    let known_stops: BTreeSet<&str> = stops.rows.iter().map(|r| cell(r, Some(stop_col))).collect();

    let t_route = trips.require("route_id")?;
    let t_trip = trips.require("trip_id")?;
    let t_dir = trips.optional("direction_id");
    let t_block = trips.optional("block_id");

    let s_trip = stop_times.require("trip_id")?;
    let s_stop = stop_times.require("stop_id")?;
    let s_seq = stop_times.require("stop_sequence")?;
    let s_arr = stop_times.optional("arrival_time");
    let s_dep = stop_times.optional("departure_time");
    let s_tp = stop_times.optional("timepoint");
    if s_arr.is_none() && s_dep.is_none() {
        return Err(Error::Ingest {
            file: "stop_times.txt".into(),
            message: "missing both arrival_time and departure_time".into(),
        });
    }

    let mut by_trip: BTreeMap<String, Vec<StopTime>> = BTreeMap::new();
    let mut rejected = Vec::new();
    let mut bad_trips = BTreeSet::new();
    for (i, row) in stop_times.rows.iter().enumerate() {
        let trip = cell(row, Some(s_trip)).to_string();
        // exact-time timepoints only; an absent flag means every timed stop counts
        if s_tp.is_some() && cell(row, s_tp) == "0" {
            continue;
        }
        let token = match cell(row, s_arr) {
            "" => cell(row, s_dep),
            t => t,
        };
        if token.is_empty() {
            continue;
        }
        let parsed = parse_clock(token).ok().zip(cell(row, Some(s_seq)).parse::<u32>().ok());
        let Some((time, sequence)) = parsed else {
            warn!("stop_times.txt line {}: unparseable row for trip {trip}", i + 2);
            bad_trips.insert(trip);
            continue;
        };
        let stop_id = cell(row, Some(s_stop)).to_string();
        if !known_stops.contains(stop_id.as_str()) {
            warn!("stop_times.txt line {}: unknown stop {stop_id}", i + 2);
        }
        by_trip.entry(trip).or_default().push(StopTime {
            sequence,
            stop_id,
            time,
        });
    }

    let mut patterns = Vec::new();
    for row in &trips.rows {
        let trip_id = cell(row, Some(t_trip)).to_string();
        let route_id = cell(row, Some(t_route)).to_string();
        let reject = |reason: String| {
            warn!("rejecting trip {trip_id}: {reason}");
            RejectedTrip {
                trip_id: trip_id.clone(),
                reason,
            }
        };
        if bad_trips.contains(&trip_id) {
            rejected.push(reject("unparseable stop_times row".into()));
            continue;
        }
        if !known_routes.contains(route_id.as_str()) {
            warn!("trip {trip_id} references unknown route {route_id}");
        }
        let direction = match t_dir.map(|c| cell(row, Some(c))) {
            None | Some("") => Direction::Outbound,
            Some(d) => match Direction::from_gtfs(d) {
                Some(d) => d,
                None => {
                    rejected.push(reject(format!("bad direction_id `{d}`")));
                    continue;
                }
            },
        };
        let mut stops = by_trip.remove(&trip_id).unwrap_or_default();
        stops.sort_by_key(|s| s.sequence);
        if stops.windows(2).any(|w| w[0].sequence == w[1].sequence) {
            rejected.push(reject("duplicate stop_sequence".into()));
            continue;
        }
        let timepoints: Result<Vec<_>> = stops
            .iter()
            .map(|s| TimepointId::new(s.stop_id.as_str()))
            .collect();
        let timepoints = match timepoints {
            Ok(t) => t,
            Err(e) => {
                rejected.push(reject(e.to_string()));
                continue;
            }
        };
        let pattern = TripPattern {
            route_id,
            trip_id: trip_id.clone(),
            direction,
            block_id: match cell(row, t_block) {
                "" => None,
                b => Some(b.to_string()),
            },
            timepoints,
            scheduled_times: stops.iter().map(|s| s.time).collect(),
            next_trip_id: None,
            scheduled_layover: None,
        };
        match pattern.validate() {
            Ok(()) => patterns.push(pattern),
            Err(reason) => rejected.push(reject(reason)),
        }
    }

    let links = read_trip_links(dir)?;
    chain_trips(&mut patterns, &links);
    Ok(StaticFeed { patterns, rejected })
}

fn read_trip_links(dir: &Path) -> Result<Vec<(String, String)>> {
    if !dir.join(TRIP_LINKS_FILE).is_file() {
        return Ok(Vec::new());
    }
    let table = Table::read(dir, TRIP_LINKS_FILE)?;
    let from = table.require("trip_id")?;
    let to = table.require("next_trip_id")?;
    Ok(table
        .rows
        .iter()
        .map(|r| (cell(r, Some(from)).to_string(), cell(r, Some(to)).to_string()))
        .filter(|(a, b)| !a.is_empty() && !b.is_empty())
        .collect())
}

/// Resolves `next_trip_id`/`scheduled_layover`. Trips sharing a block are
/// chained in order of first scheduled time; explicit links cover trips
/// without a block.
pub fn chain_trips(patterns: &mut [TripPattern], links: &[(String, String)]) {
    let index: HashMap<String, usize> = patterns
        .iter()
        .enumerate()
        .map(|(i, p)| (p.trip_id.clone(), i))
        .collect();
    let mut pairs: Vec<(usize, usize)> = Vec::new();

    let mut blocks: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, p) in patterns.iter().enumerate() {
        if let Some(b) = &p.block_id {
            blocks.entry(b.as_str()).or_default().push(i);
        }
    }
    for members in blocks.values_mut() {
        members.sort_by_key(|&i| (patterns[i].first_time(), patterns[i].trip_id.clone()));
        pairs.extend(members.windows(2).map(|w| (w[0], w[1])));
    }
    for (from, to) in links {
        match (index.get(from), index.get(to)) {
            (Some(&a), Some(&b)) if patterns[a].block_id.is_none() => pairs.push((a, b)),
            (Some(_), Some(_)) => warn!("ignoring link {from}->{to}: trip already has a block"),
            _ => warn!("ignoring link {from}->{to}: unknown trip"),
        }
    }

    let mut has_prev = BTreeSet::new();
    for (a, b) in pairs {
        let layover = patterns[b].first_time() - patterns[a].last_time();
        if layover < 0 {
            warn!(
                "not chaining {} -> {}: next trip starts before this one ends",
                patterns[a].trip_id, patterns[b].trip_id
            );
            continue;
        }
        if patterns[a].next_trip_id.is_some() || !has_prev.insert(b) {
            warn!(
                "not chaining {} -> {}: ambiguous link",
                patterns[a].trip_id, patterns[b].trip_id
            );
            continue;
        }
        patterns[a].next_trip_id = Some(patterns[b].trip_id.clone());
        patterns[a].scheduled_layover = Some(layover);
    }
}

/// Writes the GTFS subset read by [`ingest_static`]. Chained trips without a
/// block id receive one named after the head of their chain.
pub fn write_static(dir: impl AsRef<Path>, patterns: &[TripPattern]) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let blocks = export_blocks(patterns);
    let open = |name: &str| -> Result<csv::Writer<File>> {
        let path = dir.join(name);
        let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(csv::Writer::from_writer(f))
    };

    let mut routes = open("routes.txt")?;
    routes.write_record(["route_id", "route_short_name", "route_type"])?;
    let route_ids: BTreeSet<&str> = patterns.iter().map(|p| p.route_id.as_str()).collect();
    for r in route_ids {
        routes.write_record([r, r, "3"])?;
    }
    routes.flush().map_err(|e| Error::io(dir, e))?;

    let mut trips = open("trips.txt")?;
    trips.write_record(["route_id", "service_id", "trip_id", "direction_id", "block_id"])?;
    for (p, b) in patterns.iter().zip(&blocks) {
        trips.write_record([
            p.route_id.as_str(),
            "WKDY",
            p.trip_id.as_str(),
            p.direction.gtfs_id(),
            b.as_deref().unwrap_or(""),
        ])?;
    }
    trips.flush().map_err(|e| Error::io(dir, e))?;

    let mut stop_times = open("stop_times.txt")?;
    stop_times.write_record([
        "trip_id",
        "arrival_time",
        "departure_time",
        "stop_id",
        "stop_sequence",
        "timepoint",
    ])?;
    for p in patterns {
        for (i, (tp, t)) in p.timepoints.iter().zip(&p.scheduled_times).enumerate() {
            let clock = format_clock(*t);
            stop_times.write_record([
                p.trip_id.as_str(),
                &clock,
                &clock,
                tp.as_str(),
                &(i + 1).to_string(),
                "1",
            ])?;
        }
    }
    stop_times.flush().map_err(|e| Error::io(dir, e))?;

    let mut stops = open("stops.txt")?;
    stops.write_record(["stop_id", "stop_name"])?;
    let stop_ids: BTreeSet<&str> = patterns
        .iter()
        .flat_map(|p| p.timepoints.iter().map(TimepointId::as_str))
        .collect();
    for s in stop_ids {
        stops.write_record([s, s])?;
    }
    stops.flush().map_err(|e| Error::io(dir, e))?;
    Ok(())
}

fn export_blocks(patterns: &[TripPattern]) -> Vec<Option<String>> {
    let index: HashMap<&str, usize> = patterns
        .iter()
        .enumerate()
        .map(|(i, p)| (p.trip_id.as_str(), i))
        .collect();
    let mut blocks: Vec<Option<String>> = patterns.iter().map(|p| p.block_id.clone()).collect();
    let heads: Vec<usize> = {
        let targets: BTreeSet<&str> = patterns
            .iter()
            .filter_map(|p| p.next_trip_id.as_deref())
            .collect();
        (0..patterns.len())
            .filter(|&i| !targets.contains(patterns[i].trip_id.as_str()))
            .collect()
    };
    for head in heads {
        if patterns[head].next_trip_id.is_none() {
            continue;
        }
        let name = blocks[head]
            .clone()
            .unwrap_or_else(|| format!("block_{}", patterns[head].trip_id));
        let mut cur = Some(head);
        let mut seen = BTreeSet::new();
        while let Some(i) = cur {
            if !seen.insert(i) {
                break;
            }
            blocks[i] = Some(name.clone());
            cur = patterns[i]
                .next_trip_id
                .as_deref()
                .and_then(|n| index.get(n).copied());
        }
    }
    blocks
}
