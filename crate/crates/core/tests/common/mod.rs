#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use busopt::data::{clean_with_patterns, Direction, HistoricalStore, TimepointId, TimepointRecord, TripPattern};
use busopt::time::parse_clock;
use chrono::NaiveDate;

pub fn tp(s: &str) -> TimepointId {
    TimepointId::new(s).unwrap()
}

pub fn clock(s: &str) -> i64 {
    parse_clock(s).unwrap()
}

/// Route 4 trips 121359 and 121360 on 2016-08-08, chained with a two
/// minute layover.
pub fn table_patterns() -> Vec<TripPattern> {
    let mut t1 = TripPattern::new(
        "4",
        "121359",
        Direction::Outbound,
        ["MCC4_14", "SY19", "PRGD", "GRFSTATO"].map(tp).to_vec(),
        ["10:50:00", "11:02:00", "11:09:00", "11:18:00"].map(clock).to_vec(),
    )
    .unwrap();
    t1.next_trip_id = Some("121360".into());
    t1.scheduled_layover = Some(120);
    let t2 = TripPattern::new(
        "4",
        "121360",
        Direction::Inbound,
        ["GRFSTATO", "PRGD", "SY19", "MCC4_14"].map(tp).to_vec(),
        ["11:20:00", "11:25:00", "11:40:00", "11:57:00"].map(clock).to_vec(),
    )
    .unwrap();
    vec![t1, t2]
}

pub fn table_records() -> Vec<TimepointRecord> {
    let date = NaiveDate::from_ymd_opt(2016, 8, 8).unwrap();
    let rows = [
        ("121359", Direction::Outbound, "MCC4_14", "10:50:00", "10:36:00", "10:50:00"),
        ("121359", Direction::Outbound, "SY19", "11:02:00", "11:10:00", "11:10:00"),
        ("121359", Direction::Outbound, "PRGD", "11:09:00", "11:18:00", "11:18:00"),
        ("121359", Direction::Outbound, "GRFSTATO", "11:18:00", "11:27:00", "11:30:00"),
        ("121360", Direction::Inbound, "GRFSTATO", "11:20:00", "11:27:00", "11:30:00"),
        ("121360", Direction::Inbound, "PRGD", "11:25:00", "11:34:00", "11:34:00"),
        ("121360", Direction::Inbound, "SY19", "11:40:00", "11:51:00", "11:51:00"),
        ("121360", Direction::Inbound, "MCC4_14", "11:57:00", "12:11:00", "12:11:00"),
    ];
    rows.iter()
        .enumerate()
        .map(|(i, &(trip, direction, t, s, a, d))| TimepointRecord {
            service_date: date,
            route_id: "4".into(),
            trip_id: trip.into(),
            direction,
            timepoint: tp(t),
            sequence: (i % 4) as u32 + 1,
            scheduled_time: clock(s),
            actual_arrival: Some(clock(a)),
            actual_departure: Some(clock(d)),
            vehicle_id: Some("1907".into()),
        })
        .collect()
}

pub fn table_store() -> HistoricalStore {
    clean_with_patterns(table_records(), table_patterns()).0
}

/// Straightforward replay of one unchained trip from raw records, written
/// independently of the library simulator: the bus reaches the first stop
/// at its recorded offset from schedule, keeps its recorded travel times,
/// holds until scheduled when early, and otherwise dwells as recorded.
/// Returns (hits, scored arrivals).
pub fn brute_force_hits(
    records: &[TimepointRecord],
    trip: &str,
    published: &[i64],
    scheduled: &[i64],
    early: i64,
    late: i64,
) -> (u64, u64) {
    let mut days: BTreeMap<NaiveDate, Vec<&TimepointRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.trip_id == trip) {
        days.entry(r.service_date).or_default().push(r);
    }
    let (mut hits, mut total) = (0, 0);
    for (_, mut recs) in days {
        recs.sort_by_key(|r| r.sequence);
        if recs.len() != published.len() {
            continue;
        }
        let arr: Vec<i64> = recs.iter().map(|r| r.actual_arrival.unwrap()).collect();
        let dep: Vec<i64> = recs.iter().map(|r| r.actual_departure.unwrap()).collect();
        if (1..arr.len()).any(|j| arr[j] < dep[j - 1]) {
            continue;
        }
        let mut a = scheduled[0] + (arr[0] - published[0]);
        for j in 0..scheduled.len() {
            total += 1;
            if a - scheduled[j] >= early && a - scheduled[j] <= late {
                hits += 1;
            }
            let dwell = if arr[j] <= published[j] {
                0.max(dep[j] - published[j])
            } else {
                dep[j] - arr[j]
            };
            let d = if a + dwell > scheduled[j] { a + dwell } else { scheduled[j] };
            if j + 1 < scheduled.len() {
                a = d + (arr[j + 1] - dep[j]);
            }
        }
    }
    (hits, total)
}

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_busopt"))
}

pub struct CliRun {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn cli(args: &[&str]) -> CliRun {
    let out = Command::new(bin()).args(args).output().expect("run busopt");
    CliRun {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn strip_json(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(map) => {
            map.remove("wall_time");
            map.values_mut().for_each(strip_json);
        }
        serde_json::Value::Array(xs) => xs.iter_mut().for_each(strip_json),
        _ => {}
    }
}

fn strip_csv(text: &str) -> String {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().unwrap().clone();
    let keep: Vec<usize> = (0..header.len()).filter(|&i| &header[i] != "wall_time").collect();
    let mut out = String::new();
    let line = |rec: &csv::StringRecord| keep.iter().map(|&i| rec[i].to_string()).collect::<Vec<_>>().join(",");
    out += &line(&header);
    for rec in rdr.records() {
        out.push('\n');
        out += &line(&rec.unwrap());
    }
    out
}

/// Every file under `dir` by relative path, with wall-time fields removed.
pub fn snapshot(dir: &Path) -> BTreeMap<String, String> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
                continue;
            }
            let rel = path.strip_prefix(root).unwrap().display().to_string();
            let text = std::fs::read_to_string(&path).unwrap();
            let norm = match path.extension().and_then(|e| e.to_str()) {
                Some("json") => {
                    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
                    strip_json(&mut v);
                    v.to_string()
                }
                Some("csv") => strip_csv(&text),
                _ => text,
            };
            out.insert(rel, norm);
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}
