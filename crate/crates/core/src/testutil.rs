//! Fixtures shared by unit tests.

use chrono::NaiveDate;

use crate::data::{clean_with_patterns, Direction, HistoricalStore, TimepointId, TimepointRecord, TripPattern};
use crate::time::parse_clock;

pub fn tp(s: &str) -> TimepointId {
    TimepointId::new(s).unwrap()
}

pub fn clock(s: &str) -> i64 {
    parse_clock(s).unwrap()
}

/// The two chained route-4 trips observed on 2016-08-08.
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
    let rows: [(&str, Direction, &str, u32, &str, &str, &str); 8] = [
        ("121359", Direction::Outbound, "MCC4_14", 1, "10:50:00", "10:36:00", "10:50:00"),
        ("121359", Direction::Outbound, "SY19", 2, "11:02:00", "11:10:00", "11:10:00"),
        ("121359", Direction::Outbound, "PRGD", 3, "11:09:00", "11:18:00", "11:18:00"),
        ("121359", Direction::Outbound, "GRFSTATO", 4, "11:18:00", "11:27:00", "11:30:00"),
        ("121360", Direction::Inbound, "GRFSTATO", 1, "11:20:00", "11:27:00", "11:30:00"),
        ("121360", Direction::Inbound, "PRGD", 2, "11:25:00", "11:34:00", "11:34:00"),
        ("121360", Direction::Inbound, "SY19", 3, "11:40:00", "11:51:00", "11:51:00"),
        ("121360", Direction::Inbound, "MCC4_14", 4, "11:57:00", "12:11:00", "12:11:00"),
    ];
    rows.iter()
        .map(|&(trip, direction, t, seq, s, a, d)| TimepointRecord {
            service_date: date,
            route_id: "4".into(),
            trip_id: trip.into(),
            direction,
            timepoint: tp(t),
            sequence: seq,
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
