//! Timetable optimization for bus trips against historical timepoint data.
//!
//! The pipeline ingests a static schedule and timepoint history
//! ([`data`]), groups months with similar travel-time patterns
//! ([`cluster`]), replays history under candidate timetables to estimate
//! on-time performance ([`sim`]), and searches the timetable space with
//! exhaustive, greedy, genetic and particle-swarm engines ([`opt`]).
//! [`synth`] generates desk-scale datasets and [`harness`] drives the
//! end-to-end runs behind the `busopt` CLI.

pub mod error;
pub mod time;

pub mod cluster;
pub mod data;
pub mod harness;
pub mod opt;
pub mod sim;
pub mod synth;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use time::{MonthKey, Secs};
