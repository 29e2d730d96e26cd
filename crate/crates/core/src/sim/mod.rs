//! On-time performance estimation by replaying historical trip-days.

pub mod candidate;
pub mod ecdf;
pub mod replay;
pub mod window;

pub use candidate::{read_candidates, write_candidates, CandidateTimetable};
pub use ecdf::{empirical_cdf_window, EmpiricalCdf};
pub use replay::{
    dwell_time, on_time_performance, on_time_performance_with, record_dwell, replay_day, DayTrace,
    Evaluator, FirstStopDelay, OtpReport, ReplayTable, ReplayedDay, SimOptions, SkipReason, Tally,
    TimepointOtp, Upstream,
};
pub use window::OnTimeWindow;
