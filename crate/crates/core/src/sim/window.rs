use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::Secs;

/// On-time window `[early, late]` relative to the scheduled time, inclusive
/// at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OnTimeWindow {
    pub early: Secs,
    pub late: Secs,
}

impl Default for OnTimeWindow {
    /// One minute early to five minutes late.
    fn default() -> Self {
        OnTimeWindow { early: -60, late: 300 }
    }
}

impl OnTimeWindow {
    pub fn new(early: Secs, late: Secs) -> Result<Self> {
        if early > 0 || late < 0 {
            return Err(Error::Argument(format!(
                "on-time window [{early}, {late}] must satisfy early <= 0 <= late"
            )));
        }
        Ok(OnTimeWindow { early, late })
    }

    /// Window that accepts every delay.
    pub fn unbounded() -> Self {
        OnTimeWindow {
            early: Secs::MIN,
            late: Secs::MAX,
        }
    }

    #[inline]
    pub fn contains(&self, delay: Secs) -> bool {
        self.early <= delay && delay <= self.late
    }
}
