//! Timetable search engines sharing one decision-vector interface.

pub mod exhaustive;
pub mod ga;
pub mod greedy;
pub mod objective;
pub mod pso;
pub mod run;
pub mod space;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use exhaustive::{exhaustive, GridIter, DEFAULT_EXHAUSTIVE_LIMIT};
pub use ga::{ga, GaConfig};
pub use greedy::{greedy, greedy_segment};
pub use objective::{Memo, Objective, TripObjective};
pub use pso::{pso, PsoConfig};
pub use run::{
    optimize_cluster, optimize_trip, ClusterOutcome, ClusterRun, OptimizationResult, OptimizeSettings,
};
pub use space::SearchSpace;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Greedy,
    Ga,
    Pso,
    Exhaustive,
}

impl Engine {
    pub const ALL: [Engine; 4] = [Engine::Greedy, Engine::Ga, Engine::Pso, Engine::Exhaustive];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Greedy => "greedy",
            Engine::Ga => "ga",
            Engine::Pso => "pso",
            Engine::Exhaustive => "exhaustive",
        }
    }
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Engine {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        Engine::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| crate::Error::Argument(format!("unknown engine `{s}`")))
    }
}

/// Raw engine output in decision-vector form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best: Vec<i64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Best-so-far objective after initialization and each iteration. For
    /// greedy, the hit fraction chosen on each segment.
    pub history: Vec<f64>,
}

/// Independent random stream for one individual at one step, so results do
/// not depend on evaluation order or thread count.
pub(crate) fn stream_rng(seed: u64, step: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((step << 32) | index as u64);
    rng
}

/// Index of the first maximum.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
