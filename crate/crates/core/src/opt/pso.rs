//! Particle swarm over the box, evaluated at rounded positions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::objective::{Memo, Objective};
use super::space::SearchSpace;
use super::{stream_rng, SearchOutcome};
use crate::error::{Error, Result};

/// Velocity factor applied when a particle hits a bound.
pub const BOUNCE: f64 = -0.5;

/// Default multiplier on `w`, `c1` and `c2` in the velocity update. It puts
/// the default inertia of 5 at 0.83, so the swarm contracts, while inertia
/// above 6 still diverges.
pub const DEFAULT_COEFFICIENT_SCALE: f64 = 1.0 / 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoConfig {
    pub swarm_size: usize,
    /// Inertia weight.
    pub w: f64,
    /// Pull towards the particle's own best.
    pub c1: f64,
    /// Pull towards the swarm's best.
    pub c2: f64,
    pub max_iter: usize,
    /// Multiplies all three coefficients; 1 applies them as given.
    pub coefficient_scale: f64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            swarm_size: 30,
            w: 5.0,
            c1: 5.0,
            c2: 5.0,
            max_iter: 30,
            coefficient_scale: DEFAULT_COEFFICIENT_SCALE,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 {
            return Err(Error::Argument("swarm_size must be at least 2".into()));
        }
        if !(self.coefficient_scale.is_finite() && self.coefficient_scale > 0.0) {
            return Err(Error::Argument("coefficient_scale must be positive".into()));
        }
        for (name, x) in [("w", self.w), ("c1", self.c1), ("c2", self.c2)] {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::Argument(format!("{name} must be finite and non-negative, got {x}")));
            }
        }
        Ok(())
    }
}

fn rounded(space: &SearchSpace, x: &[f64]) -> Vec<i64> {
    let mut v: Vec<i64> = x.iter().map(|p| p.round() as i64).collect();
    space.clamp(&mut v);
    v
}

/// Maximizes `objective` with a swarm started at rest, one particle on the
/// incumbent and the rest uniform in the box. The velocity update is the
/// usual inertia plus personal and global pulls, with all three coefficients
/// multiplied by `coefficient_scale`. Positions are clamped to the box, and a
/// particle leaving it has its velocity reversed and halved.
pub fn pso<O: Objective + ?Sized>(
    space: &SearchSpace,
    objective: &O,
    incumbent: &[i64],
    cfg: &PsoConfig,
    seed: u64,
) -> Result<SearchOutcome> {
    cfg.validate()?;
    let dims = space.dims();
    let lo: Vec<f64> = space.lo.iter().map(|&l| l as f64).collect();
    let hi: Vec<f64> = space.hi.iter().map(|&h| h as f64).collect();
    let mut memo = Memo::new(objective);
    let mut pos: Vec<Vec<f64>> = (0..cfg.swarm_size)
        .map(|i| {
            if i == 0 {
                let mut v = incumbent.to_vec();
                space.clamp(&mut v);
                return v.into_iter().map(|x| x as f64).collect();
            }
            let mut rng = stream_rng(seed, 0, i);
            (0..dims).map(|d| lo[d] + rng.random::<f64>() * (hi[d] - lo[d])).collect()
        })
        .collect();
    let mut vel = vec![vec![0.0; dims]; cfg.swarm_size];
    let mut pbest: Vec<Vec<i64>> = pos.iter().map(|x| rounded(space, x)).collect();
    let mut pbest_value = memo.batch(&pbest);
    let mut g = 0;
    for i in 1..cfg.swarm_size {
        if pbest_value[i] > pbest_value[g] {
            g = i;
        }
    }
    let mut gbest = pbest[g].clone();
    let mut gbest_value = pbest_value[g];
    let mut history = vec![gbest_value];
    let (w, c1, c2) = (
        cfg.w * cfg.coefficient_scale,
        cfg.c1 * cfg.coefficient_scale,
        cfg.c2 * cfg.coefficient_scale,
    );
    for t in 1..=cfg.max_iter {
        let gb: Vec<f64> = gbest.iter().map(|&x| x as f64).collect();
        for i in 0..cfg.swarm_size {
            let mut rng = stream_rng(seed, t as u64, i);
            for d in 0..dims {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let x = pos[i][d];
                let v = w * vel[i][d] + c1 * r1 * (pbest[i][d] as f64 - x) + c2 * r2 * (gb[d] - x);
                let (mut nx, mut nv) = (x + v, v);
                if nx < lo[d] {
                    nx = lo[d];
                    nv *= BOUNCE;
                } else if nx > hi[d] {
                    nx = hi[d];
                    nv *= BOUNCE;
                }
                pos[i][d] = nx;
                vel[i][d] = nv;
            }
        }
        let cand: Vec<Vec<i64>> = pos.iter().map(|x| rounded(space, x)).collect();
        let values = memo.batch(&cand);
        for (i, (c, f)) in cand.into_iter().zip(values).enumerate() {
            if f > pbest_value[i] {
                pbest[i] = c;
                pbest_value[i] = f;
            }
            if pbest_value[i] > gbest_value {
                gbest = pbest[i].clone();
                gbest_value = pbest_value[i];
            }
        }
        history.push(gbest_value);
    }
    Ok(SearchOutcome {
        best: gbest,
        value: gbest_value,
        iterations: cfg.max_iter,
        evaluations: memo.evaluations(),
        history,
    })
}
