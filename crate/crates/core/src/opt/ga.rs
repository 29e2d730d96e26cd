//! Genetic algorithm over integer-minute chromosomes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::objective::{Memo, Objective};
use super::space::SearchSpace;
use super::{argmax, stream_rng, SearchOutcome};
use crate::error::{Error, Result};

/// Generations without improvement before stopping early.
pub const STAGNATION_LIMIT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub pop_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub max_generations: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            pop_size: 90,
            crossover_rate: 0.5,
            mutation_rate: 0.1,
            max_generations: 50,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 2 {
            return Err(Error::Argument("pop_size must be at least 2".into()));
        }
        for (name, r) in [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Argument(format!("{name} must be in [0, 1], got {r}")));
            }
        }
        Ok(())
    }
}

fn tournament<'p>(pop: &'p [Vec<i64>], fit: &[f64], rng: &mut impl Rng) -> &'p [i64] {
    let a = rng.random_range(0..pop.len());
    let b = rng.random_range(0..pop.len());
    let pick = if fit[b] > fit[a] || (fit[b] == fit[a] && b < a) { b } else { a };
    &pop[pick]
}

/// Maximizes `objective` from a population of the incumbent plus uniform
/// random vectors. Size-2 tournaments pick parents, single-point crossover
/// and per-gene ±1 mutation make children, and the best individual survives
/// each generation unchanged.
pub fn ga<O: Objective + ?Sized>(
    space: &SearchSpace,
    objective: &O,
    incumbent: &[i64],
    cfg: &GaConfig,
    seed: u64,
) -> Result<SearchOutcome> {
    cfg.validate()?;
    let dims = space.dims();
    let mut memo = Memo::new(objective);
    let mut pop: Vec<Vec<i64>> = (0..cfg.pop_size)
        .map(|i| {
            if i == 0 {
                let mut v = incumbent.to_vec();
                space.clamp(&mut v);
                return v;
            }
            let mut rng = stream_rng(seed, 0, i);
            (0..dims).map(|d| rng.random_range(space.lo[d]..=space.hi[d])).collect()
        })
        .collect();
    let mut fit = memo.batch(&pop);
    let first = argmax(&fit);
    let mut best = pop[first].clone();
    let mut best_value = fit[first];
    let mut history = vec![best_value];
    let mut stagnant = 0;
    let mut generations = 0;
    for g in 1..=cfg.max_generations {
        if stagnant >= STAGNATION_LIMIT {
            break;
        }
        let elite = pop[argmax(&fit)].clone();
        let mut next = Vec::with_capacity(cfg.pop_size);
        next.push(elite);
        for i in 1..cfg.pop_size {
            let mut rng = stream_rng(seed, g as u64, i);
            let p1 = tournament(&pop, &fit, &mut rng);
            let p2 = tournament(&pop, &fit, &mut rng);
            let mut child = p1.to_vec();
            if dims > 1 && rng.random::<f64>() < cfg.crossover_rate {
                let cut = rng.random_range(1..dims);
                child[cut..].copy_from_slice(&p2[cut..]);
            }
            for d in 0..dims {
                if rng.random::<f64>() < cfg.mutation_rate {
                    let step = if rng.random::<bool>() { 1 } else { -1 };
                    child[d] = (child[d] + step).clamp(space.lo[d], space.hi[d]);
                }
            }
            next.push(child);
        }
        pop = next;
        fit = memo.batch(&pop);
        generations = g;
        let top = argmax(&fit);
        if fit[top] > best_value {
            best = pop[top].clone();
            best_value = fit[top];
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        history.push(best_value);
    }
    Ok(SearchOutcome {
        best,
        value: best_value,
        iterations: generations,
        evaluations: memo.evaluations(),
        history,
    })
}
