//! Full enumeration of the integer grid.

use rayon::prelude::*;

use super::objective::Objective;
use super::space::SearchSpace;
use super::SearchOutcome;
use crate::error::{Error, Result};

pub const DEFAULT_EXHAUSTIVE_LIMIT: u128 = 1_000_000;

const CHUNK: usize = 4096;

/// Every grid point in lexicographic order.
pub struct GridIter<'a> {
    space: &'a SearchSpace,
    next: Option<Vec<i64>>,
}

impl<'a> GridIter<'a> {
    pub fn new(space: &'a SearchSpace) -> Self {
        GridIter {
            space,
            next: Some(space.lo.clone()),
        }
    }
}

impl Iterator for GridIter<'_> {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        for d in (0..succ.len()).rev() {
            if succ[d] < self.space.hi[d] {
                succ[d] += 1;
                self.next = Some(succ);
                break;
            }
            succ[d] = self.space.lo[d];
        }
        Some(current)
    }
}

/// Global maximum over the grid; ties go to the lexicographically smallest
/// vector. Refuses spaces larger than `limit`.
pub fn exhaustive<O: Objective + ?Sized>(
    space: &SearchSpace,
    objective: &O,
    limit: u128,
) -> Result<SearchOutcome> {
    let size = space.size();
    if size > limit {
        return Err(Error::SearchRefused { size, limit });
    }
    let mut grid = GridIter::new(space);
    let mut best: Option<(Vec<i64>, f64)> = None;
    loop {
        let chunk: Vec<Vec<i64>> = grid.by_ref().take(CHUNK).collect();
        if chunk.is_empty() {
            break;
        }
        let values: Vec<f64> = chunk.par_iter().map(|v| objective.evaluate(v)).collect();
        for (v, f) in chunk.into_iter().zip(values) {
            if best.as_ref().is_none_or(|(_, b)| f > *b) {
                best = Some((v, f));
            }
        }
    }
    let (best, value) = best.expect("grid is non-empty");
    Ok(SearchOutcome {
        best,
        value,
        iterations: 1,
        evaluations: size as usize,
        history: vec![value],
    })
}
