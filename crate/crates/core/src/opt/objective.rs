//! Objective functions over decision vectors, with memoized batch
//! evaluation.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use super::space::SearchSpace;
use crate::sim::Evaluator;

/// A function to maximize over integer decision vectors.
pub trait Objective: Sync {
    fn evaluate(&self, v: &[i64]) -> f64;
}

impl<F: Fn(&[i64]) -> f64 + Sync> Objective for F {
    fn evaluate(&self, v: &[i64]) -> f64 {
        self(v)
    }
}

/// Simulated on-time performance of the candidate a vector decodes to.
pub struct TripObjective<'a> {
    pub space: &'a SearchSpace,
    pub evaluator: &'a Evaluator,
}

impl Objective for TripObjective<'_> {
    fn evaluate(&self, v: &[i64]) -> f64 {
        self.evaluator.otp(&self.space.decode(v))
    }
}

/// Caches objective values by vector. Misses in a batch are evaluated in
/// parallel; the evaluation count only depends on the sequence of batches.
pub struct Memo<'a, O: ?Sized> {
    objective: &'a O,
    cache: HashMap<Vec<i64>, f64>,
    evaluations: usize,
}

impl<'a, O: Objective + ?Sized> Memo<'a, O> {
    pub fn new(objective: &'a O) -> Self {
        Memo {
            objective,
            cache: HashMap::new(),
            evaluations: 0,
        }
    }

    pub fn batch(&mut self, vs: &[Vec<i64>]) -> Vec<f64> {
        let mut seen = HashSet::new();
        let misses: Vec<&Vec<i64>> = vs
            .iter()
            .filter(|v| !self.cache.contains_key(*v) && seen.insert(*v))
            .collect();
        let values: Vec<f64> = misses.par_iter().map(|v| self.objective.evaluate(v)).collect();
        self.evaluations += misses.len();
        for (v, f) in misses.into_iter().zip(values) {
            self.cache.insert(v.clone(), f);
        }
        vs.iter().map(|v| self.cache[v]).collect()
    }

    pub fn get(&mut self, v: &[i64]) -> f64 {
        self.batch(&[v.to_vec()])[0]
    }

    /// Distinct vectors evaluated so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }
}
