use std::fmt;

use crate::error::Error;
use crate::rng::RngState;
use crate::scalar::Scalar;

use super::Algorithm;

/// One loop iteration after the initial design.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord<T> {
    /// Evaluations spent so far, including this one.
    pub n_evals: usize,
    /// Best value after this evaluation.
    pub f_min: T,
    pub incumbent: Vec<T>,
    /// Number of coordinates optimized in this iteration.
    pub d: usize,
    pub selected: Vec<usize>,
    pub x_next: Vec<T>,
    pub f_next: T,
    pub elapsed_ms: f64,
}

/// Complete log of one optimizer run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace<T> {
    pub algorithm: Algorithm,
    pub seed: RngState,
    pub initial_design: Vec<Vec<T>>,
    pub initial_values: Vec<T>,
    pub records: Vec<IterationRecord<T>>,
    pub best_x: Vec<T>,
    pub f_min: T,
}

impl<T: Scalar> RunTrace<T> {
    pub(crate) fn new(algorithm: Algorithm, seed: RngState) -> Self {
        Self {
            algorithm,
            seed,
            initial_design: Vec::new(),
            initial_values: Vec::new(),
            records: Vec::new(),
            best_x: Vec::new(),
            f_min: T::infinity(),
        }
    }

    pub(crate) fn push_initial(&mut self, x: Vec<T>, y: T) {
        if y < self.f_min {
            self.f_min = y;
            self.best_x = x.clone();
        }
        self.initial_design.push(x);
        self.initial_values.push(y);
    }

    pub(crate) fn set_best(&mut self, x: &[T], f: T) {
        self.best_x = x.to_vec();
        self.f_min = f;
    }

    pub fn evaluations(&self) -> usize {
        self.initial_values.len() + self.records.len()
    }

    /// Best value after each evaluation, initial design included.
    pub fn fmin_curve(&self) -> Vec<T> {
        let mut curve = Vec::with_capacity(self.evaluations());
        let mut best = T::infinity();
        for &y in &self.initial_values {
            best = best.min(y);
            curve.push(best);
        }
        curve.extend(self.records.iter().map(|r| r.f_min));
        curve
    }

    /// Subspace size used at each iteration.
    pub fn d_sequence(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.d).collect()
    }
}

/// A run aborted part-way; `partial` holds everything recorded before the
/// failure.
#[derive(Debug)]
pub struct RunError<T> {
    pub partial: Box<RunTrace<T>>,
    pub source: Error,
}

impl<T> fmt::Display for RunError<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "run aborted: {}", self.source)
    }
}

impl<T: fmt::Debug> std::error::Error for RunError<T> {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}
