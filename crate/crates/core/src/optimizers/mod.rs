//! Outer optimization loops.
//!
//! All four algorithms share the same skeleton: a Latin hypercube initial
//! design, then one objective evaluation per iteration chosen by maximizing
//! expected improvement on a slice through the incumbent. They differ only
//! in which coordinates the slice frees:
//!
//! * [`Algorithm::StandardBo`] frees every coordinate.
//! * [`Algorithm::AdaDropout`] frees a fresh random set of `d` coordinates and
//!   decrements `d` (down to one) whenever a candidate is worse than the
//!   incumbent.
//! * [`Algorithm::Dropout`] frees a fresh random set of a fixed size.
//! * [`Algorithm::CoordinateLine`] frees one coordinate, walking a random
//!   permutation that is reshuffled once exhausted.
//!
//! The surrogate is always fitted on the full-dimensional archive.

mod trace;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::acquisition::AcquisitionContext;
use crate::doe::{lhs_sample, select_subspace, shuffle, SearchBox, SubspaceSelection};
use crate::error::{config_err, Error, Result};
use crate::ga::{self, ga_budget, GaBudget, GaConfig};
use crate::gp::{self, Archive, LengthScaleBounds};
use crate::objectives::Objective;
use crate::rng::{Generator, RngState};
use crate::scalar::Scalar;

pub use trace::{IterationRecord, RunError, RunTrace};

const STREAM_INIT: u64 = 0;
const STREAM_SELECT: u64 = 1;
const STREAM_GA: u64 = 2;
const STREAM_DUPLICATE: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    StandardBo,
    AdaDropout,
    CoordinateLine,
    Dropout,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::StandardBo,
        Algorithm::AdaDropout,
        Algorithm::CoordinateLine,
        Algorithm::Dropout,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Algorithm::StandardBo => "standard-bo",
            Algorithm::AdaDropout => "adadropout",
            Algorithm::CoordinateLine => "coordinate-line",
            Algorithm::Dropout => "dropout",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.tag() == s)
            .ok_or_else(|| config_err!("unknown algorithm '{s}' (expected one of standard-bo, adadropout, coordinate-line, dropout)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig<T> {
    pub algorithm: Algorithm,
    pub n_init: usize,
    pub n_max: usize,
    pub bounds: SearchBox<T>,
    /// Starting subspace size for AdaDropout; `None` means the full dimension.
    pub d_init: Option<usize>,
    /// Subspace size of the Dropout baseline.
    pub fixed_d: usize,
    pub length_scale: LengthScaleBounds<T>,
    /// Candidates closer than this (unit-cube distance) to an archived point
    /// are replaced by a uniform random point.
    pub duplicate_tol: f64,
    /// Replaces the per-algorithm inner-optimizer budget when set.
    pub ga_budget: Option<GaBudget>,
}

impl<T: Scalar> OptimizerConfig<T> {
    pub fn new(algorithm: Algorithm, n_init: usize, n_max: usize, bounds: SearchBox<T>) -> Self {
        Self {
            algorithm,
            n_init,
            n_max,
            bounds,
            d_init: None,
            fixed_d: 5,
            length_scale: LengthScaleBounds::default(),
            duplicate_tol: 1e-8,
            ga_budget: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if self.n_init == 0 || self.n_init > self.n_max {
            return Err(config_err!(
                "need 1 <= n_init <= n_max, got n_init {} and n_max {}",
                self.n_init,
                self.n_max
            ));
        }
        if self.n_init < 2 && self.n_max > self.n_init {
            return Err(config_err!("the surrogate needs at least two initial points"));
        }
        let d_init = self.d_init.unwrap_or(dim);
        if d_init == 0 || d_init > dim {
            return Err(config_err!("d_init {d_init} outside [1, {dim}]"));
        }
        if self.algorithm == Algorithm::Dropout && (self.fixed_d == 0 || self.fixed_d > dim) {
            return Err(config_err!("dropout subspace size {} outside [1, {dim}]", self.fixed_d));
        }
        if !(self.duplicate_tol >= 0.0) {
            return Err(config_err!("duplicate tolerance must be non-negative"));
        }
        if let Some(b) = self.ga_budget {
            GaBudget::new(b.population, b.generations)?;
        }
        Ok(())
    }
}

/// Best row of the archive, ties to the lowest index.
pub fn update_incumbent<T: Scalar>(archive: &Archive<T>) -> (Vec<T>, T) {
    let (x, f) = archive.best();
    (x.to_vec(), f)
}

/// Drops one optimized coordinate when the candidate is strictly worse than
/// the incumbent, never below one.
pub fn update_dimension<T: Scalar>(d: usize, f_next: T, f_min: T) -> usize {
    if f_next > f_min && d > 1 {
        d - 1
    } else {
        d
    }
}

/// Chooses the freed coordinates each iteration.
enum Selector {
    Full(usize),
    Adaptive { d: usize, dim: usize },
    Fixed { d: usize, dim: usize },
    Permutation { order: Vec<usize>, next: usize },
}

impl Selector {
    fn new<T: Scalar>(cfg: &OptimizerConfig<T>, rng: &mut Generator) -> Self {
        let dim = cfg.dim();
        match cfg.algorithm {
            Algorithm::StandardBo => Selector::Full(dim),
            Algorithm::AdaDropout => Selector::Adaptive {
                d: cfg.d_init.unwrap_or(dim),
                dim,
            },
            Algorithm::Dropout => Selector::Fixed { d: cfg.fixed_d, dim },
            Algorithm::CoordinateLine => {
                let mut order: Vec<usize> = (0..dim).collect();
                shuffle(&mut order, rng);
                Selector::Permutation { order, next: 0 }
            }
        }
    }

    fn next(&mut self, rng: &mut Generator) -> Result<SubspaceSelection> {
        match self {
            Selector::Full(dim) => Ok(SubspaceSelection::full(*dim)),
            Selector::Adaptive { d, dim } | Selector::Fixed { d, dim } => select_subspace(*d, *dim, rng),
            Selector::Permutation { order, next } => {
                if *next == order.len() {
                    shuffle(order, rng);
                    *next = 0;
                }
                let i = order[*next];
                *next += 1;
                Ok(SubspaceSelection::single(i))
            }
        }
    }

    fn observe<T: Scalar>(&mut self, f_next: T, f_min: T) {
        if let Selector::Adaptive { d, .. } = self {
            *d = update_dimension(*d, f_next, f_min);
        }
    }
}

/// Runs the loop selected by `config.algorithm`.
pub fn run<T: Scalar>(
    objective: &mut dyn Objective<T>,
    config: &OptimizerConfig<T>,
    rng: RngState,
) -> Result<RunTrace<T>, RunError<T>> {
    let mut trace = RunTrace::new(config.algorithm, rng);
    match drive(objective, config, rng, &mut trace) {
        Ok(()) => Ok(trace),
        Err(source) => Err(RunError {
            partial: Box::new(trace),
            source,
        }),
    }
}

fn with_algorithm<T: Scalar>(config: &OptimizerConfig<T>, algorithm: Algorithm) -> OptimizerConfig<T> {
    OptimizerConfig {
        algorithm,
        ..config.clone()
    }
}

/// Full-space EI maximization.
pub fn run_standard_bo<T: Scalar>(
    objective: &mut dyn Objective<T>,
    config: &OptimizerConfig<T>,
    rng: RngState,
) -> Result<RunTrace<T>, RunError<T>> {
    run(objective, &with_algorithm(config, Algorithm::StandardBo), rng)
}

/// Random subspaces whose size shrinks after every non-improving candidate.
pub fn run_adadropout<T: Scalar>(
    objective: &mut dyn Objective<T>,
    config: &OptimizerConfig<T>,
    rng: RngState,
) -> Result<RunTrace<T>, RunError<T>> {
    run(objective, &with_algorithm(config, Algorithm::AdaDropout), rng)
}

pub fn run_dropout_baseline<T: Scalar>(
    objective: &mut dyn Objective<T>,
    config: &OptimizerConfig<T>,
    rng: RngState,
) -> Result<RunTrace<T>, RunError<T>> {
    run(objective, &with_algorithm(config, Algorithm::Dropout), rng)
}

pub fn run_coordinate_line_bo<T: Scalar>(
    objective: &mut dyn Objective<T>,
    config: &OptimizerConfig<T>,
    rng: RngState,
) -> Result<RunTrace<T>, RunError<T>> {
    run(objective, &with_algorithm(config, Algorithm::CoordinateLine), rng)
}

/// The initial design shared by every algorithm run with the same `rng`.
pub fn initial_design<T: Scalar>(n_init: usize, bounds: &SearchBox<T>, rng: RngState) -> Result<Vec<Vec<T>>> {
    lhs_sample(n_init, bounds, &mut rng.substream(STREAM_INIT).generator())
}

fn evaluate<T: Scalar>(objective: &mut dyn Objective<T>, x: &[T]) -> Result<T> {
    let y = objective.evaluate(x)?;
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::Evaluation(format!("objective returned non-finite value {y}")))
    }
}

fn drive<T: Scalar>(
    objective: &mut dyn Objective<T>,
    config: &OptimizerConfig<T>,
    rng: RngState,
    trace: &mut RunTrace<T>,
) -> Result<()> {
    config.validate()?;
    let dim = config.dim();
    if objective.dim() != dim {
        return Err(config_err!("objective has dimension {} but the box has {dim}", objective.dim()));
    }
    let bounds = &config.bounds;

    let design = initial_design(config.n_init, bounds, rng)?;
    for x in design {
        let y = evaluate(objective, &x)?;
        trace.push_initial(x, y);
    }
    let mut archive = Archive::new(trace.initial_design.clone(), trace.initial_values.clone())?;
    let (mut incumbent, mut f_min) = update_incumbent(&archive);
    trace.set_best(&incumbent, f_min);

    let mut select_rng = rng.substream(STREAM_SELECT).generator();
    let mut dup_rng = rng.substream(STREAM_DUPLICATE).generator();
    let ga_root = rng.substream(STREAM_GA);
    let mut selector = Selector::new(config, &mut select_rng);

    let mut iteration = 0u64;
    while archive.len() < config.n_max {
        let started = Instant::now();
        let selection = selector.next(&mut select_rng)?;
        let model = gp::fit(&archive, bounds, config.length_scale)?;
        let ctx = AcquisitionContext::new(&model, f_min, incumbent.clone(), selection.clone())?;
        let sub_box = bounds.project(&selection)?;
        let budget = config
            .ga_budget
            .unwrap_or_else(|| ga_budget(config.algorithm, selection.len()));
        let anchor: Vec<T> = selection.iter().map(|&i| incumbent[i]).collect();
        let best = ga::maximize_batched(
            |xs: &[Vec<T>]| ctx.essi_batch(xs).unwrap_or_else(|_| vec![T::neg_infinity(); xs.len()]),
            &sub_box,
            &GaConfig::new(budget),
            ga_root.substream(iteration),
            &[anchor],
        )?;
        let mut x_next = ctx.compose(&best.best)?;
        bounds.clamp(&mut x_next);
        if is_duplicate(&archive, bounds, &x_next, config.duplicate_tol) {
            x_next = bounds.sample_uniform(&mut dup_rng);
        }

        let f_next = evaluate(objective, &x_next)?;
        archive.push(x_next.clone(), f_next)?;
        selector.observe(f_next, f_min);
        let d_used = selection.len();
        (incumbent, f_min) = update_incumbent(&archive);

        trace.records.push(IterationRecord {
            n_evals: archive.len(),
            f_min,
            incumbent: incumbent.clone(),
            d: d_used,
            selected: selection.indices().to_vec(),
            x_next,
            f_next,
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        });
        trace.set_best(&incumbent, f_min);
        iteration += 1;
    }
    Ok(())
}

fn is_duplicate<T: Scalar>(archive: &Archive<T>, bounds: &SearchBox<T>, x: &[T], tol: f64) -> bool {
    let u = bounds.to_unit(x);
    let tol2 = tol * tol;
    archive.rows().iter().any(|row| {
        let r = bounds.to_unit(row);
        crate::scalar::squared_distance(&u, &r).to_f64_lossy() <= tol2
    })
}

#[cfg(test)]
mod tests;
