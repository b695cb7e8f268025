//! Real-coded genetic algorithm used to maximize acquisition functions.
//!
//! Tournament selection, bounded simulated-binary crossover, bounded
//! polynomial mutation and elitism. Fitness evaluations inside a generation
//! run in parallel; all random decisions are drawn sequentially so the
//! result depends only on the seed.

use rand::Rng;
use rayon::prelude::*;

use crate::doe::SearchBox;
use crate::error::{config_err, Result};
use crate::optimizers::Algorithm;
use crate::rng::RngState;
use crate::scalar::Scalar;

/// Population size and number of generations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GaBudget {
    pub population: usize,
    pub generations: usize,
}

impl GaBudget {
    pub fn new(population: usize, generations: usize) -> Result<Self> {
        if population < 2 || generations < 1 {
            return Err(config_err!(
                "GA budget needs population >= 2 and generations >= 1, got ({population}, {generations})"
            ));
        }
        Ok(Self {
            population,
            generations,
        })
    }

    /// Upper bound on objective calls of one run.
    pub fn max_evaluations(&self) -> usize {
        self.population * (self.generations + 1)
    }
}

/// Per-algorithm inner-optimizer budget for `d` optimized coordinates.
///
/// Full-space BO uses 200 × 100 and the coordinate-line baseline 10 × 20.
/// The subspace methods use a population of `max(10, 4d)` and spend about
/// `200·d` evaluations, i.e. `round(200·d / population)` generations.
pub fn ga_budget(algorithm: Algorithm, d: usize) -> GaBudget {
    match algorithm {
        Algorithm::StandardBo => GaBudget {
            population: 200,
            generations: 100,
        },
        Algorithm::CoordinateLine => GaBudget {
            population: 10,
            generations: 20,
        },
        Algorithm::AdaDropout | Algorithm::Dropout => {
            let d = d.max(1);
            let population = (4 * d).max(10);
            let generations = ((200 * d) as f64 / population as f64).round().max(1.0) as usize;
            GaBudget {
                population,
                generations,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaConfig {
    pub budget: GaBudget,
    pub crossover_prob: f64,
    /// Per-gene mutation probability; `None` means `1/d`.
    pub mutation_prob: Option<f64>,
    pub crossover_eta: f64,
    pub mutation_eta: f64,
    pub tournament_size: usize,
    pub elitism: usize,
}

impl GaConfig {
    pub fn new(budget: GaBudget) -> Self {
        Self {
            budget,
            crossover_prob: 0.9,
            mutation_prob: None,
            crossover_eta: 15.0,
            mutation_eta: 20.0,
            tournament_size: 2,
            elitism: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        GaBudget::new(self.budget.population, self.budget.generations)?;
        let prob_ok = |p: f64| (0.0..=1.0).contains(&p);
        if !prob_ok(self.crossover_prob) || !self.mutation_prob.is_none_or(prob_ok) {
            return Err(config_err!("GA probabilities must lie in [0, 1]"));
        }
        if self.elitism >= self.budget.population {
            return Err(config_err!(
                "elitism {} must be smaller than the population {}",
                self.elitism,
                self.budget.population
            ));
        }
        if self.tournament_size == 0 {
            return Err(config_err!("tournament size must be positive"));
        }
        if !(self.crossover_eta >= 0.0 && self.mutation_eta >= 0.0) {
            return Err(config_err!("distribution indices must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaResult<T> {
    pub best: Vec<T>,
    pub value: T,
    pub evaluations: usize,
    /// Best fitness after the initial population and after every generation.
    pub best_per_generation: Vec<T>,
}

/// Maximizes `objective` over `bounds`.
///
/// `seeds` are injected into the initial population (clamped to the box)
/// ahead of the uniformly drawn individuals. Non-finite objective values
/// count as `-inf`.
pub fn maximize<T, F>(
    objective: F,
    bounds: &SearchBox<T>,
    config: &GaConfig,
    rng: RngState,
    seeds: &[Vec<T>],
) -> Result<GaResult<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> T + Sync,
{
    maximize_batched(|xs: &[Vec<T>]| xs.iter().map(|x| objective(x)).collect(), bounds, config, rng, seeds)
}

/// Individuals handed to one batched fitness call.
const BATCH: usize = 32;

/// [`maximize`] with a fitness function that scores a slice of individuals
/// at once and returns one value per individual, in order.
pub fn maximize_batched<T, F>(
    objective: F,
    bounds: &SearchBox<T>,
    config: &GaConfig,
    rng: RngState,
    seeds: &[Vec<T>],
) -> Result<GaResult<T>>
where
    T: Scalar,
    F: Fn(&[Vec<T>]) -> Vec<T> + Sync,
{
    config.validate()?;
    let dim = bounds.dim();
    let pop_size = config.budget.population;
    let mut g = rng.generator();
    let mutation_prob = config.mutation_prob.unwrap_or(1.0 / dim as f64);

    let evaluate = |xs: &[Vec<T>]| -> Vec<T> {
        let values: Vec<T> = xs.par_chunks(BATCH).flat_map_iter(|c| objective(c)).collect();
        assert_eq!(values.len(), xs.len(), "fitness must return one value per individual");
        values
            .into_iter()
            .map(|v| if v.is_finite() { v } else { T::neg_infinity() })
            .collect()
    };

    let mut population: Vec<Vec<T>> = seeds
        .iter()
        .filter(|s| s.len() == dim)
        .take(pop_size)
        .map(|s| {
            let mut s = s.clone();
            bounds.clamp(&mut s);
            s
        })
        .collect();
    while population.len() < pop_size {
        population.push(bounds.sample_uniform(&mut g));
    }
    let mut fitness = evaluate(&population);
    let mut evaluations = pop_size;

    let mut best_idx = argmax(&fitness);
    let mut best = population[best_idx].clone();
    let mut best_value = fitness[best_idx];
    let mut history = vec![best_value];

    for _ in 0..config.budget.generations {
        let mut order: Vec<usize> = (0..pop_size).collect();
        // stable: ties keep lower index first
        order.sort_by(|&a, &b| fitness[b].partial_cmp(&fitness[a]).unwrap_or(std::cmp::Ordering::Equal));
        let mut next: Vec<Vec<T>> = order[..config.elitism].iter().map(|&i| population[i].clone()).collect();
        let elite_fitness: Vec<T> = order[..config.elitism].iter().map(|&i| fitness[i]).collect();

        let mut offspring: Vec<Vec<T>> = Vec::with_capacity(pop_size - config.elitism);
        while offspring.len() < pop_size - config.elitism {
            let p1 = tournament(&fitness, config.tournament_size, &mut g);
            let p2 = tournament(&fitness, config.tournament_size, &mut g);
            let (mut c1, mut c2) = (population[p1].clone(), population[p2].clone());
            if g.random::<f64>() < config.crossover_prob {
                sbx(&mut c1, &mut c2, bounds, config.crossover_eta, &mut g);
            }
            for child in [&mut c1, &mut c2] {
                polynomial_mutation(child, bounds, config.mutation_eta, mutation_prob, &mut g);
                bounds.clamp(child);
            }
            offspring.push(c1);
            if offspring.len() < pop_size - config.elitism {
                offspring.push(c2);
            }
        }
        let offspring_fitness = evaluate(&offspring);
        evaluations += offspring.len();

        next.extend(offspring);
        population = next;
        fitness = elite_fitness;
        fitness.extend(offspring_fitness);

        best_idx = argmax(&fitness);
        if fitness[best_idx] > best_value {
            best_value = fitness[best_idx];
            best = population[best_idx].clone();
        }
        history.push(best_value);
    }

    Ok(GaResult {
        best,
        value: best_value,
        evaluations,
        best_per_generation: history,
    })
}

fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn tournament<T: Scalar, R: Rng>(fitness: &[T], size: usize, rng: &mut R) -> usize {
    let mut winner = rng.random_range(0..fitness.len());
    for _ in 1..size {
        let challenger = rng.random_range(0..fitness.len());
        if fitness[challenger] > fitness[winner] {
            winner = challenger;
        }
    }
    winner
}

/// `base^e`, by repeated multiplication when `e` is a small integer.
fn int_pow(base: f64, e: f64) -> f64 {
    if e.fract() == 0.0 && e.abs() <= 64.0 {
        base.powi(e as i32)
    } else {
        base.powf(e)
    }
}

/// Bounded simulated-binary crossover applied gene-wise with probability 1/2.
fn sbx<T: Scalar, R: Rng>(a: &mut [T], b: &mut [T], bounds: &SearchBox<T>, eta: f64, rng: &mut R) {
    for i in 0..a.len() {
        if rng.random::<f64>() > 0.5 {
            continue;
        }
        let (x1, x2) = (a[i].to_f64_lossy(), b[i].to_f64_lossy());
        if (x1 - x2).abs() <= 1e-14 {
            continue;
        }
        let (y1, y2) = if x1 < x2 { (x1, x2) } else { (x2, x1) };
        let lo = bounds.lower()[i].to_f64_lossy();
        let hi = bounds.upper()[i].to_f64_lossy();
        let u: f64 = rng.random();
        let spread = |beta: f64| -> f64 {
            let alpha = 2.0 - int_pow(beta, -(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
            }
        };
        let beta_lo = 1.0 + 2.0 * (y1 - lo) / (y2 - y1);
        let beta_hi = 1.0 + 2.0 * (hi - y2) / (y2 - y1);
        let c1 = (0.5 * ((y1 + y2) - spread(beta_lo) * (y2 - y1))).clamp(lo, hi);
        let c2 = (0.5 * ((y1 + y2) + spread(beta_hi) * (y2 - y1))).clamp(lo, hi);
        let (c1, c2) = if rng.random::<f64>() < 0.5 { (c2, c1) } else { (c1, c2) };
        a[i] = T::lit(c1);
        b[i] = T::lit(c2);
    }
}

/// Bounded polynomial mutation.
fn polynomial_mutation<T: Scalar, R: Rng>(x: &mut [T], bounds: &SearchBox<T>, eta: f64, prob: f64, rng: &mut R) {
    for i in 0..x.len() {
        if rng.random::<f64>() >= prob {
            continue;
        }
        let lo = bounds.lower()[i].to_f64_lossy();
        let hi = bounds.upper()[i].to_f64_lossy();
        let y = x[i].to_f64_lossy();
        let width = hi - lo;
        let d1 = (y - lo) / width;
        let d2 = (hi - y) / width;
        let u: f64 = rng.random();
        let power = 1.0 / (eta + 1.0);
        let dq = if u < 0.5 {
            let v = 2.0 * u + (1.0 - 2.0 * u) * int_pow(1.0 - d1, eta + 1.0);
            v.powf(power) - 1.0
        } else {
            let v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * int_pow(1.0 - d2, eta + 1.0);
            1.0 - v.powf(power)
        };
        x[i] = T::lit((y + dq * width).clamp(lo, hi));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::AcquisitionContext;
    use crate::doe::{lhs_sample, SubspaceSelection};
    use crate::gp::{fit, Archive, LengthScaleBounds};
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn budget_table() {
        assert_eq!(ga_budget(Algorithm::StandardBo, 1), GaBudget::new(200, 100).unwrap());
        assert_eq!(ga_budget(Algorithm::StandardBo, 77), GaBudget::new(200, 100).unwrap());
        assert_eq!(ga_budget(Algorithm::AdaDropout, 100), GaBudget::new(400, 50).unwrap());
        assert_eq!(ga_budget(Algorithm::AdaDropout, 1), GaBudget::new(10, 20).unwrap());
        assert_eq!(ga_budget(Algorithm::CoordinateLine, 1), GaBudget::new(10, 20).unwrap());
        assert_eq!(ga_budget(Algorithm::Dropout, 5), GaBudget::new(20, 50).unwrap());
        // 200·3/12 = 50, 200·7/28 = 50; below the floor the count grows
        assert_eq!(ga_budget(Algorithm::AdaDropout, 2).generations, 40);
        assert_eq!(ga_budget(Algorithm::AdaDropout, 3).population, 12);
    }

    #[test]
    fn constant_objective() {
        let b = SearchBox::uniform(3, -1.0, 1.0).unwrap();
        let r = maximize(|_x: &[f64]| 2.5, &b, &GaConfig::new(GaBudget::new(8, 5).unwrap()), RngState::new(1, 0), &[]).unwrap();
        assert_eq!(r.value, 2.5);
        assert!(b.contains(&r.best));
    }

    #[test]
    fn concave_quadratic_located() {
        let b = SearchBox::uniform(1, 0.0, 1.0).unwrap();
        let cfg = GaConfig::new(GaBudget::new(40, 50).unwrap());
        let hits = (0..100)
            .filter(|&s| {
                let r = maximize(|x: &[f64]| -(x[0] - 0.3).powi(2), &b, &cfg, RngState::new(s, 0), &[]).unwrap();
                (r.best[0] - 0.3).abs() <= 0.05
            })
            .count();
        assert!(hits >= 95, "{hits}/100");
    }

    #[test]
    fn beats_random_search_on_ei_surface() {
        let b = SearchBox::uniform(2, 0.0, 1.0).unwrap();
        let x = lhs_sample(5, &b, &mut RngState::new(99, 0).generator()).unwrap();
        let y: Vec<f64> = x.iter().map(|r| (6.0f64 * r[0]).sin() + (4.0f64 * r[1]).cos()).collect();
        let a = Archive::new(x, y).unwrap();
        let m = fit(&a, &b, LengthScaleBounds::default()).unwrap();
        let (inc, fmin) = a.best();
        let ctx = AcquisitionContext::new(&m, fmin, inc.to_vec(), SubspaceSelection::full(2)).unwrap();
        let ei = |v: &[f64]| ctx.essi(v).unwrap();
        let cfg = GaConfig::new(ga_budget(Algorithm::StandardBo, 2));
        let wins = (0..100)
            .filter(|&s| {
                let r = maximize(ei, &b, &cfg, RngState::new(s, 1), &[]).unwrap();
                let mut g = RngState::new(s, 2).generator();
                let probe = (0..10_000).map(|_| ei(&b.sample_uniform(&mut g))).fold(0.0, f64::max);
                r.value >= probe
            })
            .count();
        assert!(wins >= 90, "{wins}/100");
    }

    #[test]
    fn deterministic_bounded_and_monotone() {
        let b = SearchBox::new(vec![-5.0, 0.0, 10.0], vec![5.0, 1.0, 11.0]).unwrap();
        let f = |x: &[f64]| -(x[0] - 1.0).powi(2) - (x[1] - 0.9).powi(2) + (x[2] * 3.0).sin();
        let cfg = GaConfig::new(GaBudget::new(16, 30).unwrap());
        let inside = |x: &[f64]| {
            assert!(b.contains(x), "{x:?} escaped the box");
            f(x)
        };
        let r1 = maximize(inside, &b, &cfg, RngState::new(9, 9), &[]).unwrap();
        let r2 = maximize(inside, &b, &cfg, RngState::new(9, 9), &[]).unwrap();
        assert_eq!(r1, r2);
        assert!(r1.best_per_generation.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(r1.best_per_generation.len(), 31);
    }

    #[test]
    fn evaluation_count_within_budget() {
        let calls = AtomicUsize::new(0);
        let b = SearchBox::uniform(2, 0.0, 1.0).unwrap();
        let cfg = GaConfig::new(GaBudget::new(11, 7).unwrap());
        let r = maximize(
            |x: &[f64]| {
                calls.fetch_add(1, Ordering::Relaxed);
                x[0]
            },
            &b,
            &cfg,
            RngState::new(0, 0),
            &[],
        )
        .unwrap();
        assert_eq!(calls.load(Ordering::Relaxed), r.evaluations);
        assert!(r.evaluations <= cfg.budget.max_evaluations());
    }

    #[test]
    fn non_finite_values_and_seeds() {
        let b = SearchBox::uniform(1, 0.0, 1.0).unwrap();
        let cfg = GaConfig::new(GaBudget::new(6, 3).unwrap());
        let r = maximize(
            |x: &[f64]| if x[0] > 0.5 { f64::NAN } else { x[0] },
            &b,
            &cfg,
            RngState::new(4, 0),
            &[vec![0.5]],
        )
        .unwrap();
        assert!(r.value.is_finite() && r.value >= 0.5 - 1e-12);
        let bad = GaConfig {
            elitism: 6,
            ..cfg
        };
        assert!(maximize(|x: &[f64]| x[0], &b, &bad, RngState::new(0, 0), &[]).is_err());
    }
}
