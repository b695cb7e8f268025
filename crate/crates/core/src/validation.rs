//! Self-check battery comparing the production routines against
//! independent slow references: an explicit Gauss-Jordan inverse for the
//! kriging equations, Monte-Carlo integration for expected improvement and
//! full sign-pattern enumeration for the Wilcoxon test.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;

use crate::acquisition::expected_improvement;
use crate::doe::{lhs_sample, SearchBox};
use crate::ga::{ga_budget, GaBudget};
use crate::gp::{fit, Archive, GpModel, LengthScaleBounds};
use crate::objectives::sphere;
use crate::optimizers::{update_dimension, Algorithm};
use crate::rng::RngState;
use crate::stats::{average_ranks, wilcoxon_signed_rank, TestMethod};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Runs every check with the given seed.
pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    vec![
        gp_inverse_oracle(seed, 50),
        gp_interpolation(seed),
        ei_monte_carlo(seed, 20, 1_000_000),
        wilcoxon_enumeration(seed, 100),
        budget_table(),
        dimension_rule(),
    ]
}

fn gauss_jordan_inverse(mut a: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c] == 0.0 {
            return None;
        }
        a.swap(p, c);
        inv.swap(p, c);
        let piv = a[c][c];
        for k in 0..n {
            a[c][k] /= piv;
            inv[c][k] /= piv;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                if f != 0.0 {
                    for k in 0..n {
                        a[r][k] -= f * a[c][k];
                        inv[r][k] -= f * inv[c][k];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Largest 1-norm condition number at which the inverse oracle is trusted.
pub const ORACLE_CONDITION_LIMIT: f64 = 1e7;

/// Straight transcription of the kriging formulas with an explicit inverse.
pub struct InverseKriging {
    unit: Vec<Vec<f64>>,
    length_scale: f64,
    rinv: Vec<Vec<f64>>,
    resid: Vec<f64>,
    pub mu_hat: f64,
    pub sigma2_hat: f64,
    /// 1-norm condition number of the jittered correlation matrix.
    pub condition: f64,
    bounds: SearchBox<f64>,
}

fn one_norm(m: &[Vec<f64>]) -> f64 {
    (0..m.len()).map(|j| m.iter().map(|row| row[j].abs()).sum::<f64>()).fold(0.0, f64::max)
}

impl InverseKriging {
    /// Rebuilds the model of `archive` at `length_scale` with diagonal `jitter`.
    pub fn new(archive: &Archive<f64>, bounds: &SearchBox<f64>, length_scale: f64, jitter: f64) -> Option<Self> {
        let unit: Vec<Vec<f64>> = archive.rows().iter().map(|r| bounds.to_unit(r)).collect();
        let n = unit.len();
        let corr = |a: &[f64], b: &[f64]| {
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            (-d2 / (2.0 * length_scale * length_scale)).exp()
        };
        let r: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| corr(&unit[i], &unit[j]) + if i == j { jitter } else { 0.0 }).collect())
            .collect();
        let norm = one_norm(&r);
        let rinv = gauss_jordan_inverse(r)?;
        let condition = norm * one_norm(&rinv);
        let f = archive.values();
        let rinv_one: Vec<f64> = rinv.iter().map(|row| row.iter().sum()).collect();
        let one_rinv_one: f64 = rinv_one.iter().sum();
        let one_rinv_f: f64 = rinv_one.iter().zip(f).map(|(a, b)| a * b).sum();
        let mu_hat = one_rinv_f / one_rinv_one;
        let resid: Vec<f64> = f.iter().map(|v| v - mu_hat).collect();
        let quad: f64 = (0..n)
            .map(|i| (0..n).map(|j| resid[i] * rinv[i][j] * resid[j]).sum::<f64>())
            .sum();
        Some(Self {
            unit,
            length_scale,
            rinv,
            resid,
            mu_hat,
            sigma2_hat: quad / n as f64,
            condition,
            bounds: bounds.clone(),
        })
    }

    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let u = self.bounds.to_unit(x);
        let n = self.unit.len();
        let r: Vec<f64> = self
            .unit
            .iter()
            .map(|row| {
                let d2: f64 = row.iter().zip(&u).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * self.length_scale * self.length_scale)).exp()
            })
            .collect();
        let rinv_r: Vec<f64> = (0..n).map(|i| (0..n).map(|j| self.rinv[i][j] * r[j]).sum()).collect();
        let mean = self.mu_hat + rinv_r.iter().zip(&self.resid).map(|(a, b)| a * b).sum::<f64>();
        let r_rinv_r: f64 = r.iter().zip(&rinv_r).map(|(a, b)| a * b).sum();
        let one_rinv_r: f64 = rinv_r.iter().sum();
        let one_rinv_one: f64 = self.rinv.iter().flatten().sum();
        let var = self.sigma2_hat * (1.0 - r_rinv_r + (1.0 - one_rinv_r).powi(2) / one_rinv_one);
        (mean, var.max(0.0))
    }
}

/// Kriging moments and predictions on random instances (n ≤ 40, D ≤ 10).
///
/// An explicit inverse cannot resolve eight digits once the correlation
/// matrix is worse conditioned than [`ORACLE_CONDITION_LIMIT`]; such draws
/// are replaced and counted.
pub fn gp_inverse_oracle(seed: u64, instances: usize) -> CheckOutcome {
    let mut worst = 0.0f64;
    let mut failures = 0;
    let mut compared = 0;
    let mut redrawn = 0;
    let mut draw = 0u64;
    while compared < instances && draw < 20 * instances as u64 {
        let state = RngState::new(seed, 1000 + draw);
        draw += 1;
        let mut g = state.generator();
        let n = g.random_range(5..=40);
        let dim = g.random_range(1..=10);
        let bounds = SearchBox::uniform(dim, -3.0, 5.0).expect("valid box");
        let x: Vec<Vec<f64>> = (0..n).map(|_| bounds.sample_uniform(&mut g)).collect();
        let y: Vec<f64> = (0..n).map(|_| g.random_range(-10.0..10.0)).collect();
        let archive = Archive::new(x, y).expect("valid archive");
        let Ok(model) = fit(&archive, &bounds, LengthScaleBounds::default()) else {
            failures += 1;
            compared += 1;
            continue;
        };
        let Some(oracle) = InverseKriging::new(&archive, &bounds, model.length_scale(), model.jitter()) else {
            redrawn += 1;
            continue;
        };
        if oracle.condition > ORACLE_CONDITION_LIMIT {
            redrawn += 1;
            continue;
        }
        compared += 1;
        let mut rel = |a: f64, b: f64| {
            let e = (a - b).abs() / (1.0 + b.abs());
            worst = worst.max(e);
            e <= 1e-8
        };
        let mut ok = rel(model.mu_hat(), oracle.mu_hat) && rel(model.sigma2_hat(), oracle.sigma2_hat);
        for _ in 0..10 {
            let q = bounds.sample_uniform(&mut g);
            let p = model.predict(&q).expect("dimension matches");
            let (m, v) = oracle.predict(&q);
            ok &= rel(p.mean, m) & rel(p.variance, v);
        }
        if !ok {
            failures += 1;
        }
    }
    CheckOutcome {
        name: "gp-inverse-oracle",
        passed: failures == 0 && compared == instances,
        detail: format!(
            "{compared} instances, {failures} failures, worst relative error {worst:.2e}, {redrawn} redrawn above condition {ORACLE_CONDITION_LIMIT:.0e}"
        ),
    }
}

/// Interpolation of 20 Latin hypercube points of the 5-d sphere.
pub fn gp_interpolation(seed: u64) -> CheckOutcome {
    let bounds = SearchBox::uniform(5, -100.0, 100.0).expect("valid box");
    let x = lhs_sample(20, &bounds, &mut RngState::new(seed, 7).generator()).expect("n > 0");
    let y: Vec<f64> = x.iter().map(|r| sphere(r)).collect();
    let archive = Archive::new(x, y).expect("valid archive");
    let model: GpModel<f64> = match fit(&archive, &bounds, LengthScaleBounds::default()) {
        Ok(m) => m,
        Err(e) => {
            return CheckOutcome {
                name: "gp-interpolation",
                passed: false,
                detail: e.to_string(),
            }
        }
    };
    let mut ok = true;
    for (row, y) in archive.rows().iter().zip(archive.values()) {
        let p = model.predict(row).expect("dimension matches");
        ok &= (p.mean - y).abs() <= 1e-6 * (1.0 + y.abs()) && p.variance <= 1e-6 * model.sigma2_hat();
    }
    CheckOutcome {
        name: "gp-interpolation",
        passed: ok,
        detail: format!("length-scale {:.4}, jitter {:.1e}", model.length_scale(), model.jitter()),
    }
}

/// Exact standard deviation of max(f_min − Y, 0) for Y ~ N(mean, sd²).
fn improvement_sd(mean: f64, sd: f64, f_min: f64) -> f64 {
    let u = f_min - mean;
    let z = u / sd;
    let cdf = 0.5 * erfc(-z / std::f64::consts::SQRT_2);
    let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let first = u * cdf + sd * pdf;
    let second = (u * u + sd * sd) * cdf + u * sd * pdf;
    (second - first * first).max(0.0).sqrt()
}

/// Closed-form EI against Monte-Carlo means on random triples.
pub fn ei_monte_carlo(seed: u64, triples: usize, samples: usize) -> CheckOutcome {
    let mut g = RngState::new(seed, 11).generator();
    let mut failures = 0;
    for _ in 0..triples {
        let mean: f64 = g.random_range(-3.0..3.0);
        let sd: f64 = g.random_range(0.1..3.0);
        let f_min: f64 = g.random_range(-3.0..3.0);
        let closed = expected_improvement(mean, sd, f_min).expect("finite inputs");
        let mut s = 0.0;
        for _ in 0..samples {
            let y = mean + sd * g.sample::<f64, _>(StandardNormal);
            s += (f_min - y).max(0.0);
        }
        let mc = s / samples as f64;
        let se = improvement_sd(mean, sd, f_min) / (samples as f64).sqrt();
        if (closed - mc).abs() > 3.0 * se + 1e-15 {
            failures += 1;
        }
    }
    let at_zero: f64 = expected_improvement(0.0, 1.0, 0.0).expect("finite inputs");
    let zero_sd: f64 = expected_improvement(-1.0, 0.0, 0.0).expect("finite inputs");
    let anchors = (at_zero - 0.398_942_3).abs() <= 1e-6 && zero_sd == 0.0;
    CheckOutcome {
        name: "ei-monte-carlo",
        passed: failures == 0 && anchors,
        detail: format!("{triples} triples × {samples} samples, {failures} outside 3 standard errors"),
    }
}

fn brute_force_p(a: &[f64], b: &[f64]) -> f64 {
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let ranks = average_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let n = ranks.len();
    let mean = ranks.iter().sum::<f64>() / 2.0;
    let observed: f64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    let hits = (0u64..1 << n)
        .filter(|mask| {
            let w: f64 = (0..n).filter(|k| mask >> k & 1 == 1).map(|k| ranks[k]).sum();
            (w - mean).abs() >= (observed - mean).abs() - 1e-9
        })
        .count();
    hits as f64 / (1u64 << n) as f64
}

/// Exact Wilcoxon p-values against full sign-pattern enumeration.
pub fn wilcoxon_enumeration(seed: u64, trials: usize) -> CheckOutcome {
    let mut g = RngState::new(seed, 13).generator();
    let mut mismatches = 0;
    let mut checked = 0;
    for t in 0..trials {
        let n = 5 + t % 8;
        let a: Vec<f64> = (0..n).map(|_| g.random_range(0..8) as f64).collect();
        let b: Vec<f64> = (0..n).map(|_| g.random_range(0..8) as f64).collect();
        let Ok(v) = wilcoxon_signed_rank(&a, &b, 0.05) else {
            mismatches += 1;
            continue;
        };
        if v.method != TestMethod::Exact {
            continue;
        }
        checked += 1;
        if v.p_value != brute_force_p(&a, &b) {
            mismatches += 1;
        }
    }
    let b = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let a: Vec<f64> = b.iter().map(|v| v + 0.5).collect();
    let strict = wilcoxon_signed_rank(&a, &b, 0.05).map(|v| v.p_value == 0.03125).unwrap_or(false);
    CheckOutcome {
        name: "wilcoxon-enumeration",
        passed: mismatches == 0 && strict,
        detail: format!("{checked} exact cases compared, {mismatches} mismatches"),
    }
}

pub fn budget_table() -> CheckOutcome {
    let cases = [
        (Algorithm::StandardBo, 100, (200, 100)),
        (Algorithm::AdaDropout, 1, (10, 20)),
        (Algorithm::AdaDropout, 100, (400, 50)),
        (Algorithm::CoordinateLine, 1, (10, 20)),
    ];
    let bad: Vec<String> = cases
        .iter()
        .filter(|(a, d, (p, g))| ga_budget(*a, *d) != GaBudget { population: *p, generations: *g })
        .map(|(a, d, _)| format!("{a} d={d}"))
        .collect();
    CheckOutcome {
        name: "ga-budget-table",
        passed: bad.is_empty(),
        detail: if bad.is_empty() { "4 cases".into() } else { bad.join(", ") },
    }
}

pub fn dimension_rule() -> CheckOutcome {
    let ok = update_dimension(5, 90.3, 63.9) == 4
        && update_dimension(4, 49.8, 63.9) == 4
        && update_dimension(1, 10.0, 5.0) == 1
        && update_dimension(3, 5.0, 5.0) == 3;
    CheckOutcome {
        name: "dimension-rule",
        passed: ok,
        detail: "drop on strict worsening, floor at one".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_passes() {
        for outcome in [
            gp_inverse_oracle(1, 10),
            gp_interpolation(1),
            ei_monte_carlo(1, 5, 200_000),
            wilcoxon_enumeration(1, 40),
            budget_table(),
            dimension_rule(),
        ] {
            assert!(outcome.passed, "{}: {}", outcome.name, outcome.detail);
        }
    }

    #[test]
    fn gauss_jordan_inverts() {
        let a = vec![vec![4.0, 1.0], vec![2.0, 3.0]];
        let inv = gauss_jordan_inverse(a).unwrap();
        assert!((inv[0][0] - 0.3).abs() < 1e-15 && (inv[1][0] + 0.2).abs() < 1e-15);
        assert!(gauss_jordan_inverse(vec![vec![0.0]]).is_none());
    }
}
