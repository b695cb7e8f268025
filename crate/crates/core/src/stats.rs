//! Paired Wilcoxon signed-rank comparison and run summaries.
//!
//! The test is two-sided. Zero differences are discarded, tied absolute
//! differences share their average rank. Up to [`EXACT_LIMIT`] non-zero
//! pairs the null distribution is enumerated exactly; above it a normal
//! approximation with continuity and tie corrections is used.

use std::fmt;

use crate::acquisition::normal_cdf;
use crate::error::{contract_err, Result};
use crate::optimizers::RunTrace;

/// Largest effective sample size handled by exact enumeration.
pub const EXACT_LIMIT: usize = 12;
/// Fewer non-zero differences than this give a degenerate comparison.
pub const MIN_PAIRS: usize = 5;

/// Outcome for the first sample relative to the second, minimization sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    /// First sample significantly better (lower).
    Plus,
    /// First sample significantly worse.
    Minus,
    /// No significant difference.
    Approx,
}

impl Verdict {
    pub fn symbol(&self) -> &'static str {
        match self {
            Verdict::Plus => "+",
            Verdict::Minus => "−",
            Verdict::Approx => "≈",
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Plus => "plus",
            Verdict::Minus => "minus",
            Verdict::Approx => "approx",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "plus" | "+" => Some(Verdict::Plus),
            "minus" | "−" | "-" => Some(Verdict::Minus),
            "approx" | "≈" => Some(Verdict::Approx),
            _ => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestMethod {
    Exact,
    Normal,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonVerdict {
    pub p_value: f64,
    pub verdict: Verdict,
    pub median_a: f64,
    pub median_b: f64,
    /// Sum of ranks of positive differences `a − b`.
    pub w_plus: f64,
    /// Number of non-zero differences.
    pub n_effective: usize,
    pub method: TestMethod,
    pub degenerate: bool,
}

/// Average ranks (1-based) of `values`.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = avg;
        }
        start = end;
    }
    ranks
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Exact two-sided p-value by counting sign assignments.
///
/// Ranks are multiples of one half, so doubled ranks are integers and the
/// distribution of the doubled positive-rank sum is accumulated by dynamic
/// programming over the `2^n` equally likely sign patterns.
fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let observed = (2.0 * w_plus).round() as i64;
    // |2s − total| ≥ |2·observed − total|
    let threshold = (2 * observed - total as i64).abs();
    let extreme: u64 = counts
        .iter()
        .enumerate()
        .filter(|(s, _)| (2 * *s as i64 - total as i64).abs() >= threshold)
        .map(|(_, c)| *c)
        .sum();
    extreme as f64 / (1u64 << ranks.len()) as f64
}

fn normal_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut ties = 0.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - ties / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    (2.0 * (1.0 - normal_cdf(z))).clamp(0.0, 1.0)
}

/// Paired two-sided Wilcoxon signed-rank test of `a` against `b`.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64], alpha: f64) -> Result<ComparisonVerdict> {
    if a.len() != b.len() {
        return Err(contract_err!("paired samples of lengths {} and {}", a.len(), b.len()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(contract_err!("significance level {alpha} outside (0, 1)"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(contract_err!("samples must be finite"));
    }
    let (median_a, median_b) = (median(a), median(b));
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n < MIN_PAIRS {
        return Ok(ComparisonVerdict {
            p_value: 1.0,
            verdict: Verdict::Approx,
            median_a,
            median_b,
            w_plus: 0.0,
            n_effective: n,
            method: TestMethod::Degenerate,
            degenerate: true,
        });
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    let (p_value, method) = if n <= EXACT_LIMIT {
        (exact_p(&ranks, w_plus), TestMethod::Exact)
    } else {
        (normal_p(&ranks, w_plus), TestMethod::Normal)
    };
    let verdict = if p_value >= alpha {
        Verdict::Approx
    } else if median_a < median_b {
        Verdict::Plus
    } else if median_a > median_b {
        Verdict::Minus
    } else {
        // equal medians: fall back to the direction of the rank sums
        let mean = n as f64 * (n as f64 + 1.0) / 4.0;
        if w_plus < mean {
            Verdict::Plus
        } else {
            Verdict::Minus
        }
    };
    Ok(ComparisonVerdict {
        p_value,
        verdict,
        median_a,
        median_b,
        w_plus,
        n_effective: n,
        method,
        degenerate: false,
    })
}

/// Tally of verdicts, printed as `plus/approx/minus`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VerdictCounts {
    pub plus: usize,
    pub approx: usize,
    pub minus: usize,
}

impl VerdictCounts {
    pub fn add(&mut self, v: Verdict) {
        match v {
            Verdict::Plus => self.plus += 1,
            Verdict::Approx => self.approx += 1,
            Verdict::Minus => self.minus += 1,
        }
    }
}

impl fmt::Display for VerdictCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.plus, self.approx, self.minus)
    }
}

/// Statistics of several runs of one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub runs: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation; zero for a single run.
    pub std: f64,
    pub final_values: Vec<f64>,
    /// Mean best-so-far value after each evaluation.
    pub mean_curve: Vec<f64>,
}

/// Summarizes best-so-far curves that share one evaluation grid.
pub fn summarize_curves<C: AsRef<[f64]>>(curves: &[C]) -> Result<Summary> {
    if curves.is_empty() {
        return Err(contract_err!("nothing to summarize"));
    }
    let len = curves[0].as_ref().len();
    if len == 0 || curves.iter().any(|c| c.as_ref().len() != len) {
        return Err(contract_err!("curves must be non-empty and share one evaluation budget"));
    }
    let runs = curves.len();
    let final_values: Vec<f64> = curves.iter().map(|c| c.as_ref()[len - 1]).collect();
    let mean = final_values.iter().sum::<f64>() / runs as f64;
    let std = if runs > 1 {
        (final_values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (runs - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mean_curve = (0..len)
        .map(|k| curves.iter().map(|c| c.as_ref()[k]).sum::<f64>() / runs as f64)
        .collect();
    Ok(Summary {
        runs,
        mean,
        median: median(&final_values),
        std,
        final_values,
        mean_curve,
    })
}

pub fn summarize(traces: &[RunTrace<f64>]) -> Result<Summary> {
    let curves: Vec<Vec<f64>> = traces.iter().map(|t| t.fmin_curve()).collect();
    summarize_curves(&curves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;
    use proptest::prelude::*;
    use rand::Rng;

    /// Enumerates every sign pattern over the ranks directly.
    fn brute_force_p(a: &[f64], b: &[f64]) -> f64 {
        let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
        let ranks = average_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
        let n = ranks.len();
        let total: f64 = ranks.iter().sum();
        let mean = total / 2.0;
        let observed: f64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
        let mut hits = 0u64;
        for mask in 0u64..(1 << n) {
            let w: f64 = (0..n).filter(|k| mask >> k & 1 == 1).map(|k| ranks[k]).sum();
            if (w - mean).abs() >= (observed - mean).abs() - 1e-9 {
                hits += 1;
            }
        }
        hits as f64 / (1u64 << n) as f64
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn identical_samples_are_degenerate() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let v = wilcoxon_signed_rank(&a, &a, 0.05).unwrap();
        assert!(v.degenerate);
        assert_eq!(v.verdict, Verdict::Approx);
        assert_eq!(v.method, TestMethod::Degenerate);
    }

    #[test]
    fn six_strict_pairs() {
        let b = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let a = [1.5, 2.7, 3.1, 4.9, 5.2, 6.8];
        let v = wilcoxon_signed_rank(&a, &b, 0.05).unwrap();
        assert_eq!(v.p_value, 0.03125);
        assert_eq!(v.verdict, Verdict::Minus);
        let w = wilcoxon_signed_rank(&b, &a, 0.05).unwrap();
        assert_eq!(w.verdict, Verdict::Plus);
    }

    #[test]
    fn thirty_unit_shifts() {
        let b: Vec<f64> = (0..30).map(|i| ((i * 37) % 19) as f64 - 9.0).collect();
        let a: Vec<f64> = b.iter().map(|v| v + 1.0).collect();
        let v = wilcoxon_signed_rank(&a, &b, 0.05).unwrap();
        assert_eq!(v.method, TestMethod::Normal);
        assert_eq!(v.w_plus, 465.0);
        // all |d| tied: var = 30·31·61/24 − (30³−30)/48
        let var = 30.0 * 31.0 * 61.0 / 24.0 - (27000.0 - 30.0) / 48.0;
        let z = (465.0 - 232.5 - 0.5) / f64::sqrt(var);
        let expect = 2.0 * (1.0 - normal_cdf(z));
        assert!((v.p_value - expect).abs() < 1e-15);
        assert!(v.p_value < 0.05);
        assert_eq!(v.verdict, Verdict::Minus);
        assert_eq!(wilcoxon_signed_rank(&b, &a, 0.05).unwrap().verdict, Verdict::Plus);
    }

    #[test]
    fn exact_branch_equals_brute_force() {
        let mut g = RngState::new(8, 0).generator();
        for trial in 0..200 {
            let n = 5 + trial % 8;
            let a: Vec<f64> = (0..n).map(|_| (g.random_range(0..6) as f64) * 0.5).collect();
            let b: Vec<f64> = (0..n).map(|_| (g.random_range(0..6) as f64) * 0.5).collect();
            let v = wilcoxon_signed_rank(&a, &b, 0.05).unwrap();
            if v.degenerate {
                continue;
            }
            assert_eq!(v.method, TestMethod::Exact);
            assert_eq!(v.p_value, brute_force_p(&a, &b), "trial {trial}");
        }
    }

    #[test]
    fn exact_and_normal_close_at_twelve() {
        // the continuity-corrected approximation drifts by up to ~0.014 near p = 0.5
        let ranks: Vec<f64> = (1..=12).map(|v| v as f64).collect();
        for w in 0..=78 {
            let (e, n) = (exact_p(&ranks, w as f64), normal_p(&ranks, w as f64));
            assert!((e - n).abs() <= 0.015, "w = {w}");
            if e <= 0.25 {
                assert!((e - n).abs() <= 0.01, "w = {w}");
            }
        }
        let mut g = RngState::new(12, 0).generator();
        for _ in 0..100 {
            let a: Vec<f64> = (0..12).map(|_| g.random::<f64>()).collect();
            let b: Vec<f64> = (0..12).map(|_| g.random::<f64>() + 0.2).collect();
            let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            let ranks = average_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
            let w: f64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
            let e = exact_p(&ranks, w);
            let gap = (e - normal_p(&ranks, w)).abs();
            assert!(gap <= 0.015);
            if e <= 0.25 {
                assert!(gap <= 0.01);
            }
        }
    }

    proptest! {
        #[test]
        fn swap_symmetry(a in prop::collection::vec(-5.0f64..5.0, 5..40), shift in -2.0f64..2.0) {
            let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v * 0.9 + shift + (i as f64).sin()).collect();
            let ab = wilcoxon_signed_rank(&a, &b, 0.05).unwrap();
            let ba = wilcoxon_signed_rank(&b, &a, 0.05).unwrap();
            prop_assert!((ab.p_value - ba.p_value).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab.p_value));
            let flipped = match ab.verdict {
                Verdict::Plus => Verdict::Minus,
                Verdict::Minus => Verdict::Plus,
                Verdict::Approx => Verdict::Approx,
            };
            prop_assert_eq!(ba.verdict, flipped);
        }
    }

    #[test]
    fn summary_statistics() {
        let s = summarize_curves(&[vec![5.0, 3.0, 1.0], vec![4.0, 3.0, 3.0]]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.median, 2.0);
        assert_eq!(s.mean_curve, vec![4.5, 3.0, 2.0]);
        let one = summarize_curves(&[vec![2.0, 1.0]]).unwrap();
        assert_eq!((one.mean, one.median, one.std), (1.0, 1.0, 0.0));
        assert_eq!(one.mean_curve, vec![2.0, 1.0]);
        let many: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 * 0.1 + 7.0]).collect();
        let s = summarize_curves(&many).unwrap();
        let expect = (0..30).map(|i| i as f64 * 0.1 + 7.0).sum::<f64>() / 30.0;
        assert!((s.mean - expect).abs() <= 1e-12);
        assert!(summarize_curves(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(summarize_curves::<Vec<f64>>(&[]).is_err());
    }

    #[test]
    fn verdict_counts_format() {
        let mut c = VerdictCounts::default();
        for v in [Verdict::Plus, Verdict::Plus, Verdict::Approx, Verdict::Minus] {
            c.add(v);
        }
        assert_eq!(c.to_string(), "2/1/1");
    }
}
