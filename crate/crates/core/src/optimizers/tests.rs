use super::*;
use crate::error::Error;
use crate::ga::GaBudget;
use crate::objectives::{ellipsoid, fig1_demo, sphere, FnObjective, Objective, ObjectiveKind, ObjectiveSpec};

fn cfg(algorithm: Algorithm, dim: usize, n_init: usize, n_max: usize) -> OptimizerConfig<f64> {
    OptimizerConfig::new(algorithm, n_init, n_max, SearchBox::uniform(dim, -5.0, 5.0).unwrap())
}

fn nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

/// Returns the scripted values in order for the initial design, then
/// delegates to `after`.
fn scripted(dim: usize, initial: Vec<f64>, mut after: impl FnMut(usize) -> f64 + Send) -> impl Objective<f64> {
    let mut calls = 0usize;
    FnObjective::new(dim, move |_x: &[f64]| {
        let v = if calls < initial.len() { initial[calls] } else { after(calls - initial.len()) };
        calls += 1;
        v
    })
}

#[test]
fn incumbent_examples() {
    let a = Archive::new(vec![vec![0.0], vec![1.0], vec![2.0]], vec![3.0, 1.0, 2.0]).unwrap();
    assert_eq!(update_incumbent(&a), (vec![1.0], 1.0));
    let mut t = Archive::new(vec![vec![0.0], vec![1.0]], vec![5.0, 5.0]).unwrap();
    assert_eq!(update_incumbent(&t), (vec![0.0], 5.0));
    t.push(vec![0.5], 4.0).unwrap();
    assert_eq!(update_incumbent(&t), (vec![0.5], 4.0));
}

#[test]
fn dimension_rule_examples() {
    assert_eq!(update_dimension(5, 90.3, 63.9), 4);
    assert_eq!(update_dimension(4, 49.8, 63.9), 4);
    assert_eq!(update_dimension(1, 10.0, 5.0), 1);
    assert_eq!(update_dimension(3, 2.0, 2.0), 3);
}

#[test]
fn algorithm_tags_round_trip() {
    for a in Algorithm::ALL {
        assert_eq!(a.tag().parse::<Algorithm>().unwrap(), a);
    }
    assert!("turbo".parse::<Algorithm>().is_err());
}

#[test]
fn zero_iterations_identical_across_algorithms() {
    let traces: Vec<RunTrace<f64>> = Algorithm::ALL
        .iter()
        .map(|&a| {
            let mut obj = FnObjective::new(5, |x: &[f64]| sphere(x));
            run(&mut obj, &cfg(a, 5, 12, 12), RngState::new(3, 1)).unwrap()
        })
        .collect();
    for t in &traces {
        assert!(t.records.is_empty());
        assert_eq!(t.initial_design, traces[0].initial_design);
        assert_eq!(t.fmin_curve(), traces[0].fmin_curve());
        let min = t.initial_values.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(t.f_min, min);
    }
}

#[test]
fn standard_bo_sphere_improves() {
    let mut obj = FnObjective::new(2, |x: &[f64]| sphere(x));
    let t = run_standard_bo(&mut obj, &cfg(Algorithm::StandardBo, 2, 10, 40), RngState::new(1, 0)).unwrap();
    assert_eq!(t.evaluations(), 40);
    let curve = t.fmin_curve();
    assert!(nonincreasing(&curve));
    assert!(t.f_min <= curve[9]);
    assert!(t.records.iter().all(|r| r.d == 2 && r.selected == vec![0, 1]));
}

#[test]
fn standard_bo_finds_demo_minimum() {
    // dense grid oracle
    let n = 1_000_000;
    let grid_min = (0..=n)
        .map(|k| fig1_demo(-5.0 + 10.0 * k as f64 / n as f64))
        .fold(f64::INFINITY, f64::min);
    let spec = ObjectiveSpec::<f64>::analytic(ObjectiveKind::Fig1Demo, 1).unwrap();
    let mut obj = spec.build().unwrap();
    let config = OptimizerConfig::new(Algorithm::StandardBo, 5, 20, spec.bounds.clone());
    let t = run_standard_bo(obj.as_mut(), &config, RngState::new(17, 0)).unwrap();
    assert_eq!(t.evaluations(), 20);
    assert!((t.f_min - grid_min).abs() <= 0.1, "{} vs {}", t.f_min, grid_min);
}

#[test]
fn adadropout_constant_objective_keeps_full_dimension() {
    let mut obj = FnObjective::new(4, |_x: &[f64]| 7.0);
    let t = run_adadropout(&mut obj, &cfg(Algorithm::AdaDropout, 4, 6, 14), RngState::new(2, 0)).unwrap();
    assert_eq!(t.d_sequence(), vec![4; 8]);
    assert!(t.records.iter().all(|r| r.f_next == 7.0));
}

#[test]
fn adadropout_never_improving_drops_to_one() {
    let dim = 10;
    let mut obj = scripted(dim, (0..12).map(|i| i as f64).collect(), |_| 1e6);
    let t = run_adadropout(&mut obj, &cfg(Algorithm::AdaDropout, dim, 12, 12 + 14), RngState::new(4, 0)).unwrap();
    let ds = t.d_sequence();
    // d used at iteration k is 10 − k until the floor
    assert_eq!(ds, vec![10, 9, 8, 7, 6, 5, 4, 3, 2, 1, 1, 1, 1, 1]);
    assert!(t.records.iter().all(|r| r.selected.len() == r.d));
}

#[test]
fn adadropout_always_improving_keeps_dimension() {
    let dim = 6;
    let mut obj = scripted(dim, vec![5.0; 8], |k| -(k as f64));
    let t = run_adadropout(&mut obj, &cfg(Algorithm::AdaDropout, dim, 8, 16), RngState::new(5, 0)).unwrap();
    assert_eq!(t.d_sequence(), vec![6; 8]);
}

#[test]
fn adadropout_reproduces_five_dimensional_narrative() {
    let initial = vec![70.2, 63.9, 81.0, 99.5, 64.4, 72.0];
    let follow = [90.3, 49.8];
    let mut obj = scripted(5, initial, move |k| follow.get(k).copied().unwrap_or(1e3));
    let t = run_adadropout(&mut obj, &cfg(Algorithm::AdaDropout, 5, 6, 8), RngState::new(6, 0)).unwrap();
    assert_eq!(t.records[0].d, 5);
    assert_eq!(t.records[0].f_next, 90.3);
    assert_eq!(t.records[0].f_min, 63.9);
    assert_eq!(t.records[1].d, 4);
    assert_eq!(t.records[1].selected.len(), 4);
    assert_eq!(t.records[1].f_min, 49.8);
    assert_eq!(t.records[1].incumbent, t.records[1].x_next);
}

#[test]
fn adadropout_candidates_keep_frozen_coordinates() {
    let mut obj = FnObjective::new(8, |x: &[f64]| ellipsoid(x));
    let t = run_adadropout(&mut obj, &cfg(Algorithm::AdaDropout, 8, 10, 30), RngState::new(8, 0)).unwrap();
    let mut previous = t.initial_design[crate::gp::argmin(&t.initial_values)].clone();
    for r in &t.records {
        for i in 0..8 {
            if !r.selected.contains(&i) && r.x_next != previous {
                // unless replaced as a duplicate, frozen coordinates come from the incumbent
                assert_eq!(r.x_next[i], previous[i]);
            }
        }
        previous = r.incumbent.clone();
    }
    assert!(nonincreasing(&t.fmin_curve()));
    let ds = t.d_sequence();
    assert!(ds.windows(2).all(|w| w[1] <= w[0] && w[0] - w[1] <= 1));
}

#[test]
fn dropout_uses_fixed_subspace() {
    let mut obj = FnObjective::new(5, |x: &[f64]| sphere(x));
    let t = run_dropout_baseline(&mut obj, &cfg(Algorithm::Dropout, 5, 8, 14), RngState::new(1, 0)).unwrap();
    assert!(t.records.iter().all(|r| r.selected == vec![0, 1, 2, 3, 4]));

    for seed in 0..10 {
        let mut obj = FnObjective::new(20, |x: &[f64]| ellipsoid(x));
        let t = run_dropout_baseline(&mut obj, &cfg(Algorithm::Dropout, 20, 20, 30), RngState::new(seed, 0)).unwrap();
        assert!(t.records.iter().all(|r| r.d == 5));
        let curve = t.fmin_curve();
        assert!(curve[29] <= curve[19]);
        assert!(nonincreasing(&curve));
    }
}

#[test]
fn dropout_rejects_oversized_subspace() {
    let mut obj = FnObjective::new(3, |x: &[f64]| sphere(x));
    let err = run_dropout_baseline(&mut obj, &cfg(Algorithm::Dropout, 3, 5, 8), RngState::new(1, 0)).unwrap_err();
    assert!(matches!(err.source, Error::Config(_)));
}

#[test]
fn coordinate_line_walks_permutations() {
    let dim = 4;
    let mut obj = FnObjective::new(dim, |x: &[f64]| sphere(x));
    let t = run_coordinate_line_bo(&mut obj, &cfg(Algorithm::CoordinateLine, dim, 6, 6 + 12), RngState::new(9, 0)).unwrap();
    for block in t.records.chunks(dim) {
        let mut seen: Vec<usize> = block.iter().map(|r| r.selected[0]).collect();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3]);
    }
}

#[test]
fn coordinate_line_matches_standard_bo_in_one_dimension() {
    let spec = ObjectiveSpec::<f64>::analytic(ObjectiveKind::Fig1Demo, 1).unwrap();
    let mut config = OptimizerConfig::new(Algorithm::StandardBo, 4, 14, spec.bounds.clone());
    config.ga_budget = Some(GaBudget::new(10, 20).unwrap());
    let a = run_standard_bo(spec.build().unwrap().as_mut(), &config, RngState::new(21, 0)).unwrap();
    let b = run_coordinate_line_bo(spec.build().unwrap().as_mut(), &config, RngState::new(21, 0)).unwrap();
    let xa: Vec<&Vec<f64>> = a.records.iter().map(|r| &r.x_next).collect();
    let xb: Vec<&Vec<f64>> = b.records.iter().map(|r| &r.x_next).collect();
    assert_eq!(xa, xb);
}

#[test]
fn failing_objective_keeps_partial_trace() {
    let mut calls = 0;
    struct Flaky<'a>(&'a mut usize);
    impl Objective<f64> for Flaky<'_> {
        fn dim(&self) -> usize {
            2
        }
        fn evaluate(&mut self, x: &[f64]) -> crate::Result<f64> {
            *self.0 += 1;
            if *self.0 > 9 {
                Err(Error::Evaluation("server went away".into()))
            } else {
                Ok(sphere(x))
            }
        }
    }
    let err = run_standard_bo(&mut Flaky(&mut calls), &cfg(Algorithm::StandardBo, 2, 6, 20), RngState::new(1, 0)).unwrap_err();
    assert!(matches!(err.source, Error::Evaluation(_)));
    assert_eq!(err.partial.evaluations(), 9);
    assert_eq!(err.partial.records.len(), 3);
}

#[test]
fn config_validation() {
    let mut c = cfg(Algorithm::AdaDropout, 3, 5, 4);
    assert!(c.validate().is_err());
    c.n_max = 10;
    c.d_init = Some(4);
    assert!(c.validate().is_err());
    c.d_init = Some(2);
    assert!(c.validate().is_ok());
    let mut obj = FnObjective::new(2, |x: &[f64]| sphere(x));
    assert!(run(&mut obj, &c, RngState::new(0, 0)).is_err());
}

#[test]
fn runs_in_single_precision() {
    let bounds = SearchBox::uniform(3, -5.0f32, 5.0).unwrap();
    let config = OptimizerConfig::new(Algorithm::AdaDropout, 8, 20, bounds);
    let mut obj = FnObjective::new(3, |x: &[f32]| sphere(x));
    let t = run(&mut obj, &config, RngState::new(2, 0)).unwrap();
    assert_eq!(t.evaluations(), 20);
    let curve = t.fmin_curve();
    assert!(curve.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn same_seed_same_trace() {
    let run_once = || {
        let mut obj = FnObjective::new(6, |x: &[f64]| ellipsoid(x));
        run_adadropout(&mut obj, &cfg(Algorithm::AdaDropout, 6, 10, 20), RngState::new(33, 2)).unwrap()
    };
    let (a, b) = (run_once(), run_once());
    assert_eq!(a.fmin_curve(), b.fmin_curve());
    assert_eq!(a.d_sequence(), b.d_sequence());
}
