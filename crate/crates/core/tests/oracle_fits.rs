//! Brute-force oracles for the fitting paths: a direction-grid oracle for
//! the unconstrained fit, an exhaustive threshold oracle for the interval
//! reduction, and enumeration checks of the box-cover sandwich.

use fairguard::metrics::{empirical_error, group_performance, Dataset, MetricSpec, Sample};
use fairguard::reduction::{fit_reduced, partition_intervals, IntervalPartition};
use fairguard::solver::{
    fit_unconstrained, robust_fairness_threshold, RobustParams, SolverConfig,
};
use fairguard::theory::{build_family_a, exact_metrics, EnumClassifier};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

#[test]
fn unconstrained_matches_direction_grid_oracle() {
    // symmetric data: every sample is paired with its mirror through the
    // origin carrying the flipped label, so the best linear boundary passes
    // through the origin
    let mut rng = ChaCha12Rng::seed_from_u64(3);
    let mut samples = Vec::new();
    let w_star = [1.0, 0.5];
    for i in 0..30 {
        let x = [rng.gen_range(-3.0f64..3.0), rng.gen_range(-3.0f64..3.0)];
        let noise: f64 = rng.gen_range(-0.2..0.2);
        let label = u8::from(x[0] * w_star[0] + x[1] * w_star[1] + noise > 0.0);
        let group = 1 + (i % 2);
        samples.push(Sample::new(x.to_vec(), label, group));
        samples.push(Sample::new(vec![-x[0], -x[1]], 1 - label, group));
    }
    let ds = Dataset::new(samples, 2).unwrap();

    let accuracy = |theta: [f64; 2]| -> f64 {
        let preds: Vec<u8> = ds
            .samples()
            .iter()
            .map(|s| u8::from(s.features[0] * theta[0] + s.features[1] * theta[1] >= 0.0))
            .collect();
        1.0 - empirical_error(&ds, &preds).unwrap()
    };
    let mut oracle = 0.0f64;
    for k in 0..1440 {
        let phi = k as f64 * std::f64::consts::TAU / 1440.0;
        oracle = oracle.max(accuracy([phi.cos(), phi.sin()]));
    }

    let cfg = SolverConfig { max_iters: 600, restarts: 3, ..Default::default() };
    let fit = fit_unconstrained(&ds, &cfg).unwrap();
    let fit_acc = accuracy([fit.classifier.theta[0], fit.classifier.theta[1]]);
    assert!(
        fit_acc >= oracle - 0.05,
        "fit accuracy {fit_acc} vs grid oracle {oracle}"
    );
}

/// All threshold classifiers over 1-d points with a bias column: both
/// orientations of every cut between consecutive distinct values, plus the
/// two constant classifiers.
fn threshold_predictions(xs: &[f64]) -> Vec<Vec<u8>> {
    let mut sorted: Vec<f64> = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup();
    let mut cuts = vec![sorted[0] - 1.0];
    for w in sorted.windows(2) {
        cuts.push(0.5 * (w[0] + w[1]));
    }
    cuts.push(sorted[sorted.len() - 1] + 1.0);
    let mut out = Vec::new();
    for &t in &cuts {
        out.push(xs.iter().map(|&x| u8::from(x >= t)).collect());
        out.push(xs.iter().map(|&x| u8::from(x <= t)).collect());
    }
    out
}

#[test]
fn reduced_fit_matches_threshold_oracle() {
    let mut samples = Vec::new();
    for i in 0..10 {
        let x = -4.5 + i as f64;
        samples.push(Sample::new(vec![x, 1.0], u8::from(x > 0.0), 1));
    }
    for i in 0..10 {
        let x = -4.0 + i as f64;
        samples.push(Sample::new(vec![x, 1.0], u8::from(x > 0.0), 2));
    }
    let ds = Dataset::new(samples, 2).unwrap();
    let sr = MetricSpec::statistical_rate();
    let params = RobustParams::new(0.05, 0.8, vec![0.25, 0.25], vec![0.5, 0.5], 0.01).unwrap();
    let alpha = 0.05;

    // exhaustive oracle over the threshold family
    let tau_robust = robust_fairness_threshold(&params).unwrap();
    let mass_bound = params.min_lambda() - params.eta - params.delta;
    let xs: Vec<f64> = ds.samples().iter().map(|s| s.features[0]).collect();
    let mut oracle_err = f64::INFINITY;
    for preds in threshold_predictions(&xs) {
        let table = group_performance(&ds, &preds, &sr).unwrap();
        let q: Vec<f64> = table.q.iter().map(|v| v.unwrap()).collect();
        let min = q.iter().cloned().fold(f64::MAX, f64::min);
        let max = q.iter().cloned().fold(f64::MIN, f64::max);
        let alpha_feasible = min >= tau_robust * max - alpha - 1e-12;
        let masses_ok = (1..=2).all(|g| {
            fairguard::metrics::joint_event_mass(&ds, &preds, &sr, g).unwrap()
                >= mass_bound - 1e-12
        });
        if alpha_feasible && masses_ok {
            oracle_err = oracle_err.min(empirical_error(&ds, &preds).unwrap());
        }
    }
    assert!(oracle_err.is_finite());

    let cfg = SolverConfig { max_iters: 600, restarts: 5, ..Default::default() };
    let result = fit_reduced(&ds, &sr, &params, alpha, &cfg).unwrap();
    assert!(result.feasible, "no feasible box found");
    assert!(result.winning_box.is_some());
    let preds = result.classifier.predict_all_hard(&ds).unwrap();
    let err = empirical_error(&ds, &preds).unwrap();
    assert!(
        err <= oracle_err + 0.05,
        "reduced error {err} vs oracle {oracle_err}"
    );

    // winner's hard fairness obeys the alpha/lambda violation bound
    let omega = fairguard::metrics::fairness_of(&ds, &preds, &sr).unwrap();
    assert!(omega >= tau_robust - alpha / params.min_lambda() - 1e-9);
}

#[test]
fn box_cover_sandwich_on_enumerated_classifiers() {
    let [d1, _, _] = build_family_a(0.3, 0.1).unwrap();
    let sr = MetricSpec::statistical_rate();
    let mut rng = ChaCha12Rng::seed_from_u64(41);
    for _ in 0..10 {
        let tau: f64 = rng.gen_range(0.05..=1.0);
        let alpha: f64 = rng.gen_range(0.05..=1.0);
        let partition = partition_intervals(tau, alpha).unwrap();
        for idx in 0..EnumClassifier::enumeration_size(3, 2) {
            let clf = EnumClassifier::from_index(idx, 3, 2);
            let (_, _omega) = exact_metrics(&d1, &clf, &sr);
            let q = exact_q(&d1, &clf);
            if IntervalPartition::in_k(&q, tau, 0.0) {
                assert!(partition.in_union(&q), "K(tau,0) escaped the cover: {q:?}");
            }
            if partition.in_union(&q) {
                assert!(
                    IntervalPartition::in_k(&q, tau, alpha),
                    "cover escaped K(tau,alpha): {q:?} tau={tau} alpha={alpha}"
                );
            }
        }
    }
}

#[test]
fn shrinking_boxes_never_enlarge_feasible_sets() {
    let [d1, _, _] = build_family_a(0.3, 0.1).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(43);
    for _ in 0..20 {
        let low: f64 = rng.gen_range(0.0..0.5);
        let high: f64 = rng.gen_range(low..=1.0);
        let low2 = rng.gen_range(low..=high);
        let high2 = rng.gen_range(low2..=high);
        let mut inner = 0;
        let mut outer = 0;
        for idx in 0..EnumClassifier::enumeration_size(3, 2) {
            let q = exact_q(&d1, &EnumClassifier::from_index(idx, 3, 2));
            let in_small = q.iter().all(|&v| v >= low2 && v <= high2);
            let in_big = q.iter().all(|&v| v >= low && v <= high);
            if in_small {
                inner += 1;
                assert!(in_big);
            }
            if in_big {
                outer += 1;
            }
        }
        assert!(inner <= outer);
    }
}

/// Exact per-group statistical rates of an enumerated classifier.
fn exact_q(dist: &fairguard::theory::FiniteDistribution, clf: &EnumClassifier) -> Vec<f64> {
    let mut num = vec![0.0; dist.num_groups];
    let mut den = vec![0.0; dist.num_groups];
    for (&(x, z, _), &m) in dist.points.iter().zip(&dist.mass) {
        den[z - 1] += m;
        if clf.predict(x, z) == 1 {
            num[z - 1] += m;
        }
    }
    num.iter().zip(&den).map(|(&n, &d)| if d > 0.0 { n / d } else { 0.0 }).collect()
}
