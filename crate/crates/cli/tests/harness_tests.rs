//! Harness-level tests: report determinism, sweep plumbing, grid building,
//! and the theory driver.

use fairguard::adversary::TargetKind;
use fairguard_cli::{
    build_grid, run_experiment, sweep, verify_theory, AdversarySpec, DataSource,
    ExperimentConfig, SolverVariant, TheoryParams,
};

fn quick_cfg() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    match &mut cfg.data {
        DataSource::Synthetic(s) => s.n = 300,
        _ => unreachable!(),
    }
    cfg.max_iters = 400;
    cfg.restarts = 3;
    cfg
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let cfg = ExperimentConfig {
        adversary: AdversarySpec::Targeted {
            outcome: TargetKind::Tn,
            source_group: 1,
            target_group: 2,
        },
        solver: SolverVariant::ErrTolPlus,
        eta: 0.05,
        trials: 1,
        seed: 7,
        ..quick_cfg()
    };
    let a = serde_json::to_string_pretty(&run_experiment(&cfg).unwrap()).unwrap();
    let b = serde_json::to_string_pretty(&run_experiment(&cfg).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn parallel_trials_match_serial() {
    let serial = ExperimentConfig {
        solver: SolverVariant::Uncons,
        trials: 4,
        jobs: 1,
        ..quick_cfg()
    };
    let parallel = ExperimentConfig { jobs: 4, ..serial.clone() };
    let a = run_experiment(&serial).unwrap();
    let b = run_experiment(&parallel).unwrap();
    // compare the serialized rows: wall time is diagnostics and excluded
    assert_eq!(
        serde_json::to_string(&a.rows).unwrap(),
        serde_json::to_string(&b.rows).unwrap()
    );
}

#[test]
fn trial_seeds_are_recorded_and_distinct() {
    let cfg = ExperimentConfig { solver: SolverVariant::Uncons, trials: 5, ..quick_cfg() };
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.trial_seeds.len(), 5);
    let mut sorted = report.trial_seeds.clone();
    sorted.sort_unstable();
    sorted.dedup();
    assert_eq!(sorted.len(), 5);
}

#[test]
fn aggregates_are_recomputable_from_rows() {
    let cfg = ExperimentConfig { solver: SolverVariant::Uncons, trials: 6, ..quick_cfg() };
    let report = run_experiment(&cfg).unwrap();
    let accs: Vec<f64> = report.rows.iter().map(|r| r.test_accuracy).collect();
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    let var =
        accs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (accs.len() as f64 - 1.0);
    assert!((report.aggregate.mean_accuracy - mean).abs() < 1e-15);
    assert!((report.aggregate.std_accuracy - var.sqrt()).abs() < 1e-15);
    let srs: Vec<f64> = report.rows.iter().map(|r| r.test_fairness[0].1).collect();
    let sr_mean = srs.iter().sum::<f64>() / srs.len() as f64;
    assert!((report.aggregate.fairness[0].mean - sr_mean).abs() < 1e-15);
}

#[test]
fn grid_builder_cross_product_and_empty_error() {
    let grid = build_grid(&[0.7, 0.8], &[0.0, 0.05], &[]).unwrap();
    assert_eq!(grid.len(), 4);
    assert!(build_grid(&[], &[], &[]).is_err());
}

#[test]
fn sweep_emits_one_row_per_point() {
    let cfg = ExperimentConfig { solver: SolverVariant::Uncons, trials: 2, ..quick_cfg() };
    let grid = build_grid(&[0.7, 0.9], &[], &[]).unwrap();
    let report = sweep(&cfg, &grid).unwrap();
    assert_eq!(report.points.len(), 2);
    let csv = report.to_csv();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("tau,eta,group_fraction,mean_acc,stderr_acc,mean_sr,stderr_sr"));
}

#[test]
fn group_fraction_sweep_reshapes_data() {
    let cfg = ExperimentConfig { solver: SolverVariant::Uncons, trials: 1, ..quick_cfg() };
    let grid = build_grid(&[], &[], &[0.15, 0.85]).unwrap();
    let report = sweep(&cfg, &grid).unwrap();
    assert_eq!(report.points.len(), 2);
    for (point, _) in &report.points {
        assert!(point.group_fraction.is_some());
    }
}

#[test]
fn coupling_requires_family_data() {
    let cfg = ExperimentConfig {
        adversary: AdversarySpec::Coupling { source_dist: 1, target_dist: 2 },
        ..quick_cfg()
    };
    assert!(cfg.validate().is_err());
}

#[test]
fn theory_defaults_all_pass() {
    let report = verify_theory(&TheoryParams::default()).unwrap();
    assert!(report.all_passed, "{:#?}", report.checks);
    assert_eq!(report.checks.len(), 12);
}

fn tn_adversary() -> AdversarySpec {
    AdversarySpec::Targeted { outcome: TargetKind::Tn, source_group: 1, target_group: 2 }
}

#[test]
fn err_tol_table_row_at_five_percent() {
    let cfg = ExperimentConfig {
        adversary: tn_adversary(),
        solver: SolverVariant::ErrTol,
        eta: 0.05,
        tau: 0.8,
        trials: 20,
        jobs: 4,
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&cfg).unwrap();
    let acc = report.aggregate.mean_accuracy;
    let sr = report.aggregate.fairness[0].mean;
    assert!(acc >= 0.97, "mean accuracy {acc:.4}");
    assert!((0.77..=0.83).contains(&sr), "mean SR {sr:.4}");
}

#[test]
fn sweep_sr_monotone_in_tau() {
    let cfg = ExperimentConfig {
        adversary: tn_adversary(),
        solver: SolverVariant::ErrTol,
        eta: 0.05,
        trials: 20,
        jobs: 4,
        ..ExperimentConfig::default()
    };
    let grid = build_grid(&[0.7, 0.8, 0.9, 1.0], &[], &[]).unwrap();
    let report = sweep(&cfg, &grid).unwrap();
    assert_eq!(report.points.len(), 4);
    let means: Vec<f64> =
        report.points.iter().map(|(_, r)| r.aggregate.fairness[0].mean).collect();
    for w in means.windows(2) {
        assert!(w[1] >= w[0] - 0.03, "achieved SR decreased beyond noise: {means:?}");
    }
}

#[test]
fn nasty_label_noise_stays_accurate() {
    let cfg = ExperimentConfig {
        adversary: AdversarySpec::Nasty,
        solver: SolverVariant::ErrTolPlus,
        eta: 0.03,
        tau: 0.8,
        trials: 10,
        jobs: 4,
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&cfg).unwrap();
    assert!(report.aggregate.mean_accuracy >= 0.97, "{}", report.aggregate.mean_accuracy);
    assert!(report.aggregate.fairness[0].mean >= 0.75, "{}", report.aggregate.fairness[0].mean);
}

#[test]
fn stochastic_flip_noise_stays_accurate() {
    let cfg = ExperimentConfig {
        adversary: AdversarySpec::Flip { rates: vec![0.035, 0.035] },
        solver: SolverVariant::ErrTol,
        eta: 0.035,
        tau: 0.8,
        trials: 10,
        jobs: 4,
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&cfg).unwrap();
    assert!(report.aggregate.mean_accuracy >= 0.97, "{}", report.aggregate.mean_accuracy);
    assert!(report.aggregate.fairness[0].mean >= 0.75, "{}", report.aggregate.fairness[0].mean);
}

#[test]
fn fpr_metric_requires_explicit_lambda() {
    let cfg = ExperimentConfig {
        solver: SolverVariant::ErrTol,
        metrics: vec!["fpr".into()],
        eta: 0.01,
        trials: 1,
        ..quick_cfg()
    };
    assert!(run_experiment(&cfg).is_err());
    let with_lambda = ExperimentConfig { lambda_override: Some(vec![0.05, 0.05]), ..cfg };
    let report = run_experiment(&with_lambda).unwrap();
    assert_eq!(report.rows.len(), 1);
}

#[test]
fn group_fraction_sweep_stays_calibrated() {
    let cfg = ExperimentConfig {
        adversary: tn_adversary(),
        solver: SolverVariant::ErrTolPlus,
        eta: 0.05,
        tau: 0.8,
        trials: 20,
        jobs: 4,
        ..ExperimentConfig::default()
    };
    let grid = build_grid(&[], &[], &[0.15, 0.5, 0.85]).unwrap();
    let report = sweep(&cfg, &grid).unwrap();
    for (point, r) in &report.points {
        let acc = r.aggregate.mean_accuracy;
        let sr = r.aggregate.fairness[0].mean;
        assert!(acc >= 0.97, "fraction {:?}: accuracy {acc:.4}", point.group_fraction);
        assert!(sr >= 0.75, "fraction {:?}: SR {sr:.4}", point.group_fraction);
    }
}
