//! The per-trial experiment protocol and the parameter sweep driver.
//!
//! Each trial splits the base data, trains the adversary's reference
//! classifier on the clean training split when one is needed, perturbs the
//! training split, fits the chosen solver variant on the perturbed data, and
//! evaluates with hard indicators on the untouched test split.

use std::time::Instant;

use fairguard::adversary::{
    perturb_flip, perturb_nasty_labels, perturb_p_restricted, perturb_targeted,
    perturb_tv_coupling, FlipMatrix,
};
use fairguard::data::{generate_synthetic, load_csv, split_train_test, SyntheticConfig};
use fairguard::error::{Error, Result};
use fairguard::hypothesis::LinearClassifier;
use fairguard::metrics::{empirical_error, fairness_of, Dataset, MetricSpec};
use fairguard::reduction::fit_reduced;
use fairguard::solver::{
    fit_err_tolerant, fit_err_tolerant_plus, fit_general_err_tolerant, fit_target_fair,
    fit_unconstrained, RobustParams, SolveResult, SolverConfig,
};
use fairguard::theory::build_family_a;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{AdversarySpec, DataSource, ExperimentConfig, SolverVariant};

/// splitmix64; the standard 64-bit finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Per-trial seed: the experiment seed XOR the trial index, diffused through
/// splitmix64 so neighboring trials share no stream structure.
pub fn derive_trial_seed(seed: u64, trial: usize) -> u64 {
    splitmix64(seed ^ trial as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub test_accuracy: f64,
    /// Clean-test fairness per requested metric, hard indicators.
    pub test_fairness: Vec<(String, f64)>,
    /// Fairness of the trained classifier on the perturbed training data.
    pub train_fairness_perturbed: Vec<(String, f64)>,
    pub feasible: bool,
    pub flips: usize,
    pub theta: Vec<f64>,
    pub use_protected: bool,
    /// Wall time is diagnostics only; it is never serialized so reports stay
    /// byte-identical across reruns.
    #[serde(skip)]
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub metric: String,
    pub mean: f64,
    pub std_dev: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub stderr_accuracy: f64,
    pub fairness: Vec<MetricAggregate>,
    pub feasible_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub config: ExperimentConfig,
    pub trial_seeds: Vec<u64>,
    pub rows: Vec<TrialRow>,
    pub aggregate: Aggregate,
}

fn mean_std(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt(), var.sqrt() / n.sqrt())
}

/// Materialize the base dataset for an experiment.
pub fn load_base_dataset(source: &DataSource) -> Result<Dataset> {
    match source {
        DataSource::Synthetic(cfg) => generate_synthetic(cfg),
        DataSource::Csv { path, label_column, group_column } => {
            Ok(load_csv(path, label_column, group_column)?.0)
        }
        DataSource::FamilyA { c, alpha, dist, n } => {
            let dists = build_family_a(*c, *alpha)?;
            let idx = dist.checked_sub(1).filter(|&i| i < 3).ok_or_else(|| {
                Error::InvalidParameter("family-a dist index must be 1, 2 or 3".into())
            })?;
            dists[idx].sample(*n, 0)
        }
    }
}

fn solver_config(cfg: &ExperimentConfig, seed: u64) -> SolverConfig {
    SolverConfig {
        max_iters: cfg.max_iters,
        restarts: cfg.restarts,
        temperature: cfg.temperature,
        seed,
        ..Default::default()
    }
}

fn perturb_train(
    cfg: &ExperimentConfig,
    train: &Dataset,
    fstar: Option<&LinearClassifier>,
    seed: u64,
) -> Result<(Dataset, usize)> {
    match &cfg.adversary {
        AdversarySpec::None => Ok((train.clone(), 0)),
        AdversarySpec::Targeted { outcome, source_group, target_group } => {
            let fstar = fstar.expect("targeted adversary requires fstar");
            let rec = perturb_targeted(
                train,
                cfg.eta,
                *outcome,
                fstar,
                *source_group,
                *target_group,
                seed,
            )?;
            Ok((rec.perturbed.clone(), rec.actual_flips()))
        }
        AdversarySpec::Flip { rates } => {
            let rec = perturb_flip(train, rates, seed)?;
            Ok((rec.perturbed.clone(), rec.actual_flips()))
        }
        AdversarySpec::PRestricted { matrix } => {
            let rec = perturb_p_restricted(train, &FlipMatrix::new(matrix.clone())?, seed)?;
            Ok((rec.perturbed.clone(), rec.actual_flips()))
        }
        AdversarySpec::Coupling { source_dist, target_dist } => {
            let (c, alpha) = match &cfg.data {
                DataSource::FamilyA { c, alpha, .. } => (*c, *alpha),
                _ => {
                    return Err(Error::InvalidParameter(
                        "coupling adversary requires family-a data".into(),
                    ))
                }
            };
            let dists = build_family_a(c, alpha)?;
            let source = &dists[source_dist - 1];
            let target = &dists[target_dist - 1];
            let rec = perturb_tv_coupling(train, source, target, cfg.eta, seed)?;
            Ok((rec.perturbed.clone(), rec.actual_flips()))
        }
        AdversarySpec::Nasty => {
            let fstar = fstar.expect("nasty adversary requires fstar");
            let rec = perturb_nasty_labels(train, cfg.eta, fstar, seed)?;
            Ok((rec.perturbed.clone(), rec.actual_flips()))
        }
    }
}

fn fit_variant(
    cfg: &ExperimentConfig,
    perturbed: &Dataset,
    specs: &[MetricSpec],
    solver_cfg: &SolverConfig,
) -> Result<SolveResult> {
    let primary = &specs[0];
    // The robust thresholds deflate toward vacuity as the smallest group
    // mass estimate approaches eta + delta; when a trial's estimates cross
    // that boundary the limit program has no active constraints, so the
    // unconstrained fit is its exact solution.
    let heuristic = || {
        let built = match &cfg.lambda_override {
            Some(lambda) => RobustParams::with_lambda(
                perturbed,
                primary,
                lambda.clone(),
                cfg.eta,
                cfg.tau,
                cfg.delta,
            ),
            None => RobustParams::heuristic(perturbed, primary, cfg.eta, cfg.tau, cfg.delta),
        };
        match built {
            Ok(params) => Ok(Some(params)),
            Err(Error::AssumptionViolated { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    match cfg.solver {
        SolverVariant::Uncons => fit_unconstrained(perturbed, solver_cfg),
        SolverVariant::TargetFair => fit_target_fair(perturbed, primary, cfg.tau, solver_cfg),
        SolverVariant::ErrTol => match heuristic()? {
            Some(params) => fit_err_tolerant(perturbed, primary, &params, solver_cfg),
            None => fit_unconstrained(perturbed, solver_cfg),
        },
        SolverVariant::ErrTolPlus => match heuristic()? {
            Some(params) => fit_err_tolerant_plus(perturbed, primary, &params, solver_cfg),
            None => fit_unconstrained(perturbed, solver_cfg),
        },
        SolverVariant::General => match heuristic()? {
            Some(params) => fit_general_err_tolerant(perturbed, specs, &params, solver_cfg),
            None => fit_unconstrained(perturbed, solver_cfg),
        },
        SolverVariant::Reduced => match heuristic()? {
            Some(params) => fit_reduced(perturbed, primary, &params, cfg.alpha, solver_cfg),
            None => fit_unconstrained(perturbed, solver_cfg),
        },
    }
}

/// The dataset a trial works on: generated sources are redrawn under the
/// trial seed, so every trial is an independent draw of data and split;
/// ingested files are fixed and only the split varies.
fn trial_dataset(cfg: &ExperimentConfig, base: Option<&Dataset>, seed: u64) -> Result<Dataset> {
    match &cfg.data {
        DataSource::Synthetic(s) => generate_synthetic(&SyntheticConfig { seed, ..s.clone() }),
        DataSource::FamilyA { c, alpha, dist, n } => {
            let dists = build_family_a(*c, *alpha)?;
            dists[*dist - 1].sample(*n, seed)
        }
        DataSource::Csv { .. } => Ok(base.expect("csv base loaded by driver").clone()),
    }
}

/// Run one trial of the protocol.
pub fn run_trial(cfg: &ExperimentConfig, base: Option<&Dataset>, trial: usize) -> Result<TrialRow> {
    let started = Instant::now();
    let seed = derive_trial_seed(cfg.seed, trial);
    let specs = cfg.metric_specs()?;
    let data = trial_dataset(cfg, base, seed)?;
    let (train, test) = split_train_test(&data, cfg.train_fraction, seed)?;

    let fstar = if cfg.adversary.needs_fstar() {
        let result = fit_target_fair(&train, &specs[0], cfg.tau, &solver_config(cfg, seed))?;
        Some(result.classifier)
    } else {
        None
    };

    let (perturbed, flips) = perturb_train(cfg, &train, fstar.as_ref(), seed)?;
    let result = fit_variant(cfg, &perturbed, &specs, &solver_config(cfg, seed))?;

    let test_preds = result.classifier.predict_all_hard(&test)?;
    let train_preds = result.classifier.predict_all_hard(&perturbed)?;
    let test_accuracy = 1.0 - empirical_error(&test, &test_preds)?;
    let mut test_fairness = Vec::new();
    let mut train_fairness = Vec::new();
    for (name, spec) in cfg.metrics.iter().zip(&specs) {
        test_fairness.push((name.clone(), fairness_of(&test, &test_preds, spec)?));
        train_fairness.push((name.clone(), fairness_of(&perturbed, &train_preds, spec)?));
    }

    Ok(TrialRow {
        trial,
        seed,
        test_accuracy,
        test_fairness,
        train_fairness_perturbed: train_fairness,
        feasible: result.feasible,
        flips,
        theta: result.classifier.theta.clone(),
        use_protected: result.classifier.use_protected,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// Run every trial (in parallel up to `cfg.jobs`) and aggregate.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<TrialReport> {
    cfg.validate()?;
    let base = match &cfg.data {
        DataSource::Csv { .. } => Some(load_base_dataset(&cfg.data)?),
        _ => None,
    };
    let base_ref = base.as_ref();
    let rows: Result<Vec<TrialRow>> = if cfg.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| {
            (0..cfg.trials)
                .into_par_iter()
                .map(|t| run_trial(cfg, base_ref, t))
                .collect()
        })
    } else {
        (0..cfg.trials).map(|t| run_trial(cfg, base_ref, t)).collect()
    };
    let rows = rows?;

    let accs: Vec<f64> = rows.iter().map(|r| r.test_accuracy).collect();
    let (mean_accuracy, std_accuracy, stderr_accuracy) = mean_std(&accs);
    let fairness = cfg
        .metrics
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let vals: Vec<f64> = rows.iter().map(|r| r.test_fairness[i].1).collect();
            let (mean, std_dev, std_err) = mean_std(&vals);
            MetricAggregate { metric: name.clone(), mean, std_dev, std_err }
        })
        .collect();
    let feasible_fraction =
        rows.iter().filter(|r| r.feasible).count() as f64 / rows.len() as f64;

    Ok(TrialReport {
        trial_seeds: rows.iter().map(|r| r.seed).collect(),
        aggregate: Aggregate {
            mean_accuracy,
            std_accuracy,
            stderr_accuracy,
            fairness,
            feasible_fraction,
        },
        rows,
        config: cfg.clone(),
    })
}

/// One sweep axis value set; any subset of the knobs may vary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub tau: Option<f64>,
    pub eta: Option<f64>,
    pub group_fraction: Option<f64>,
}

impl GridPoint {
    fn apply(&self, cfg: &ExperimentConfig) -> Result<ExperimentConfig> {
        let mut out = cfg.clone();
        if let Some(tau) = self.tau {
            out.tau = tau;
        }
        if let Some(eta) = self.eta {
            out.eta = eta;
        }
        if let Some(frac) = self.group_fraction {
            match &mut out.data {
                DataSource::Synthetic(s) => {
                    if s.group_fractions.len() != 2 {
                        return Err(Error::InvalidParameter(
                            "group-fraction sweeps need two groups".into(),
                        ));
                    }
                    s.group_fractions = vec![frac, 1.0 - frac];
                }
                _ => {
                    return Err(Error::InvalidParameter(
                        "group-fraction sweeps need synthetic data".into(),
                    ))
                }
            }
        }
        Ok(out)
    }
}

/// Build the cross product of the requested axes.
pub fn build_grid(
    taus: &[f64],
    etas: &[f64],
    group_fractions: &[f64],
) -> Result<Vec<GridPoint>> {
    let opt = |v: &[f64]| -> Vec<Option<f64>> {
        if v.is_empty() {
            vec![None]
        } else {
            v.iter().map(|&x| Some(x)).collect()
        }
    };
    let mut grid = Vec::new();
    for &tau in &opt(taus) {
        for &eta in &opt(etas) {
            for &frac in &opt(group_fractions) {
                grid.push(GridPoint { tau, eta, group_fraction: frac });
            }
        }
    }
    if grid.len() == 1 && taus.is_empty() && etas.is_empty() && group_fractions.is_empty() {
        return Err(Error::InvalidParameter("empty sweep grid".into()));
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub points: Vec<(GridPoint, TrialReport)>,
}

impl SweepReport {
    /// Flat CSV of (grid point, mean accuracy, per-metric mean fairness and
    /// standard errors), one row per grid point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,eta,group_fraction,mean_acc,stderr_acc");
        if let Some((_, first)) = self.points.first() {
            for agg in &first.aggregate.fairness {
                out.push_str(&format!(",mean_{m},stderr_{m}", m = agg.metric));
            }
        }
        out.push('\n');
        for (point, report) in &self.points {
            let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
            out.push_str(&format!(
                "{},{},{},{},{}",
                fmt(point.tau),
                fmt(point.eta),
                fmt(point.group_fraction),
                report.aggregate.mean_accuracy,
                report.aggregate.stderr_accuracy,
            ));
            for agg in &report.aggregate.fairness {
                out.push_str(&format!(",{},{}", agg.mean, agg.std_err));
            }
            out.push('\n');
        }
        out
    }
}

/// Run one experiment per grid point.
pub fn sweep(cfg: &ExperimentConfig, grid: &[GridPoint]) -> Result<SweepReport> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty sweep grid".into()));
    }
    let mut points = Vec::with_capacity(grid.len());
    for point in grid {
        let run_cfg = point.apply(cfg)?;
        points.push((point.clone(), run_experiment(&run_cfg)?));
    }
    Ok(SweepReport { points })
}
