//! Command-line front end: generate or ingest data, apply adversaries,
//! train solver variants over seeded trials, evaluate classifiers, sweep
//! fairness parameters, and run the theory verification suite.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fairguard::adversary::{
    perturb_flip, perturb_nasty_labels, perturb_p_restricted, perturb_tv_coupling,
    perturb_targeted, FlipMatrix, PerturbationRecord, TargetKind,
};
use fairguard::data::{generate_synthetic, save_csv, SyntheticConfig};
use fairguard::hypothesis::LinearClassifier;
use fairguard::metrics::{empirical_error, fairness_of, group_performance, MetricSpec};
use fairguard::solver::{fit_target_fair, SolverConfig};
use fairguard::theory::{build_family_a, build_family_b, build_family_c};
use fairguard_cli::{
    build_grid, run_experiment, sweep, verify_theory, AdversarySpec, DataSource,
    ExperimentConfig, SolverVariant, TheoryParams,
};

#[derive(Parser)]
#[command(name = "fairguard", about = "Fair classification under adversarial attribute noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// CSV dataset path (headered; features numeric).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long, default_value = "group")]
    group_column: String,
    /// Use the built-in synthetic generator instead of a CSV.
    #[arg(long)]
    synthetic: bool,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Fraction of samples in group 1 (synthetic data).
    #[arg(long)]
    group_fraction: Option<f64>,
    /// Sample from the lower-bound family A: requires --family-c-param and
    /// --family-alpha; --family-dist picks the member.
    #[arg(long)]
    family_a: bool,
    #[arg(long, default_value_t = 0.3)]
    family_c_param: f64,
    #[arg(long, default_value_t = 0.1)]
    family_alpha: f64,
    #[arg(long, default_value_t = 1)]
    family_dist: usize,
}

impl DataArgs {
    fn to_source(&self) -> Result<DataSource, String> {
        if self.family_a {
            return Ok(DataSource::FamilyA {
                c: self.family_c_param,
                alpha: self.family_alpha,
                dist: self.family_dist,
                n: self.n,
            });
        }
        if let Some(path) = &self.data {
            return Ok(DataSource::Csv {
                path: path.display().to_string(),
                label_column: self.label_column.clone(),
                group_column: self.group_column.clone(),
            });
        }
        let mut cfg = SyntheticConfig { n: self.n, ..Default::default() };
        if let Some(frac) = self.group_fraction {
            cfg.group_fractions = vec![frac, 1.0 - frac];
        }
        Ok(DataSource::Synthetic(cfg))
    }
}

#[derive(Args, Clone)]
struct AdversaryArgs {
    /// Adversary kind: tn, fn, fp, flip, prh, coupling, nasty, or none.
    #[arg(long, default_value = "none")]
    adversary: String,
    #[arg(long, default_value_t = 1)]
    source_group: usize,
    #[arg(long, default_value_t = 2)]
    target_group: usize,
    /// Per-group flip rates for the stochastic adversary, e.g. "0.035,0.035".
    #[arg(long)]
    flip_rates: Option<String>,
    /// Row-stochastic flip matrix, rows separated by ';', e.g. "1,0;0.05,0.95".
    #[arg(long)]
    p_matrix: Option<String>,
    /// Coupling source/target members of family A.
    #[arg(long, default_value_t = 1)]
    coupling_source: usize,
    #[arg(long, default_value_t = 2)]
    coupling_target: usize,
}

impl AdversaryArgs {
    fn to_spec(&self) -> Result<AdversarySpec, String> {
        let parse_rates = |s: &Option<String>| -> Result<Vec<f64>, String> {
            s.as_deref()
                .ok_or_else(|| "--flip-rates required for the flip adversary".to_string())?
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| e.to_string()))
                .collect()
        };
        match self.adversary.as_str() {
            "none" => Ok(AdversarySpec::None),
            "tn" => Ok(AdversarySpec::Targeted {
                outcome: TargetKind::Tn,
                source_group: self.source_group,
                target_group: self.target_group,
            }),
            "fn" => Ok(AdversarySpec::Targeted {
                outcome: TargetKind::Fn,
                source_group: self.source_group,
                target_group: self.target_group,
            }),
            "fp" => Ok(AdversarySpec::Targeted {
                outcome: TargetKind::Fp,
                source_group: self.source_group,
                target_group: self.target_group,
            }),
            "flip" => Ok(AdversarySpec::Flip { rates: parse_rates(&self.flip_rates)? }),
            "prh" => {
                let text = self
                    .p_matrix
                    .as_deref()
                    .ok_or_else(|| "--p-matrix required for the prh adversary".to_string())?;
                let matrix: Result<Vec<Vec<f64>>, String> = text
                    .split(';')
                    .map(|row| {
                        row.split(',')
                            .map(|v| v.trim().parse::<f64>().map_err(|e| e.to_string()))
                            .collect()
                    })
                    .collect();
                Ok(AdversarySpec::PRestricted { matrix: matrix? })
            }
            "coupling" => Ok(AdversarySpec::Coupling {
                source_dist: self.coupling_source,
                target_dist: self.coupling_target,
            }),
            "nasty" => Ok(AdversarySpec::Nasty),
            other => Err(format!("unknown adversary {other:?}")),
        }
    }
}

#[derive(Args, Clone)]
struct CommonArgs {
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    #[arg(long, default_value_t = 0.8)]
    tau: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// Interval-reduction granularity.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Per-group joint-mass lower bounds, e.g. "0.1,0.1"; overrides the
    /// label plug-in estimate.
    #[arg(long)]
    lambda: Option<String>,
    /// Metric name (sr, fpr, tpr, fdr); repeatable for the general solver.
    #[arg(long = "metric", default_values_t = [String::from("sr")])]
    metrics: Vec<String>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Seed; falls back to the FAIRGUARD_SEED environment variable, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn seed(&self) -> u64 {
        self.seed
            .or_else(|| std::env::var("FAIRGUARD_SEED").ok().and_then(|v| v.parse().ok()))
            .unwrap_or(0)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset (synthetic mixture or a theory-family sample) as CSV.
    GenData {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Sample from family B (lambda, c) instead.
        #[arg(long)]
        family_b: bool,
        /// Sample from family C (P or Q by --family-dist 1/2) instead.
        #[arg(long)]
        family_c: bool,
        #[arg(long, default_value_t = 0.2)]
        family_lambda: f64,
        #[arg(long, default_value_t = 0.2)]
        family_eta: f64,
    },
    /// Apply an adversary to a dataset and write the perturbation record.
    Perturb {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        adversary: AdversaryArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the trial protocol for one solver variant and write the report.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        adversary: AdversaryArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// uncons, target-fair, err-tol, err-tol-plus, general, or reduced.
        #[arg(long, default_value = "err-tol-plus")]
        solver: String,
    },
    /// Evaluate a trained classifier on a dataset with hard indicators.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Classifier JSON (as produced by `train`, field `theta`).
        #[arg(long)]
        model: PathBuf,
    },
    /// Sweep tau / eta / group fractions and write a summary CSV.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        adversary: AdversaryArgs,
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "err-tol-plus")]
        solver: String,
        /// Comma-separated tau values.
        #[arg(long)]
        tau_grid: Option<String>,
        /// Comma-separated eta values.
        #[arg(long)]
        eta_grid: Option<String>,
        /// Comma-separated group-1 fractions.
        #[arg(long)]
        group_fraction_grid: Option<String>,
    },
    /// Brute-force verification of the impossibility constructions.
    VerifyTheory {
        #[command(flatten)]
        common: CommonArgs,
        /// JSON file overriding the default family parameters.
        #[arg(long)]
        params: Option<PathBuf>,
    },
}

fn parse_grid(text: &Option<String>) -> Result<Vec<f64>, String> {
    match text {
        None => Ok(vec![]),
        Some(s) => s
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| e.to_string()))
            .collect(),
    }
}

fn write_output(out: &Option<PathBuf>, contents: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, contents),
        None => {
            println!("{contents}");
            Ok(())
        }
    }
}

fn experiment_config(
    data: &DataArgs,
    adversary: &AdversaryArgs,
    common: &CommonArgs,
    solver: &str,
) -> Result<ExperimentConfig, String> {
    let lambda_override = match &common.lambda {
        None => None,
        Some(text) => Some(
            text.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| e.to_string()))
                .collect::<Result<Vec<f64>, String>>()?,
        ),
    };
    Ok(ExperimentConfig {
        data: data.to_source()?,
        adversary: adversary.to_spec()?,
        solver: SolverVariant::parse(solver).map_err(|e| e.to_string())?,
        metrics: common.metrics.clone(),
        tau: common.tau,
        eta: common.eta,
        delta: common.delta,
        alpha: common.alpha,
        lambda_override,
        trials: common.trials,
        seed: common.seed(),
        jobs: common.jobs,
        ..Default::default()
    })
}

fn run() -> Result<ExitCode, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::GenData { data, common, family_b, family_c, family_lambda, family_eta } => {
            let seed = common.seed();
            let dataset = if family_b {
                let dists = build_family_b(family_lambda, data.family_c_param)
                    .map_err(|e| e.to_string())?;
                dists[data.family_dist - 1].sample(data.n, seed).map_err(|e| e.to_string())?
            } else if family_c {
                let dists = build_family_c(family_eta).map_err(|e| e.to_string())?;
                dists[data.family_dist - 1].sample(data.n, seed).map_err(|e| e.to_string())?
            } else if data.family_a {
                let dists = build_family_a(data.family_c_param, data.family_alpha)
                    .map_err(|e| e.to_string())?;
                dists[data.family_dist - 1].sample(data.n, seed).map_err(|e| e.to_string())?
            } else {
                let mut cfg = SyntheticConfig { n: data.n, seed, ..Default::default() };
                if let Some(frac) = data.group_fraction {
                    cfg.group_fractions = vec![frac, 1.0 - frac];
                }
                generate_synthetic(&cfg).map_err(|e| e.to_string())?
            };
            let out = common.out.clone().ok_or("--out is required for gen-data")?;
            save_csv(&dataset, &out).map_err(|e| e.to_string())?;
            eprintln!("wrote {} samples to {}", dataset.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Perturb { data, adversary, common } => {
            let source = data.to_source()?;
            let dataset =
                fairguard_cli::runner::load_base_dataset(&source).map_err(|e| e.to_string())?;
            let seed = common.seed();
            let spec = MetricSpec::by_name(&common.metrics[0]).map_err(|e| e.to_string())?;
            let adv = adversary.to_spec()?;
            let record: PerturbationRecord = match &adv {
                AdversarySpec::None => PerturbationRecord {
                    perturbed: dataset.clone(),
                    flip_mask: vec![false; dataset.len()],
                    budget_eta: 0.0,
                    kind: "none".into(),
                    rng_seed: seed,
                },
                AdversarySpec::Targeted { outcome, source_group, target_group } => {
                    let cfg = SolverConfig { seed, ..Default::default() };
                    let fstar = fit_target_fair(&dataset, &spec, common.tau, &cfg)
                        .map_err(|e| e.to_string())?
                        .classifier;
                    perturb_targeted(
                        &dataset,
                        common.eta,
                        *outcome,
                        &fstar,
                        *source_group,
                        *target_group,
                        seed,
                    )
                    .map_err(|e| e.to_string())?
                }
                AdversarySpec::Flip { rates } => {
                    perturb_flip(&dataset, rates, seed).map_err(|e| e.to_string())?
                }
                AdversarySpec::PRestricted { matrix } => {
                    let m = FlipMatrix::new(matrix.clone()).map_err(|e| e.to_string())?;
                    perturb_p_restricted(&dataset, &m, seed).map_err(|e| e.to_string())?
                }
                AdversarySpec::Coupling { source_dist, target_dist } => {
                    let dists = build_family_a(data.family_c_param, data.family_alpha)
                        .map_err(|e| e.to_string())?;
                    perturb_tv_coupling(
                        &dataset,
                        &dists[source_dist - 1],
                        &dists[target_dist - 1],
                        common.eta,
                        seed,
                    )
                    .map_err(|e| e.to_string())?
                }
                AdversarySpec::Nasty => {
                    let cfg = SolverConfig { seed, ..Default::default() };
                    let fstar = fit_target_fair(&dataset, &spec, common.tau, &cfg)
                        .map_err(|e| e.to_string())?
                        .classifier;
                    perturb_nasty_labels(&dataset, common.eta, &fstar, seed)
                        .map_err(|e| e.to_string())?
                }
            };
            let json = serde_json::to_string_pretty(&record).map_err(|e| e.to_string())?;
            write_output(&common.out, &json).map_err(|e| e.to_string())?;
            eprintln!("{} flips under budget eta = {}", record.actual_flips(), record.budget_eta);
            Ok(ExitCode::SUCCESS)
        }
        Command::Train { data, adversary, common, solver } => {
            let cfg = experiment_config(&data, &adversary, &common, &solver)?;
            let report = match run_experiment(&cfg) {
                Ok(report) => report,
                Err(e) => {
                    // flush the failure context so a long run is not lost
                    // silently
                    let partial = serde_json::json!({
                        "error": e.to_string(),
                        "config": &cfg,
                    });
                    let _ = write_output(&common.out, &partial.to_string());
                    return Err(e.to_string());
                }
            };
            let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
            write_output(&common.out, &json).map_err(|e| e.to_string())?;
            eprintln!(
                "mean accuracy {:.4}, mean {} {:.4} over {} trial(s)",
                report.aggregate.mean_accuracy,
                report.aggregate.fairness[0].metric,
                report.aggregate.fairness[0].mean,
                cfg.trials
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate { data, common, model } => {
            let source = data.to_source()?;
            let dataset =
                fairguard_cli::runner::load_base_dataset(&source).map_err(|e| e.to_string())?;
            let text = std::fs::read_to_string(&model).map_err(|e| e.to_string())?;
            let clf: LinearClassifier = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            let preds = clf.predict_all_hard(&dataset).map_err(|e| e.to_string())?;
            let mut lines = Vec::new();
            let accuracy =
                1.0 - empirical_error(&dataset, &preds).map_err(|e| e.to_string())?;
            lines.push(format!("\"accuracy\": {accuracy}"));
            for name in &common.metrics {
                let spec = MetricSpec::by_name(name).map_err(|e| e.to_string())?;
                let omega =
                    fairness_of(&dataset, &preds, &spec).map_err(|e| e.to_string())?;
                let table =
                    group_performance(&dataset, &preds, &spec).map_err(|e| e.to_string())?;
                let qs: Vec<String> = table
                    .q
                    .iter()
                    .map(|v| v.map_or("null".into(), |x| format!("{x}")))
                    .collect();
                lines.push(format!("\"{name}\": {omega}"));
                lines.push(format!("\"{name}_per_group\": [{}]", qs.join(", ")));
            }
            let json = format!("{{\n  {}\n}}", lines.join(",\n  "));
            write_output(&common.out, &json).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            data,
            adversary,
            common,
            solver,
            tau_grid,
            eta_grid,
            group_fraction_grid,
        } => {
            let cfg = experiment_config(&data, &adversary, &common, &solver)?;
            let grid = build_grid(
                &parse_grid(&tau_grid)?,
                &parse_grid(&eta_grid)?,
                &parse_grid(&group_fraction_grid)?,
            )
            .map_err(|e| e.to_string())?;
            let report = sweep(&cfg, &grid).map_err(|e| e.to_string())?;
            write_output(&common.out, &report.to_csv()).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifyTheory { common, params } => {
            let params: TheoryParams = match params {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
                    serde_json::from_str(&text).map_err(|e| e.to_string())?
                }
                None => TheoryParams { seed: common.seed(), ..Default::default() },
            };
            let report = verify_theory(&params).map_err(|e| e.to_string())?;
            let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
            write_output(&common.out, &json).map_err(|e| e.to_string())?;
            for check in &report.checks {
                eprintln!(
                    "{} {} ({})",
                    if check.passed { "PASS" } else { "FAIL" },
                    check.name,
                    check.detail
                );
            }
            if report.all_passed {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::FAILURE)
            }
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
