//! Experiment configuration: data source, adversary, solver variant, and
//! the shared fairness knobs.

use fairguard::adversary::TargetKind;
use fairguard::data::SyntheticConfig;
use fairguard::error::{Error, Result};
use fairguard::metrics::MetricSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum DataSource {
    Synthetic(SyntheticConfig),
    Csv { path: String, label_column: String, group_column: String },
    /// Samples from one member of the three-point lower-bound family; the
    /// only source the coupling adversary accepts.
    FamilyA { c: f64, alpha: f64, dist: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AdversarySpec {
    None,
    Targeted { outcome: TargetKind, source_group: usize, target_group: usize },
    Flip { rates: Vec<f64> },
    PRestricted { matrix: Vec<Vec<f64>> },
    /// Disguise family-A member `source_dist` as `target_dist`.
    Coupling { source_dist: usize, target_dist: usize },
    Nasty,
}

impl AdversarySpec {
    /// Whether this adversary trains a reference classifier on the clean
    /// training split before perturbing.
    pub fn needs_fstar(&self) -> bool {
        matches!(self, AdversarySpec::Targeted { .. } | AdversarySpec::Nasty)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverVariant {
    Uncons,
    TargetFair,
    ErrTol,
    ErrTolPlus,
    General,
    Reduced,
}

impl SolverVariant {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "uncons" => Ok(SolverVariant::Uncons),
            "target-fair" => Ok(SolverVariant::TargetFair),
            "err-tol" => Ok(SolverVariant::ErrTol),
            "err-tol-plus" => Ok(SolverVariant::ErrTolPlus),
            "general" => Ok(SolverVariant::General),
            "reduced" => Ok(SolverVariant::Reduced),
            other => Err(Error::InvalidParameter(format!("unknown solver {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub adversary: AdversarySpec,
    pub solver: SolverVariant,
    /// Metric names; the first is the primary metric used by the adversary
    /// and the robust programs, the rest only matter for `general`.
    pub metrics: Vec<String>,
    pub tau: f64,
    pub eta: f64,
    pub delta: f64,
    /// Interval-reduction granularity (solver `reduced`).
    pub alpha: f64,
    /// Explicit per-group joint-mass lower bounds; overrides the label
    /// plug-in estimate (required for metrics it cannot estimate).
    pub lambda_override: Option<Vec<f64>>,
    pub train_fraction: f64,
    pub trials: usize,
    pub seed: u64,
    pub jobs: usize,
    pub max_iters: usize,
    pub restarts: usize,
    pub temperature: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.metrics.is_empty() {
            return Err(Error::InvalidParameter("need at least one metric".into()));
        }
        for name in &self.metrics {
            MetricSpec::by_name(name)?;
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("need at least one trial".into()));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidParameter("eta outside [0,1]".into()));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::InvalidParameter("tau outside [0,1]".into()));
        }
        if matches!(self.adversary, AdversarySpec::Coupling { .. })
            && !matches!(self.data, DataSource::FamilyA { .. })
        {
            return Err(Error::InvalidParameter(
                "the coupling adversary requires family-a data".into(),
            ));
        }
        Ok(())
    }

    pub fn metric_specs(&self) -> Result<Vec<MetricSpec>> {
        self.metrics.iter().map(|n| MetricSpec::by_name(n)).collect()
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: DataSource::Synthetic(SyntheticConfig::default()),
            adversary: AdversarySpec::None,
            solver: SolverVariant::Uncons,
            metrics: vec!["sr".into()],
            tau: 0.8,
            eta: 0.0,
            delta: 0.01,
            alpha: 0.05,
            lambda_override: None,
            train_fraction: 0.7,
            trials: 1,
            seed: 0,
            jobs: 1,
            max_iters: 1000,
            restarts: 10,
            temperature: 1.0,
        }
    }
}
