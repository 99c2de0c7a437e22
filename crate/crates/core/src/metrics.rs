//! Datasets and exact empirical computation of linear-fractional group
//! metrics.
//!
//! A metric is given by two events over (prediction, label). The per-group
//! performance is `q_l = Pr[E | E', Z=l]` and the fairness value is the
//! min/max ratio of the `q_l`. All probabilities are integer counts divided
//! once at the end, so small instances are bit-reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One labeled sample with a protected attribute.
///
/// Groups are 1-indexed; raw data with other codes is remapped at ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    /// Binary label in {0, 1}.
    pub label: u8,
    /// Protected attribute in 1..=p.
    pub group: usize,
}

impl Sample {
    pub fn new(features: Vec<f64>, label: u8, group: usize) -> Self {
        Sample { features, label, group }
    }
}

/// An ordered collection of samples over `p` protected groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    samples: Vec<Sample>,
    p: usize,
    dim: usize,
}

impl Dataset {
    /// Validating constructor for ingested data: every group in 1..=p must
    /// appear at least once, labels must be binary, features finite and of
    /// equal dimension.
    pub fn new(samples: Vec<Sample>, p: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if p == 0 {
            return Err(Error::InvalidParameter("p must be >= 1".into()));
        }
        let dim = samples[0].features.len();
        let mut seen = vec![false; p];
        for s in &samples {
            if s.features.len() != dim {
                return Err(Error::LengthMismatch { expected: dim, got: s.features.len() });
            }
            if s.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("non-finite feature".into()));
            }
            if s.label > 1 {
                return Err(Error::InvalidParameter(format!("label {} not in {{0,1}}", s.label)));
            }
            if s.group == 0 || s.group > p {
                return Err(Error::InvalidGroup { group: s.group, p });
            }
            seen[s.group - 1] = true;
        }
        if let Some(l) = seen.iter().position(|&b| !b) {
            return Err(Error::EmptyGroup { group: l + 1 });
        }
        Ok(Dataset { samples, p, dim })
    }

    /// Constructor for adversarially perturbed data. Keeps the declared `p`
    /// even when a group has been emptied by the perturbation; basic sample
    /// invariants are still enforced.
    pub fn with_groups(samples: Vec<Sample>, p: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let dim = samples[0].features.len();
        for s in &samples {
            if s.features.len() != dim {
                return Err(Error::LengthMismatch { expected: dim, got: s.features.len() });
            }
            if s.label > 1 || s.group == 0 || s.group > p {
                return Err(Error::InvalidGroup { group: s.group, p });
            }
        }
        Ok(Dataset { samples, p, dim })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of protected groups.
    pub fn num_groups(&self) -> usize {
        self.p
    }

    /// Feature dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> Vec<u8> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Count of samples in group `l` (1-indexed).
    pub fn group_count(&self, group: usize) -> usize {
        self.samples.iter().filter(|s| s.group == group).count()
    }
}

/// A linear-fractional metric: two boolean events over (prediction, label).
///
/// `q_l = Pr[E | E', Z=l]`. The canonical metrics:
/// statistical rate `E = (pred=1), E' = always`;
/// false-positive rate `E = (pred=1), E' = (label=0)`;
/// true-positive rate `E = (pred=1), E' = (label=1)`;
/// false-discovery rate `E = (label=0), E' = (pred=1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    /// Indexed `e_mask[pred][label]`.
    pub e_mask: [[bool; 2]; 2],
    /// Indexed `e_prime_mask[pred][label]`; must not be all-false.
    pub e_prime_mask: [[bool; 2]; 2],
    pub name: String,
}

impl MetricSpec {
    pub fn new(e_mask: [[bool; 2]; 2], e_prime_mask: [[bool; 2]; 2], name: &str) -> Result<Self> {
        if e_prime_mask.iter().flatten().all(|&b| !b) {
            return Err(Error::InvalidParameter("conditioning event is empty".into()));
        }
        Ok(MetricSpec { e_mask, e_prime_mask, name: name.to_string() })
    }

    /// Statistical rate: parity of positive-prediction rates.
    pub fn statistical_rate() -> Self {
        MetricSpec {
            e_mask: [[false, false], [true, true]],
            e_prime_mask: [[true, true], [true, true]],
            name: "sr".into(),
        }
    }

    /// False-positive rate: `Pr[pred=1 | label=0, Z=l]`.
    pub fn false_positive_rate() -> Self {
        MetricSpec {
            e_mask: [[false, false], [true, true]],
            e_prime_mask: [[true, false], [true, false]],
            name: "fpr".into(),
        }
    }

    /// True-positive rate: `Pr[pred=1 | label=1, Z=l]`.
    pub fn true_positive_rate() -> Self {
        MetricSpec {
            e_mask: [[false, false], [true, true]],
            e_prime_mask: [[false, true], [false, true]],
            name: "tpr".into(),
        }
    }

    /// False-discovery rate: `Pr[label=0 | pred=1, Z=l]`.
    pub fn false_discovery_rate() -> Self {
        MetricSpec {
            e_mask: [[true, false], [true, false]],
            e_prime_mask: [[false, false], [true, true]],
            name: "fdr".into(),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "sr" => Ok(Self::statistical_rate()),
            "fpr" => Ok(Self::false_positive_rate()),
            "tpr" => Ok(Self::true_positive_rate()),
            "fdr" => Ok(Self::false_discovery_rate()),
            other => Err(Error::InvalidParameter(format!("unknown metric {other:?}"))),
        }
    }

    #[inline]
    pub fn e(&self, pred: u8, label: u8) -> bool {
        self.e_mask[pred as usize][label as usize]
    }

    #[inline]
    pub fn e_prime(&self, pred: u8, label: u8) -> bool {
        self.e_prime_mask[pred as usize][label as usize]
    }
}

/// Per-group performances with their defining event masses.
///
/// `q[l]` is `None` exactly when the conditioning event has zero mass in
/// group `l+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceTable {
    pub q: Vec<Option<f64>>,
    pub numerators: Vec<f64>,
    pub denominators: Vec<f64>,
}

fn check_lengths(dataset: &Dataset, predictions: &[u8]) -> Result<()> {
    if predictions.len() != dataset.len() {
        return Err(Error::LengthMismatch { expected: dataset.len(), got: predictions.len() });
    }
    Ok(())
}

/// Fraction of samples where the prediction disagrees with the label.
pub fn empirical_error(dataset: &Dataset, predictions: &[u8]) -> Result<f64> {
    check_lengths(dataset, predictions)?;
    let wrong = dataset
        .samples()
        .iter()
        .zip(predictions)
        .filter(|(s, &p)| s.label != p)
        .count();
    Ok(wrong as f64 / dataset.len() as f64)
}

/// Mass of the joint event `E(f) and E'(f) and Z = group`.
pub fn joint_event_mass(
    dataset: &Dataset,
    predictions: &[u8],
    spec: &MetricSpec,
    group: usize,
) -> Result<f64> {
    check_lengths(dataset, predictions)?;
    if group == 0 || group > dataset.num_groups() {
        return Err(Error::InvalidGroup { group, p: dataset.num_groups() });
    }
    let count = dataset
        .samples()
        .iter()
        .zip(predictions)
        .filter(|(s, &pr)| s.group == group && spec.e(pr, s.label) && spec.e_prime(pr, s.label))
        .count();
    Ok(count as f64 / dataset.len() as f64)
}

/// Per-group performances `q_l = Pr[E | E', Z=l]` as exact count ratios.
pub fn group_performance(
    dataset: &Dataset,
    predictions: &[u8],
    spec: &MetricSpec,
) -> Result<PerformanceTable> {
    check_lengths(dataset, predictions)?;
    let p = dataset.num_groups();
    let n = dataset.len() as f64;
    let mut num = vec![0usize; p];
    let mut den = vec![0usize; p];
    for (s, &pr) in dataset.samples().iter().zip(predictions) {
        if spec.e_prime(pr, s.label) {
            den[s.group - 1] += 1;
            if spec.e(pr, s.label) {
                num[s.group - 1] += 1;
            }
        }
    }
    let q = num
        .iter()
        .zip(&den)
        .map(|(&nu, &de)| if de == 0 { None } else { Some(nu as f64 / de as f64) })
        .collect();
    Ok(PerformanceTable {
        q,
        numerators: num.iter().map(|&c| c as f64 / n).collect(),
        denominators: den.iter().map(|&c| c as f64 / n).collect(),
    })
}

/// Min/max ratio of the defined per-group performances.
///
/// Conventions for degenerate tables: an undefined group makes the value 0
/// (maximally unfair), unless the metric is vacuous on the whole dataset
/// (all groups undefined, or every defined performance is 0), which gives 1.
pub fn fairness_value(table: &PerformanceTable) -> f64 {
    let defined: Vec<f64> = table.q.iter().flatten().copied().collect();
    if defined.is_empty() {
        return 1.0;
    }
    let max = defined.iter().cloned().fold(f64::MIN, f64::max);
    if max == 0.0 {
        return 1.0;
    }
    if defined.len() < table.q.len() {
        return 0.0;
    }
    let min = defined.iter().cloned().fold(f64::MAX, f64::min);
    min / max
}

/// Convenience: fairness value of predictions under a metric.
pub fn fairness_of(dataset: &Dataset, predictions: &[u8], spec: &MetricSpec) -> Result<f64> {
    Ok(fairness_value(&group_performance(dataset, predictions, spec)?))
}
