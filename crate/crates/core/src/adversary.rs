//! Perturbation models: targeted attribute flips against a trained
//! classifier, independent stochastic flips, flip-count matrices, the
//! total-variation coupling that disguises one distribution as another, and
//! worst-case label noise.

use rand::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::LinearClassifier;
use crate::metrics::Dataset;
use crate::theory::FiniteDistribution;

/// Which outcome class of the reference classifier a targeted adversary
/// draws its victims from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetKind {
    /// True negatives: predicted 0, labeled 0.
    Tn,
    /// False negatives: predicted 0, labeled 1.
    Fn,
    /// False positives: predicted 1, labeled 0.
    Fp,
}

impl TargetKind {
    fn matches(self, pred: u8, label: u8) -> bool {
        match self {
            TargetKind::Tn => pred == 0 && label == 0,
            TargetKind::Fn => pred == 0 && label == 1,
            TargetKind::Fp => pred == 1 && label == 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TargetKind::Tn => "tn",
            TargetKind::Fn => "fn",
            TargetKind::Fp => "fp",
        }
    }
}

/// A perturbed dataset with its flip mask and budget accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRecord {
    pub perturbed: Dataset,
    pub flip_mask: Vec<bool>,
    pub budget_eta: f64,
    pub kind: String,
    pub rng_seed: u64,
}

impl PerturbationRecord {
    /// Number of samples actually altered.
    pub fn actual_flips(&self) -> usize {
        self.flip_mask.iter().filter(|&&b| b).count()
    }
}

/// A row-stochastic flip-count matrix: entry `(l, k)` is the fraction of
/// group `l` whose attribute is rewritten to `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipMatrix {
    rows: Vec<Vec<f64>>,
}

impl FlipMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let p = rows.len();
        if p == 0 {
            return Err(Error::InvalidParameter("empty flip matrix".into()));
        }
        for row in &rows {
            if row.len() != p {
                return Err(Error::InvalidParameter("flip matrix must be square".into()));
            }
            if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::InvalidParameter("flip matrix entries must lie in [0,1]".into()));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "flip matrix row sums to {sum}, not 1"
                )));
            }
        }
        Ok(FlipMatrix { rows })
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn entry(&self, l: usize, k: usize) -> f64 {
        self.rows[l - 1][k - 1]
    }

    /// The Hamming budget this matrix implies: `max_l sum_{k != l} P_lk`.
    pub fn implied_eta(&self) -> f64 {
        self.rows
            .iter()
            .enumerate()
            .map(|(l, row)| {
                row.iter().enumerate().filter(|&(k, _)| k != l).map(|(_, &v)| v).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

fn ceil_budget(eta: f64, n: usize) -> usize {
    (eta * n as f64).ceil() as usize
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!("eta {eta} outside [0,1]")));
    }
    Ok(())
}

/// Flip the protected attribute of the budgeted number of samples in
/// `source_group` that fall in the chosen outcome class of `fstar`,
/// preferring those furthest from the decision boundary. Ties break toward
/// the lower sample index; a short candidate pool flips everything in it.
pub fn perturb_targeted(
    dataset: &Dataset,
    eta: f64,
    kind: TargetKind,
    fstar: &LinearClassifier,
    source_group: usize,
    target_group: usize,
    seed: u64,
) -> Result<PerturbationRecord> {
    check_eta(eta)?;
    let p = dataset.num_groups();
    if source_group == 0 || source_group > p {
        return Err(Error::InvalidGroup { group: source_group, p });
    }
    if target_group == 0 || target_group > p || target_group == source_group {
        return Err(Error::InvalidGroup { group: target_group, p });
    }
    let budget = ceil_budget(eta, dataset.len());
    let mut candidates: Vec<(usize, f64)> = Vec::new();
    for (i, s) in dataset.samples().iter().enumerate() {
        if s.group != source_group {
            continue;
        }
        let score = fstar.score(s)?;
        let pred = u8::from(score >= 0.0);
        if kind.matches(pred, s.label) {
            candidates.push((i, score.abs()));
        }
    }
    // furthest from the boundary first; equal margins by lower index
    candidates.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    candidates.truncate(budget);

    let mut samples = dataset.samples().to_vec();
    let mut flip_mask = vec![false; dataset.len()];
    for &(i, _) in &candidates {
        samples[i].group = target_group;
        flip_mask[i] = true;
    }
    Ok(PerturbationRecord {
        perturbed: Dataset::with_groups(samples, p)?,
        flip_mask,
        budget_eta: eta,
        kind: kind.name().to_string(),
        rng_seed: seed,
    })
}

/// Independent per-sample attribute flips (two groups): a group-`l` sample
/// moves to the other group with probability `rates[l-1]`.
pub fn perturb_flip(dataset: &Dataset, rates: &[f64], seed: u64) -> Result<PerturbationRecord> {
    if dataset.num_groups() != 2 {
        return Err(Error::InvalidParameter("stochastic flips require exactly 2 groups".into()));
    }
    if rates.len() != 2 || rates.iter().any(|&r| !(0.0..=1.0).contains(&r)) {
        return Err(Error::InvalidParameter("need two flip rates in [0,1]".into()));
    }
    let mut rng = crate::rng::seeded(seed, crate::rng::stream::FLIP);
    let mut samples = dataset.samples().to_vec();
    let mut flip_mask = vec![false; dataset.len()];
    for (s, flag) in samples.iter_mut().zip(&mut flip_mask) {
        if rng.gen::<f64>() < rates[s.group - 1] {
            s.group = 3 - s.group;
            *flag = true;
        }
    }
    Ok(PerturbationRecord {
        perturbed: Dataset::with_groups(samples, 2)?,
        flip_mask,
        budget_eta: rates.iter().cloned().fold(0.0, f64::max),
        kind: "flip".into(),
        rng_seed: seed,
    })
}

/// Flip exactly `floor(P_lk * |G_l|)` uniformly chosen samples from group
/// `l` to group `k`, for every off-diagonal entry.
pub fn perturb_p_restricted(
    dataset: &Dataset,
    matrix: &FlipMatrix,
    seed: u64,
) -> Result<PerturbationRecord> {
    let p = dataset.num_groups();
    if matrix.size() != p {
        return Err(Error::InvalidParameter(format!(
            "flip matrix is {}x{} but dataset has {p} groups",
            matrix.size(),
            matrix.size()
        )));
    }
    let mut rng = crate::rng::seeded(seed, crate::rng::stream::P_RESTRICTED);
    let mut samples = dataset.samples().to_vec();
    let mut flip_mask = vec![false; dataset.len()];
    for l in 1..=p {
        let members: Vec<usize> = dataset
            .samples()
            .iter()
            .enumerate()
            .filter(|(_, s)| s.group == l)
            .map(|(i, _)| i)
            .collect();
        let mut available: Vec<usize> = members.clone();
        for k in 1..=p {
            if k == l {
                continue;
            }
            let count = (matrix.entry(l, k) * members.len() as f64).floor() as usize;
            for _ in 0..count.min(available.len()) {
                let pick = rng.gen_range(0..available.len());
                let idx = available.swap_remove(pick);
                samples[idx].group = k;
                flip_mask[idx] = true;
            }
        }
    }
    Ok(PerturbationRecord {
        perturbed: Dataset::with_groups(samples, p)?,
        flip_mask,
        budget_eta: matrix.implied_eta(),
        kind: "prh".into(),
        rng_seed: seed,
    })
}

/// The coupling adversary: flip each sample's attribute with probability
/// `1 - min(target(x,z)/source(x,z), 1)` so the perturbed sample looks like
/// an iid draw from `target`. If the realized flips exceed the Hamming
/// budget the original dataset is returned with an all-false mask.
///
/// Requires the construction's preconditions: two groups, equal x-marginals,
/// and labels independent of the group given x.
pub fn perturb_tv_coupling(
    dataset: &Dataset,
    source: &FiniteDistribution,
    target: &FiniteDistribution,
    eta: f64,
    seed: u64,
) -> Result<PerturbationRecord> {
    check_eta(eta)?;
    if source.num_groups != 2 || target.num_groups != 2 {
        return Err(Error::DistributionMismatch("coupling requires two groups".into()));
    }
    if source.num_x != target.num_x {
        return Err(Error::DistributionMismatch("domains differ".into()));
    }
    for x in 0..source.num_x {
        if (source.x_mass(x) - target.x_mass(x)).abs() > 1e-9 {
            return Err(Error::DistributionMismatch(format!(
                "x-marginals differ at x={x}"
            )));
        }
        for z in 1..=2 {
            let sm = source.xz_mass(x, z);
            if sm > 0.0 {
                // labels must not depend on z given x (checked on the source;
                // the target is constrained through the shared marginal)
                let y1_source = source.cell_mass(x, z, 1) / sm;
                for z2 in 1..=2 {
                    let sm2 = source.xz_mass(x, z2);
                    if sm2 > 0.0 {
                        let y1_other = source.cell_mass(x, z2, 1) / sm2;
                        if (y1_source - y1_other).abs() > 1e-9 {
                            return Err(Error::DistributionMismatch(format!(
                                "label depends on group at x={x}"
                            )));
                        }
                    }
                }
            }
        }
    }

    // keep probability per (x, z) cell
    let keep = |x: usize, z: usize| -> f64 {
        let sm = source.xz_mass(x, z);
        if sm <= 0.0 {
            1.0
        } else {
            (target.xz_mass(x, z) / sm).min(1.0)
        }
    };

    let mut rng = crate::rng::seeded(seed, crate::rng::stream::COUPLING);
    let mut samples = dataset.samples().to_vec();
    let mut flip_mask = vec![false; dataset.len()];
    for (s, flag) in samples.iter_mut().zip(&mut flip_mask) {
        let x = s
            .features
            .iter()
            .position(|&v| v == 1.0)
            .ok_or_else(|| Error::DistributionMismatch("samples are not one-hot".into()))?;
        if x >= source.num_x {
            return Err(Error::DistributionMismatch("sample outside domain".into()));
        }
        if rng.gen::<f64>() > keep(x, s.group) {
            s.group = 3 - s.group;
            *flag = true;
        }
    }
    let flips = flip_mask.iter().filter(|&&b| b).count();
    if (flips as f64) >= eta * dataset.len() as f64 {
        // over budget: hand back the original samples untouched
        return Ok(PerturbationRecord {
            perturbed: dataset.clone(),
            flip_mask: vec![false; dataset.len()],
            budget_eta: eta,
            kind: "coupling-over-budget".into(),
            rng_seed: seed,
        });
    }
    Ok(PerturbationRecord {
        perturbed: Dataset::with_groups(samples, 2)?,
        flip_mask,
        budget_eta: eta,
        kind: "coupling".into(),
        rng_seed: seed,
    })
}

/// Label-noise attack: flip the labels of the budgeted number of samples
/// that `fstar` classifies correctly with the largest margin.
pub fn perturb_nasty_labels(
    dataset: &Dataset,
    eta: f64,
    fstar: &LinearClassifier,
    seed: u64,
) -> Result<PerturbationRecord> {
    check_eta(eta)?;
    let budget = ceil_budget(eta, dataset.len());
    let mut candidates: Vec<(usize, f64)> = Vec::new();
    for (i, s) in dataset.samples().iter().enumerate() {
        let score = fstar.score(s)?;
        let pred = u8::from(score >= 0.0);
        if pred == s.label {
            candidates.push((i, score.abs()));
        }
    }
    candidates.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    candidates.truncate(budget);

    let mut samples = dataset.samples().to_vec();
    let mut flip_mask = vec![false; dataset.len()];
    for &(i, _) in &candidates {
        samples[i].label = 1 - samples[i].label;
        flip_mask[i] = true;
    }
    Ok(PerturbationRecord {
        perturbed: Dataset::with_groups(samples, dataset.num_groups())?,
        flip_mask,
        budget_eta: eta,
        kind: "nasty".into(),
        rng_seed: seed,
    })
}
