//! Exact finite-distribution machinery: the lower-bound distribution
//! families, exact error/fairness of total classifiers over their domains,
//! exhaustive verification of the impossibility claims, and iid sampling.

use std::collections::BTreeMap;

use rand::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{Dataset, MetricSpec, Sample};

const MASS_TOL: f64 = 1e-12;

/// An exact probability table over a finite domain of (x, z, y) points.
///
/// Domain points are symbolic feature ids; `sample` one-hot encodes them so
/// sampled datasets flow through the same empirical metric path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDistribution {
    pub name: String,
    /// `(x_id, group, label)` per atom; x ids are 0-based.
    pub points: Vec<(usize, usize, u8)>,
    pub mass: Vec<f64>,
    pub num_x: usize,
    pub num_groups: usize,
}

impl FiniteDistribution {
    pub fn new(
        name: &str,
        points: Vec<(usize, usize, u8)>,
        mass: Vec<f64>,
        num_x: usize,
        num_groups: usize,
    ) -> Result<Self> {
        if points.len() != mass.len() {
            return Err(Error::LengthMismatch { expected: points.len(), got: mass.len() });
        }
        if mass.iter().any(|&m| m < -MASS_TOL || !m.is_finite()) {
            return Err(Error::InvalidParameter("negative or non-finite mass".into()));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidParameter(format!("masses sum to {total}, not 1")));
        }
        for &(x, z, y) in &points {
            if x >= num_x || z == 0 || z > num_groups || y > 1 {
                return Err(Error::InvalidParameter("point outside declared domain".into()));
            }
        }
        Ok(FiniteDistribution {
            name: name.to_string(),
            points,
            mass,
            num_x,
            num_groups,
        })
    }

    /// Marginal mass of `(x, z)` summed over labels.
    pub fn xz_mass(&self, x: usize, z: usize) -> f64 {
        self.points
            .iter()
            .zip(&self.mass)
            .filter(|((px, pz, _), _)| *px == x && *pz == z)
            .map(|(_, &m)| m)
            .sum()
    }

    /// Marginal mass of `x` summed over groups and labels.
    pub fn x_mass(&self, x: usize) -> f64 {
        (1..=self.num_groups).map(|z| self.xz_mass(x, z)).sum()
    }

    /// Exact joint mass of a specific `(x, z, y)` cell.
    pub fn cell_mass(&self, x: usize, z: usize, y: u8) -> f64 {
        self.points
            .iter()
            .zip(&self.mass)
            .filter(|((px, pz, py), _)| *px == x && *pz == z && *py == y)
            .map(|(_, &m)| m)
            .sum()
    }

    /// Total variation distance, over the full (x, z, y) joint.
    pub fn tv_distance(&self, other: &FiniteDistribution) -> f64 {
        let mut cells: BTreeMap<(usize, usize, u8), (f64, f64)> = BTreeMap::new();
        for (&(x, z, y), &m) in self.points.iter().zip(&self.mass) {
            cells.entry((x, z, y)).or_default().0 += m;
        }
        for (&(x, z, y), &m) in other.points.iter().zip(&other.mass) {
            cells.entry((x, z, y)).or_default().1 += m;
        }
        cells.values().map(|&(a, b)| (a - b).max(0.0)).sum()
    }

    /// Total variation distance of the (x, z) marginals, the quantity that
    /// drives the coupling adversary's flip probabilities.
    pub fn tv_distance_xz(&self, other: &FiniteDistribution) -> f64 {
        let mut acc = 0.0;
        for x in 0..self.num_x {
            for z in 1..=self.num_groups {
                acc += (self.xz_mass(x, z) - other.xz_mass(x, z)).max(0.0);
            }
        }
        acc
    }

    /// Draw `n` iid samples, one-hot encoding the symbolic x ids.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::InvalidParameter("need n >= 1 samples".into()));
        }
        let mut rng = crate::rng::seeded(seed, crate::rng::stream::SAMPLE);
        let mut cumulative = Vec::with_capacity(self.mass.len());
        let mut acc = 0.0;
        for &m in &self.mass {
            acc += m;
            cumulative.push(acc);
        }
        let samples: Vec<Sample> = (0..n)
            .map(|_| {
                let u: f64 = rng.gen::<f64>() * acc;
                let idx = cumulative.partition_point(|&c| c < u).min(self.points.len() - 1);
                let (x, z, y) = self.points[idx];
                let mut features = vec![0.0; self.num_x];
                features[x] = 1.0;
                Sample::new(features, y, z)
            })
            .collect();
        Dataset::with_groups(samples, self.num_groups)
    }
}

/// A total binary assignment over the `(x, z)` domain of a distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumClassifier {
    /// `outputs[x * num_groups + (z - 1)]`.
    pub outputs: Vec<u8>,
    pub num_x: usize,
    pub num_groups: usize,
}

impl EnumClassifier {
    /// The `index`-th classifier in the enumeration of all
    /// `2^(num_x * num_groups)` total assignments; bit `j` of `index` is the
    /// output on domain cell `j`.
    pub fn from_index(index: u64, num_x: usize, num_groups: usize) -> Self {
        let cells = num_x * num_groups;
        let outputs = (0..cells).map(|j| ((index >> j) & 1) as u8).collect();
        EnumClassifier { outputs, num_x, num_groups }
    }

    #[inline]
    pub fn predict(&self, x: usize, z: usize) -> u8 {
        self.outputs[x * self.num_groups + (z - 1)]
    }

    /// Build from an explicit positive set of `(x, z)` cells.
    pub fn from_positives(positives: &[(usize, usize)], num_x: usize, num_groups: usize) -> Self {
        let mut outputs = vec![0u8; num_x * num_groups];
        for &(x, z) in positives {
            outputs[x * num_groups + (z - 1)] = 1;
        }
        EnumClassifier { outputs, num_x, num_groups }
    }

    pub fn enumeration_size(num_x: usize, num_groups: usize) -> u64 {
        1u64 << (num_x * num_groups)
    }
}

/// Exact error and fairness of a total classifier on a finite distribution.
pub fn exact_metrics(
    dist: &FiniteDistribution,
    clf: &EnumClassifier,
    spec: &MetricSpec,
) -> (f64, f64) {
    let mut err = 0.0;
    let mut num = vec![0.0; dist.num_groups];
    let mut den = vec![0.0; dist.num_groups];
    for (&(x, z, y), &m) in dist.points.iter().zip(&dist.mass) {
        let pred = clf.predict(x, z);
        if pred != y {
            err += m;
        }
        if spec.e_prime(pred, y) {
            den[z - 1] += m;
            if spec.e(pred, y) {
                num[z - 1] += m;
            }
        }
    }
    let q: Vec<Option<f64>> = num
        .iter()
        .zip(&den)
        .map(|(&nu, &de)| if de > 0.0 { Some(nu / de) } else { None })
        .collect();
    let table = crate::metrics::PerformanceTable {
        q,
        numerators: num,
        denominators: den,
    };
    (err, crate::metrics::fairness_value(&table))
}

/// Parameters for the three-point family with labels `y = 1[x = x_A]`.
///
/// Pairwise total variation distance is at most `alpha`, and the marginal
/// over x is shared, so the coupling adversary can map any member to any
/// other.
pub fn build_family_a(c: f64, alpha: f64) -> Result<[FiniteDistribution; 3]> {
    if !(0.0 < c && c < 0.5) {
        return Err(Error::InvalidParameter("family A needs c in (0, 1/2)".into()));
    }
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidParameter("family A needs alpha in (0, 1)".into()));
    }
    // cells in order (x, z): x in {A=0, B=1, C=2}, z in {1, 2}; y = 1[x = A]
    let label = |x: usize| u8::from(x == 0);
    let points: Vec<(usize, usize, u8)> = (0..3)
        .flat_map(|x| [(x, 1, label(x)), (x, 2, label(x))])
        .collect();
    let masses = [
        // D1
        vec![
            c * (1.0 - alpha),
            c * alpha / 2.0,
            (1.0 - c) * (1.0 - alpha),
            alpha * (1.0 - c) / 2.0,
            alpha / 2.0,
            0.0,
        ],
        // D2
        vec![
            c * (1.0 - alpha),
            c * alpha / 2.0,
            (1.0 - c) * (1.0 - alpha / 2.0),
            0.0,
            c * alpha / 2.0,
            alpha * (1.0 - c) / 2.0,
        ],
        // D3
        vec![
            c * (1.0 - alpha / 2.0),
            0.0,
            (1.0 - c) * (1.0 - alpha),
            alpha * (1.0 - c) / 2.0,
            alpha * (1.0 - c) / 2.0,
            c * alpha / 2.0,
        ],
    ];
    let mut out = Vec::with_capacity(3);
    for (k, mass) in masses.into_iter().enumerate() {
        out.push(FiniteDistribution::new(
            &format!("family-a-d{}", k + 1),
            points.clone(),
            mass,
            3,
            2,
        )?);
    }
    Ok([out.remove(0), out.remove(0), out.remove(0)])
}

/// The five-point family with labels `y = 1[x != x_E]`.
pub fn build_family_b(lambda: f64, c: f64) -> Result<[FiniteDistribution; 3]> {
    if !(0.0 < lambda && lambda <= 0.25) {
        return Err(Error::InvalidParameter("family B needs lambda in (0, 1/4]".into()));
    }
    if !(0.0 < c && c <= 2.0 * lambda / 9.0) {
        return Err(Error::InvalidParameter("family B needs c in (0, 2*lambda/9]".into()));
    }
    // x in {A=0, B=1, C=2, D=3, E=4}; y = 1[x != E]
    let label = |x: usize| u8::from(x != 4);
    let points: Vec<(usize, usize, u8)> = (0..5)
        .flat_map(|x| [(x, 1, label(x)), (x, 2, label(x))])
        .collect();
    let half = 0.5 - lambda - c / 2.0;
    // per-distribution masses for (x_A..x_C) x (z=1, z=2); D and E are shared
    let abc = [
        [[0.0, c], [c / 2.0, c / 2.0], [c / 2.0, c / 2.0]],
        [[c / 2.0, c / 2.0], [0.0, c], [c / 2.0, c / 2.0]],
        [[c / 2.0, c / 2.0], [c / 2.0, c / 2.0], [0.0, c]],
    ];
    let mut out = Vec::with_capacity(3);
    for (k, table) in abc.iter().enumerate() {
        let mut mass = Vec::with_capacity(10);
        for (x, zs) in table.iter().enumerate() {
            let _ = x;
            mass.push(zs[0]);
            mass.push(zs[1]);
        }
        // x_D and x_E rows are identical in all three distributions
        for _ in 0..2 {
            mass.push(half);
            mass.push(lambda - c);
        }
        out.push(FiniteDistribution::new(
            &format!("family-b-d{}", k + 1),
            points.clone(),
            mass,
            5,
            2,
        )?);
    }
    Ok([out.remove(0), out.remove(0), out.remove(0)])
}

/// The label-noise pair (P, Q): identical (x, z) marginals, deterministic
/// labels that disagree on the four x_A/x_C cells.
pub fn build_family_c(eta: f64) -> Result<[FiniteDistribution; 2]> {
    if !(0.0 < eta && eta <= 0.5) {
        return Err(Error::InvalidParameter("family C needs eta in (0, 1/2]".into()));
    }
    // x in {A=0, B=1, C=2}; marginal mass eta/2 on A and C cells, 1/2-eta on B
    let marginal = |x: usize| if x == 1 { 0.5 - eta } else { eta / 2.0 };
    // deterministic labels per (x, z): rows are x_A, x_B, x_C; cols z=1, z=2
    let label_p = [[1u8, 0u8], [1, 1], [0, 1]];
    let label_q = [[0u8, 1u8], [1, 1], [1, 0]];
    let build = |name: &str, labels: [[u8; 2]; 3]| {
        let mut points = Vec::with_capacity(6);
        let mut mass = Vec::with_capacity(6);
        for (x, row) in labels.iter().enumerate() {
            for z in 1..=2 {
                points.push((x, z, row[z - 1]));
                mass.push(marginal(x));
            }
        }
        FiniteDistribution::new(name, points, mass, 3, 2)
    };
    Ok([build("family-c-p", label_p)?, build("family-c-q", label_q)?])
}

/// The family-C mixing adversary: flips the protected attribute of each
/// sample with `x != x_B` independently with probability 1/2, then returns
/// the original dataset instead if more than `eta * N` flips were realized.
/// On success the perturbed samples are iid from the mixture that hides
/// whether the source was P or Q.
pub fn perturb_family_c_mix(
    dataset: &Dataset,
    eta: f64,
    seed: u64,
) -> Result<(Dataset, usize, bool)> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter("eta outside [0,1]".into()));
    }
    let mut rng = crate::rng::seeded(seed, crate::rng::stream::FAMILY_C_MIX);
    let mut samples = dataset.samples().to_vec();
    let mut flips = 0usize;
    for s in &mut samples {
        let x = s
            .features
            .iter()
            .position(|&v| v == 1.0)
            .ok_or_else(|| Error::DistributionMismatch("samples are not one-hot".into()))?;
        if x != 1 && rng.gen::<f64>() >= 0.5 {
            s.group = 3 - s.group;
            flips += 1;
        }
    }
    if flips as f64 > eta * dataset.len() as f64 {
        return Ok((dataset.clone(), 0, false));
    }
    Ok((Dataset::with_groups(samples, 2)?, flips, true))
}

/// Outcome of an exhaustive enumeration check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnumerationReport {
    pub check: String,
    pub classifiers_checked: u64,
    pub passed: bool,
    /// Enumeration indices of violating classifiers (for the no-good check)
    /// or of exhibited witnesses (for the existence check).
    pub witnesses: Vec<u64>,
    pub detail: String,
}

/// Verify that no classifier is simultaneously good on every distribution:
/// each of the `2^|domain|` classifiers must have error >= `err_bound` or
/// fairness < `omega_bound` on at least one distribution.
pub fn verify_no_good_classifier(
    dists: &[FiniteDistribution],
    spec: &MetricSpec,
    err_bound: f64,
    omega_bound: f64,
) -> EnumerationReport {
    let (num_x, num_groups) = (dists[0].num_x, dists[0].num_groups);
    let total = EnumClassifier::enumeration_size(num_x, num_groups);
    let mut counterexamples = Vec::new();
    for idx in 0..total {
        let clf = EnumClassifier::from_index(idx, num_x, num_groups);
        let good_everywhere = dists.iter().all(|d| {
            let (err, omega) = exact_metrics(d, &clf, spec);
            err < err_bound && omega >= omega_bound
        });
        if good_everywhere {
            counterexamples.push(idx);
        }
    }
    EnumerationReport {
        check: "no-good-classifier".into(),
        classifiers_checked: total,
        passed: counterexamples.is_empty(),
        detail: format!(
            "bounds: err < {err_bound}, omega >= {omega_bound}; {} counterexample(s)",
            counterexamples.len()
        ),
        witnesses: counterexamples,
    }
}

/// Verify that each distribution admits a classifier with error at most
/// `err_bound` and fairness at least `omega_bound` (found by enumeration).
pub fn verify_good_classifier_exists(
    dists: &[FiniteDistribution],
    spec: &MetricSpec,
    err_bound: f64,
    omega_bound: f64,
) -> EnumerationReport {
    let (num_x, num_groups) = (dists[0].num_x, dists[0].num_groups);
    let total = EnumClassifier::enumeration_size(num_x, num_groups);
    let mut witnesses = Vec::new();
    let mut passed = true;
    let mut missing = Vec::new();
    for d in dists {
        let found = (0..total).find(|&idx| {
            let clf = EnumClassifier::from_index(idx, num_x, num_groups);
            let (err, omega) = exact_metrics(d, &clf, spec);
            err <= err_bound + MASS_TOL && omega >= omega_bound - MASS_TOL
        });
        match found {
            Some(idx) => witnesses.push(idx),
            None => {
                passed = false;
                missing.push(d.name.clone());
            }
        }
    }
    EnumerationReport {
        check: "good-classifier-exists".into(),
        classifiers_checked: total,
        passed,
        witnesses,
        detail: if passed {
            format!("bounds: err <= {err_bound}, omega >= {omega_bound}")
        } else {
            format!("no witness for: {}", missing.join(", "))
        },
    }
}

/// Family C's error dichotomy: every classifier has
/// `Err_P(f) + Err_Q(f) >= 2 * eta`.
pub fn verify_family_c_error_sum(
    p_dist: &FiniteDistribution,
    q_dist: &FiniteDistribution,
    eta: f64,
    spec: &MetricSpec,
) -> EnumerationReport {
    let total = EnumClassifier::enumeration_size(p_dist.num_x, p_dist.num_groups);
    let mut violators = Vec::new();
    for idx in 0..total {
        let clf = EnumClassifier::from_index(idx, p_dist.num_x, p_dist.num_groups);
        let (err_p, _) = exact_metrics(p_dist, &clf, spec);
        let (err_q, _) = exact_metrics(q_dist, &clf, spec);
        if err_p + err_q < 2.0 * eta - MASS_TOL {
            violators.push(idx);
        }
    }
    EnumerationReport {
        check: "family-c-error-sum".into(),
        classifiers_checked: total,
        passed: violators.is_empty(),
        detail: format!("require Err_P + Err_Q >= {}", 2.0 * eta),
        witnesses: violators,
    }
}
