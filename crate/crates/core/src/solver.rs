//! Constrained empirical-risk minimization: the unconstrained logistic fit,
//! the clean-data fair program, the error-tolerant programs, the multi-metric
//! variant, the scaling program, and the local constrained minimizer they
//! all share.
//!
//! During optimization every indicator is smoothed with the classifier's
//! soft prediction; feasibility and all reported slacks use hard indicators.

use rand::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::{logistic_loss, sigmoid, LinearClassifier};
use crate::metrics::{fairness_of, joint_event_mass, Dataset, MetricSpec};

/// Hard-indicator feasibility slack tolerance.
pub const FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub conv_tol: f64,
    pub fd_step: f64,
    pub restarts: usize,
    /// Uniform initialization box half-width.
    pub init_box: f64,
    /// Soft-indicator temperature used in constraint smoothing.
    pub temperature: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 1000,
            conv_tol: 1e-4,
            fd_step: 1e-4,
            restarts: 10,
            init_box: 1.0,
            temperature: 1.0,
            seed: 0,
        }
    }
}

/// Inputs of the robust programs.
///
/// `lambda_vec[l]` estimates the joint mass `Pr[E(f*), E'(f*), Z=l+1]` and
/// `gamma_vec[l]` the conditioning mass `Pr[E'(f*), Z=l+1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustParams {
    pub eta: f64,
    pub tau: f64,
    pub lambda_vec: Vec<f64>,
    pub gamma_vec: Vec<f64>,
    pub delta: f64,
}

impl RobustParams {
    pub fn new(
        eta: f64,
        tau: f64,
        lambda_vec: Vec<f64>,
        gamma_vec: Vec<f64>,
        delta: f64,
    ) -> Result<Self> {
        let params = RobustParams { eta, tau, lambda_vec, gamma_vec, delta };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.eta) {
            return Err(Error::InvalidParameter("eta must lie in [0,1)".into()));
        }
        if !(0.0 < self.tau && self.tau <= 1.0) {
            return Err(Error::InvalidParameter("tau must lie in (0,1]".into()));
        }
        if self.delta < 0.0 {
            return Err(Error::InvalidParameter("delta must be nonnegative".into()));
        }
        if self.lambda_vec.is_empty() || self.lambda_vec.len() != self.gamma_vec.len() {
            return Err(Error::InvalidParameter("lambda/gamma length mismatch".into()));
        }
        for (&l, &g) in self.lambda_vec.iter().zip(&self.gamma_vec) {
            if !(0.0 < l && l <= 1.0) || !(0.0 < g && g <= 1.0) || l > g + 1e-12 {
                return Err(Error::InvalidParameter(
                    "need 0 < lambda_l <= gamma_l <= 1 per group".into(),
                ));
            }
        }
        let budget = self.eta + self.delta;
        if self.min_lambda() <= budget {
            return Err(Error::AssumptionViolated { lambda: self.min_lambda(), budget });
        }
        Ok(())
    }

    pub fn min_lambda(&self) -> f64 {
        self.lambda_vec.iter().cloned().fold(f64::MAX, f64::min)
    }

    /// Plug-in estimates from perturbed data, using the label in place of
    /// the reference classifier's prediction:
    /// `lambda_l = Pr[E(Y), E'(Y), Z=l]` and `gamma_l = Pr[E'(Y), Z=l]`.
    ///
    /// For metrics whose events contradict on labels (false-positive and
    /// false-discovery rates) the plug-in joint mass is identically zero and
    /// no estimate exists; supply `lambda` explicitly through
    /// [`RobustParams::with_lambda`] instead.
    pub fn heuristic(
        perturbed: &Dataset,
        spec: &MetricSpec,
        eta: f64,
        tau: f64,
        delta: f64,
    ) -> Result<Self> {
        let (lambda_vec, gamma_vec) = Self::plug_in_masses(perturbed, spec);
        if lambda_vec.contains(&0.0) {
            return Err(Error::InvalidParameter(format!(
                "the label plug-in cannot estimate lambda for metric {:?} (zero joint mass); \
                 supply lambda explicitly",
                spec.name
            )));
        }
        RobustParams::new(eta, tau, lambda_vec, gamma_vec, delta)
    }

    /// Caller-supplied `lambda` with the plug-in conditioning masses for
    /// `gamma`.
    pub fn with_lambda(
        perturbed: &Dataset,
        spec: &MetricSpec,
        lambda_vec: Vec<f64>,
        eta: f64,
        tau: f64,
        delta: f64,
    ) -> Result<Self> {
        let (_, gamma_vec) = Self::plug_in_masses(perturbed, spec);
        // gamma must dominate lambda; a supplied floor above the observed
        // conditioning mass would be unsatisfiable anyway
        let gamma_vec = gamma_vec
            .iter()
            .zip(&lambda_vec)
            .map(|(&g, &l)| g.max(l))
            .collect();
        RobustParams::new(eta, tau, lambda_vec, gamma_vec, delta)
    }

    fn plug_in_masses(perturbed: &Dataset, spec: &MetricSpec) -> (Vec<f64>, Vec<f64>) {
        let p = perturbed.num_groups();
        let n = perturbed.len() as f64;
        let mut lambda_vec = vec![0.0; p];
        let mut gamma_vec = vec![0.0; p];
        for s in perturbed.samples() {
            if spec.e_prime(s.label, s.label) {
                gamma_vec[s.group - 1] += 1.0;
                if spec.e(s.label, s.label) {
                    lambda_vec[s.group - 1] += 1.0;
                }
            }
        }
        for v in lambda_vec.iter_mut().chain(gamma_vec.iter_mut()) {
            *v /= n;
        }
        (lambda_vec, gamma_vec)
    }
}

/// Result of a constrained solve. `feasible` is judged post hoc with hard
/// indicators, and `constraint_slacks` are the hard-indicator slacks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub classifier: LinearClassifier,
    pub feasible: bool,
    pub objective: f64,
    pub constraint_slacks: Vec<f64>,
    pub restarts_used: usize,
    /// Set by the interval reduction: index of the winning box program.
    pub winning_box: Option<usize>,
}

/// The squared stability deflation `((1 - x) / (1 + x))^2`.
pub fn stability_factor(x: f64) -> f64 {
    let r = (1.0 - x) / (1.0 + x);
    r * r
}

/// The deflated fairness threshold `tau * ((1-x)/(1+x))^2` with
/// `x = (eta + delta) / min_l lambda_l`.
pub fn robust_fairness_threshold(params: &RobustParams) -> Result<f64> {
    params.validate()?;
    let x = (params.eta + params.delta) / params.min_lambda();
    Ok(params.tau * stability_factor(x))
}

/// Worst-case fairness deflation from the group-budget program: minimize
/// over nonnegative per-group budgets summing to at most `eta + delta` the
/// smallest pairwise ratio distortion. Solved by dense grid search over the
/// budget simplex plus coordinate polish; the result is clamped to [0, 1].
pub fn compute_scaling_s(params: &RobustParams, grid_resolution: usize) -> Result<f64> {
    params.validate()?;
    let budget = params.eta + params.delta;
    if budget == 0.0 {
        return Ok(1.0);
    }
    let resolution = grid_resolution.max(1);
    let p = params.lambda_vec.len();
    let step = budget / resolution as f64;

    let mut best_val = f64::INFINITY;
    let mut best_pt = vec![0.0; p];
    let mut point = vec![0.0; p];
    grid_recurse(
        &mut point,
        0,
        resolution,
        step,
        budget,
        params,
        &mut best_val,
        &mut best_pt,
    );

    // coordinate polish with shrinking steps around the best grid point
    let mut h = step;
    for _ in 0..40 {
        let mut improved = false;
        for l in 0..p {
            for dir in [-1.0, 1.0] {
                let mut cand = best_pt.clone();
                cand[l] += dir * h;
                if cand[l] < 0.0 || cand.iter().sum::<f64>() > budget + 1e-15 {
                    continue;
                }
                let v = scaling_objective(&cand, params);
                if v < best_val {
                    best_val = v;
                    best_pt = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
            if h < 1e-12 {
                break;
            }
        }
    }
    Ok(best_val.clamp(0.0, 1.0))
}

#[allow(clippy::too_many_arguments)]
fn grid_recurse(
    point: &mut Vec<f64>,
    coord: usize,
    steps_left: usize,
    step: f64,
    budget: f64,
    params: &RobustParams,
    best_val: &mut f64,
    best_pt: &mut Vec<f64>,
) {
    let p = params.lambda_vec.len();
    if coord == p {
        let v = scaling_objective(point, params);
        if v < *best_val {
            *best_val = v;
            *best_pt = point.clone();
        }
        return;
    }
    for i in 0..=steps_left {
        point[coord] = (i as f64 * step).min(budget);
        grid_recurse(point, coord + 1, steps_left - i, step, budget, params, best_val, best_pt);
    }
    point[coord] = 0.0;
}

fn scaling_objective(etas: &[f64], params: &RobustParams) -> f64 {
    let lambda = &params.lambda_vec;
    let gamma = &params.gamma_vec;
    let p = lambda.len();
    let mut worst = f64::INFINITY;
    for l in 0..p {
        for k in 0..p {
            let first = (1.0 - etas[l] / lambda[l]) / (1.0 + (etas[k] - etas[l]) / gamma[l]);
            let second = (1.0 + (etas[l] - etas[k]) / gamma[k]) / (1.0 + etas[l] / lambda[k]);
            worst = worst.min(first * second);
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// Generic local constrained minimizer
// ---------------------------------------------------------------------------

pub type ObjectiveFn<'a> = dyn Fn(&[f64]) -> (f64, Vec<f64>) + 'a;
pub type ConstraintFn<'a> = dyn Fn(&[f64]) -> f64 + 'a;

struct RawSolution {
    x: Vec<f64>,
    objective: f64,
    constraint_values: Vec<f64>,
    accepted: bool,
    restarts_used: usize,
}

/// Local minimization of `objective` subject to `constraints[j](x) >= 0`,
/// by an augmented-Lagrangian outer loop around BFGS with backtracking line
/// search. The objective gradient is analytic; constraint gradients are
/// central finite differences with step `config.fd_step`. Restarts from a
/// fresh uniform init (seeded `config.seed + restart`) until the `accept`
/// predicate holds, up to `config.restarts` attempts.
fn minimize_with(
    objective: &ObjectiveFn<'_>,
    constraints: &[Box<ConstraintFn<'_>>],
    dim: usize,
    config: &SolverConfig,
    accept: &dyn Fn(&[f64]) -> bool,
) -> Result<RawSolution> {
    let m = constraints.len();
    let mut last: Option<RawSolution> = None;

    for restart in 0..config.restarts.max(1) {
        let mut rng = crate::rng::seeded(
            config.seed.wrapping_add(restart as u64),
            crate::rng::stream::SOLVER_INIT,
        );
        let mut x: Vec<f64> =
            (0..dim).map(|_| rng.gen_range(-config.init_box..=config.init_box)).collect();
        if !objective(&x).0.is_finite() {
            continue;
        }

        let mut multipliers = vec![0.0f64; m];
        let mut mu = 10.0f64;
        let mut prev_violation = f64::INFINITY;
        let mut used_iters = 0usize;
        let outer_rounds = if m == 0 { 1 } else { 30 };
        let inner_cap = (config.max_iters / outer_rounds).max(25);
        // multiplier iterations stop only well inside the feasibility slack
        let violation_tol = config.conv_tol.min(0.01 * FEAS_TOL);

        for _outer in 0..outer_rounds {
            if used_iters >= config.max_iters {
                break;
            }
            let cap = inner_cap.min(config.max_iters - used_iters);
            let step_norm = bfgs_inner(
                objective,
                constraints,
                &mut x,
                &multipliers,
                mu,
                cap,
                config.fd_step,
                &mut used_iters,
            );
            if m == 0 {
                let _ = step_norm;
                break;
            }
            let values: Vec<f64> = constraints.iter().map(|c| c(&x)).collect();
            let violation = values.iter().map(|&v| (-v).max(0.0)).fold(0.0, f64::max);
            for (lam, &v) in multipliers.iter_mut().zip(&values) {
                *lam = (*lam - mu * v).max(0.0);
            }
            if violation < violation_tol && step_norm < config.conv_tol {
                break;
            }
            // the penalty cap keeps a residual violation that local gradients
            // cannot remove (saturated indicators) from deforming the
            // objective landscape; the multipliers carry the enforcement
            if violation > 0.25 * prev_violation {
                mu = (mu * 5.0).min(1e4);
            }
            prev_violation = violation;
        }

        let values: Vec<f64> = constraints.iter().map(|c| c(&x)).collect();
        let accepted = values.iter().all(|&v| v >= -FEAS_TOL) && accept(&x);
        let solution = RawSolution {
            objective: objective(&x).0,
            x,
            constraint_values: values,
            accepted,
            restarts_used: restart + 1,
        };
        if accepted {
            return Ok(solution);
        }
        last = Some(solution);
    }

    last.ok_or(Error::NonFiniteObjective)
}

/// One augmented-Lagrangian inner solve; returns the final step norm.
#[allow(clippy::too_many_arguments)]
fn bfgs_inner(
    objective: &ObjectiveFn<'_>,
    constraints: &[Box<ConstraintFn<'_>>],
    x: &mut Vec<f64>,
    multipliers: &[f64],
    mu: f64,
    max_steps: usize,
    fd_step: f64,
    used_iters: &mut usize,
) -> f64 {
    let dim = x.len();
    let phi = |pt: &[f64]| -> f64 {
        let mut v = objective(pt).0;
        for (c, &lam) in constraints.iter().zip(multipliers) {
            let slack = lam / mu - c(pt);
            if slack > 0.0 {
                v += 0.5 * mu * slack * slack - 0.5 * lam * lam / mu;
            } else {
                v -= 0.5 * lam * lam / mu;
            }
        }
        v
    };
    let grad_phi = |pt: &[f64]| -> Vec<f64> {
        let (_, mut g) = objective(pt);
        for (c, &lam) in constraints.iter().zip(multipliers) {
            let slack = lam / mu - c(pt);
            if slack > 0.0 {
                // active: add -mu * slack * grad c (central differences)
                let mut probe = pt.to_vec();
                for (i, gi) in g.iter_mut().enumerate() {
                    probe[i] = pt[i] + fd_step;
                    let hi = c(&probe);
                    probe[i] = pt[i] - fd_step;
                    let lo = c(&probe);
                    probe[i] = pt[i];
                    *gi -= mu * slack * (hi - lo) / (2.0 * fd_step);
                }
            }
        }
        g
    };

    // dense inverse-Hessian BFGS
    let mut h: Vec<Vec<f64>> = (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut g = grad_phi(x);
    let mut f_cur = phi(x);
    let mut last_step_norm = f64::INFINITY;

    for _ in 0..max_steps {
        *used_iters += 1;
        let g_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if g_norm < 1e-9 {
            break;
        }
        // d = -H g
        let mut d: Vec<f64> = (0..dim)
            .map(|i| -(0..dim).map(|j| h[i][j] * g[j]).sum::<f64>())
            .collect();
        let mut dir_deriv: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if dir_deriv >= 0.0 {
            // not a descent direction: reset to steepest descent
            for (di, gi) in d.iter_mut().zip(&g) {
                *di = -gi;
            }
            dir_deriv = -g.iter().map(|v| v * v).sum::<f64>();
            h = (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect();
        }
        // Armijo backtracking
        let mut t = 1.0f64;
        let mut x_new;
        let mut f_new;
        let mut ok = false;
        loop {
            x_new = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect::<Vec<f64>>();
            f_new = phi(&x_new);
            if f_new.is_finite() && f_new <= f_cur + 1e-4 * t * dir_deriv {
                ok = true;
                break;
            }
            t *= 0.5;
            if t < 1e-14 {
                break;
            }
        }
        if !ok {
            last_step_norm = 0.0;
            break;
        }
        let g_new = grad_phi(&x_new);
        let s: Vec<f64> = x_new.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-12 {
            // H <- (I - s y^T / sy) H (I - y s^T / sy) + s s^T / sy
            let hy: Vec<f64> = (0..dim)
                .map(|i| (0..dim).map(|j| h[i][j] * y[j]).sum::<f64>())
                .collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..dim {
                for j in 0..dim {
                    h[i][j] += (sy + yhy) * s[i] * s[j] / (sy * sy)
                        - (hy[i] * s[j] + s[i] * hy[j]) / sy;
                }
            }
        }
        last_step_norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        *x = x_new;
        g = g_new;
        f_cur = f_new;
        if last_step_norm < 1e-12 {
            break;
        }
    }
    last_step_norm
}

/// Public generic entry point; feasibility is judged on the raw constraint
/// values and the solution vector is wrapped as a linear classifier.
pub fn constrained_minimize(
    objective: &ObjectiveFn<'_>,
    constraints: &[Box<ConstraintFn<'_>>],
    dim: usize,
    config: &SolverConfig,
) -> Result<SolveResult> {
    let raw = minimize_with(objective, constraints, dim, config, &|_| true)?;
    Ok(SolveResult {
        classifier: LinearClassifier::new(raw.x),
        feasible: raw.accepted,
        objective: raw.objective,
        constraint_slacks: raw.constraint_values,
        restarts_used: raw.restarts_used,
        winning_box: None,
    })
}

// ---------------------------------------------------------------------------
// Soft-indicator constraint machinery shared by the fairness programs
// ---------------------------------------------------------------------------

/// Soft per-group event masses for one metric at parameters `theta`:
/// numerator mass of `E and E'` and denominator mass of `E'`, both smoothed
/// through the sigmoid prediction at the given temperature.
pub(crate) fn soft_group_masses(
    dataset: &Dataset,
    spec: &MetricSpec,
    theta: &[f64],
    temperature: f64,
) -> (Vec<f64>, Vec<f64>) {
    let p = dataset.num_groups();
    let n = dataset.len() as f64;
    let mut num = vec![0.0; p];
    let mut den = vec![0.0; p];
    for s in dataset.samples() {
        let dot: f64 = s.features.iter().zip(theta).map(|(a, b)| a * b).sum();
        let sig = sigmoid(dot / temperature);
        let y = s.label;
        let both = |pred: u8| -> f64 {
            if spec.e(pred, y) && spec.e_prime(pred, y) {
                1.0
            } else {
                0.0
            }
        };
        let prime = |pred: u8| -> f64 { if spec.e_prime(pred, y) { 1.0 } else { 0.0 } };
        num[s.group - 1] += both(1) * sig + both(0) * (1.0 - sig);
        den[s.group - 1] += prime(1) * sig + prime(0) * (1.0 - sig);
    }
    for v in num.iter_mut().chain(den.iter_mut()) {
        *v /= n;
    }
    (num, den)
}

/// Pairwise fairness constraints `num_l * den_k - threshold * num_k * den_l`
/// for all ordered group pairs, avoiding any division.
fn push_fairness_constraints<'a>(
    constraints: &mut Vec<Box<ConstraintFn<'a>>>,
    dataset: &'a Dataset,
    spec: &'a MetricSpec,
    threshold: f64,
    temperature: f64,
) {
    let p = dataset.num_groups();
    for l in 0..p {
        for k in 0..p {
            if l == k {
                continue;
            }
            constraints.push(Box::new(move |theta: &[f64]| {
                let (num, den) = soft_group_masses(dataset, spec, theta, temperature);
                num[l] * den[k] - threshold * num[k] * den[l]
            }));
        }
    }
}

/// Per-group joint-mass floors `mass_l >= bound_l`.
fn push_mass_constraints<'a>(
    constraints: &mut Vec<Box<ConstraintFn<'a>>>,
    dataset: &'a Dataset,
    spec: &'a MetricSpec,
    bounds: &[f64],
    temperature: f64,
) {
    for (l, &bound) in bounds.iter().enumerate() {
        constraints.push(Box::new(move |theta: &[f64]| {
            let (num, _) = soft_group_masses(dataset, spec, theta, temperature);
            num[l] - bound
        }));
    }
}

/// Hard-indicator slacks for one metric block: the fairness slack followed
/// by the per-group mass slacks (empty `bounds` drops the mass block).
fn hard_slacks(
    dataset: &Dataset,
    clf: &LinearClassifier,
    spec: &MetricSpec,
    threshold: f64,
    bounds: &[f64],
) -> Result<Vec<f64>> {
    let preds = clf.predict_all_hard(dataset)?;
    let mut slacks = vec![fairness_of(dataset, &preds, spec)? - threshold];
    for (l, &bound) in bounds.iter().enumerate() {
        slacks.push(joint_event_mass(dataset, &preds, spec, l + 1)? - bound);
    }
    Ok(slacks)
}

struct MetricBlock<'a> {
    spec: &'a MetricSpec,
    threshold: f64,
    mass_bounds: Vec<f64>,
}

/// Shared driver: logistic loss subject to the given metric blocks.
fn fit_constrained(
    dataset: &Dataset,
    blocks: &[MetricBlock<'_>],
    config: &SolverConfig,
) -> Result<SolveResult> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dim = dataset.dim();
    let temperature = config.temperature;
    let objective = move |theta: &[f64]| {
        let clf = LinearClassifier {
            theta: theta.to_vec(),
            use_protected: false,
            temperature,
        };
        logistic_loss(&clf, dataset).expect("dimensions fixed by driver")
    };

    let mut constraints: Vec<Box<ConstraintFn<'_>>> = Vec::new();
    for block in blocks {
        if block.threshold > 0.0 {
            push_fairness_constraints(
                &mut constraints,
                dataset,
                block.spec,
                block.threshold,
                temperature,
            );
        }
        let active: Vec<f64> = block.mass_bounds.clone();
        if active.iter().any(|&b| b > 0.0) {
            push_mass_constraints(&mut constraints, dataset, block.spec, &active, temperature);
        }
    }

    let accept = |theta: &[f64]| -> bool {
        let clf = LinearClassifier {
            theta: theta.to_vec(),
            use_protected: false,
            temperature,
        };
        blocks.iter().all(|b| {
            hard_slacks(dataset, &clf, b.spec, b.threshold, &b.mass_bounds)
                .map(|s| s.iter().all(|&v| v >= -FEAS_TOL))
                .unwrap_or(false)
        })
    };

    let raw = minimize_with(&objective, &constraints, dim, config, &accept)?;
    let clf = LinearClassifier {
        theta: raw.x,
        use_protected: false,
        temperature,
    };
    let mut slacks = Vec::new();
    for block in blocks {
        slacks.extend(hard_slacks(dataset, &clf, block.spec, block.threshold, &block.mass_bounds)?);
    }
    let feasible = slacks.iter().all(|&v| v >= -FEAS_TOL);
    Ok(SolveResult {
        objective: raw.objective,
        classifier: clf,
        feasible,
        constraint_slacks: slacks,
        restarts_used: raw.restarts_used,
        winning_box: None,
    })
}

/// Plain logistic-regression fit; always feasible.
pub fn fit_unconstrained(dataset: &Dataset, config: &SolverConfig) -> Result<SolveResult> {
    fit_constrained(dataset, &[], config)
}

/// Accuracy-maximizing fit subject to the fairness value being at least
/// `tau` (the clean-data fair program).
pub fn fit_target_fair(
    dataset: &Dataset,
    spec: &MetricSpec,
    tau: f64,
    config: &SolverConfig,
) -> Result<SolveResult> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidParameter("tau must lie in [0,1]".into()));
    }
    let blocks = [MetricBlock { spec, threshold: tau, mass_bounds: vec![] }];
    fit_constrained(dataset, &blocks, config)
}

/// The error-tolerant program on perturbed data: deflated fairness
/// threshold from the single worst-case `lambda`, plus uniform per-group
/// joint-mass floors `min_lambda - eta - delta`.
pub fn fit_err_tolerant(
    perturbed: &Dataset,
    spec: &MetricSpec,
    params: &RobustParams,
    config: &SolverConfig,
) -> Result<SolveResult> {
    let threshold = robust_fairness_threshold(params)?;
    let bound = params.min_lambda() - params.eta - params.delta;
    let blocks = [MetricBlock {
        spec,
        threshold,
        mass_bounds: vec![bound; perturbed.num_groups()],
    }];
    fit_constrained(perturbed, &blocks, config)
}

/// The tightened program: fairness threshold `tau * s` with `s` from the
/// group-budget scaling program, and per-group floors `lambda_l - eta -
/// delta`.
pub fn fit_err_tolerant_plus(
    perturbed: &Dataset,
    spec: &MetricSpec,
    params: &RobustParams,
    config: &SolverConfig,
) -> Result<SolveResult> {
    if params.lambda_vec.len() != perturbed.num_groups() {
        return Err(Error::InvalidParameter("lambda_vec length != number of groups".into()));
    }
    let s = compute_scaling_s(params, scaling_grid_resolution(params.lambda_vec.len()))?;
    let threshold = params.tau * s;
    let bounds: Vec<f64> =
        params.lambda_vec.iter().map(|&l| l - params.eta - params.delta).collect();
    let blocks = [MetricBlock { spec, threshold, mass_bounds: bounds }];
    fit_constrained(perturbed, &blocks, config)
}

/// All metrics constrained simultaneously at the common deflated threshold,
/// with mass floors per metric and group.
pub fn fit_general_err_tolerant(
    perturbed: &Dataset,
    specs: &[MetricSpec],
    params: &RobustParams,
    config: &SolverConfig,
) -> Result<SolveResult> {
    if specs.is_empty() {
        return Err(Error::InvalidParameter("need at least one metric".into()));
    }
    let threshold = robust_fairness_threshold(params)?;
    let bound = params.min_lambda() - params.eta - params.delta;
    let blocks: Vec<MetricBlock<'_>> = specs
        .iter()
        .map(|spec| MetricBlock {
            spec,
            threshold,
            mass_bounds: vec![bound; perturbed.num_groups()],
        })
        .collect();
    fit_constrained(perturbed, &blocks, config)
}

/// Default simplex grid resolution for the scaling program, by group count.
pub fn scaling_grid_resolution(p: usize) -> usize {
    match p {
        0..=2 => 600,
        3 => 80,
        _ => 24,
    }
}

/// Box-constrained fit used by the interval reduction: for every group,
/// `low <= q_l <= high` (soft during optimization), plus joint-mass floors.
pub(crate) fn fit_boxed(
    dataset: &Dataset,
    spec: &MetricSpec,
    low: f64,
    high: f64,
    mass_bounds: &[f64],
    config: &SolverConfig,
) -> Result<SolveResult> {
    let dim = dataset.dim();
    let temperature = config.temperature;
    let objective = move |theta: &[f64]| {
        let clf = LinearClassifier {
            theta: theta.to_vec(),
            use_protected: false,
            temperature,
        };
        logistic_loss(&clf, dataset).expect("dimensions fixed by driver")
    };
    let p = dataset.num_groups();
    let mut constraints: Vec<Box<ConstraintFn<'_>>> = Vec::new();
    for l in 0..p {
        constraints.push(Box::new(move |theta: &[f64]| {
            let (num, den) = soft_group_masses(dataset, spec, theta, temperature);
            num[l] - low * den[l]
        }));
        constraints.push(Box::new(move |theta: &[f64]| {
            let (num, den) = soft_group_masses(dataset, spec, theta, temperature);
            high * den[l] - num[l]
        }));
    }
    if mass_bounds.iter().any(|&b| b > 0.0) {
        push_mass_constraints(&mut constraints, dataset, spec, mass_bounds, temperature);
    }

    let hard_box_slacks = |clf: &LinearClassifier| -> Result<Vec<f64>> {
        let preds = clf.predict_all_hard(dataset)?;
        let table = crate::metrics::group_performance(dataset, &preds, spec)?;
        let mut slacks = Vec::new();
        for l in 0..p {
            // an undefined q counts as an empty conditioning event: the box
            // constraint is vacuous there
            let q = table.q[l].unwrap_or(low);
            slacks.push(q - low);
            slacks.push(high - q);
        }
        for (l, &bound) in mass_bounds.iter().enumerate() {
            slacks.push(joint_event_mass(dataset, &preds, spec, l + 1)? - bound);
        }
        Ok(slacks)
    };

    let accept = |theta: &[f64]| -> bool {
        let clf = LinearClassifier {
            theta: theta.to_vec(),
            use_protected: false,
            temperature,
        };
        hard_box_slacks(&clf).map(|s| s.iter().all(|&v| v >= -FEAS_TOL)).unwrap_or(false)
    };

    let raw = minimize_with(&objective, &constraints, dim, config, &accept)?;
    let clf = LinearClassifier {
        theta: raw.x,
        use_protected: false,
        temperature,
    };
    let slacks = hard_box_slacks(&clf)?;
    let feasible = slacks.iter().all(|&v| v >= -FEAS_TOL);
    Ok(SolveResult {
        objective: raw.objective,
        classifier: clf,
        feasible,
        constraint_slacks: slacks,
        restarts_used: raw.restarts_used,
        winning_box: None,
    })
}
