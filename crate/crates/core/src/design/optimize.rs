use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use super::goal::{DesignGoal, Formulation};
use super::simplex::{self, SimplexConfig};
use super::snr::{population_snr, SnrMode};
use crate::data::{Bounds, Dataset, VariableRole};
use crate::error::{Error, Result};
use crate::rng;
use crate::rsm::{NoiseCovariance, RsmModel};

/// Feasibility tolerance on `|mean - t|` is this times `1 + |t|`.
pub const TARGET_TOLERANCE: f64 = 1e-3;

pub fn target_tolerance(t: f64) -> f64 {
    TARGET_TOLERANCE * (1.0 + t.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub starts: usize,
    pub seed: u64,
    /// Quadratic penalty weights applied in order for the constrained goal.
    pub penalty_schedule: Vec<f64>,
    pub simplex: SimplexConfig,
    /// Simplex tolerance for every penalty stage but the last.
    pub stage_tolerance: f64,
    /// Starts used before any random draws (typically a quantile lattice of
    /// the observed controls). Points are clamped to the bounds.
    pub start_points: Vec<Vec<f64>>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            starts: 16,
            seed: 0,
            penalty_schedule: (0..=6).map(|e| 10f64.powi(e)).collect(),
            simplex: SimplexConfig::default(),
            stage_tolerance: 1e-4,
            start_points: Vec::new(),
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_start_points(mut self, points: Vec<Vec<f64>>) -> Self {
        self.start_points = points;
        self
    }
}

/// Recommended control setting and its predicted quality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignSolution {
    pub x_hat: Vec<f64>,
    pub predicted_mean: f64,
    pub predicted_variance: f64,
    /// `|mean - t|`, zero for goals without a target.
    pub constraint_residual: f64,
    /// Final objective of the returned restart (lower is better).
    pub objective: f64,
    pub converged: bool,
    pub restarts_used: usize,
    pub at_bound: Vec<bool>,
    /// Incumbent residual after each penalty stage of the returned restart.
    pub penalty_trace: Vec<f64>,
    /// Final objective of every restart, by restart index.
    pub restart_objectives: Vec<f64>,
}

struct RestartOutcome {
    x: Vec<f64>,
    objective: f64,
    trace: Vec<f64>,
    simplex_converged: bool,
}

/// Equal-count quantile lattice of the observed controls: medians first,
/// then points of the {0.25, 0.5, 0.75} product grid, at most `max_points`.
pub fn quantile_lattice(d: &Dataset, subset: &[String], max_points: usize) -> Result<Vec<Vec<f64>>> {
    let s = subset.len();
    if s == 0 || max_points == 0 {
        return Ok(Vec::new());
    }
    let levels = [0.5, 0.25, 0.75];
    let mut quantiles = Vec::with_capacity(s);
    for id in subset {
        let mut col = d.column_with_role(id, VariableRole::Control)?.to_vec();
        col.sort_by(f64::total_cmp);
        let at = |p: f64| {
            let pos = p * (col.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            col[lo] + (pos - lo as f64) * (col[hi] - col[lo])
        };
        quantiles.push(levels.map(at));
    }
    let total = 3usize.saturating_pow(s as u32);
    let stride = if total <= max_points {
        1
    } else {
        // odd stride over a 3^s grid visits distinct points
        (total / max_points) | 1
    };
    let mut points = Vec::new();
    let mut idx = 0usize;
    while points.len() < max_points.min(total) {
        let mut code = idx % total;
        let point: Vec<f64> = (0..s)
            .map(|j| {
                let level = code % 3;
                code /= 3;
                quantiles[j][level]
            })
            .collect();
        if !points.contains(&point) {
            points.push(point);
        }
        idx += stride;
        if idx > total * stride {
            break;
        }
    }
    Ok(points)
}

fn check_model(m: &RsmModel, bounds: &Bounds, cov: &NoiseCovariance) -> Result<()> {
    if m.has_non_finite() {
        return Err(Error::NonFinite("model coefficients".into()));
    }
    if bounds.dim() != m.s() {
        return Err(Error::InvalidBounds(format!(
            "bounds cover {} variables, model has {}",
            bounds.dim(),
            m.s()
        )));
    }
    if cov.dim() != m.q() {
        return Err(Error::DimensionMismatch {
            expected: m.q(),
            got: cov.dim(),
        });
    }
    Ok(())
}

fn start_set(m: &RsmModel, bounds: &Bounds, cfg: &OptimizerConfig) -> Vec<Vec<f64>> {
    let s = m.s();
    let count = cfg.starts.max(1);
    let mut starts: Vec<Vec<f64>> = cfg
        .start_points
        .iter()
        .filter(|p| p.len() == s)
        .take(count)
        .map(|p| {
            let mut p = p.clone();
            bounds.clamp(&mut p);
            p
        })
        .collect();
    if starts.is_empty() {
        starts.push(
            bounds
                .low
                .iter()
                .zip(&bounds.high)
                .map(|(l, h)| 0.5 * (l + h))
                .collect(),
        );
    }
    let mut r = rng::rng_from(cfg.seed, &[0x5747]);
    while starts.len() < count {
        starts.push(
            bounds
                .low
                .iter()
                .zip(&bounds.high)
                .map(|(l, h)| if l < h { r.random_range(*l..=*h) } else { *l })
                .collect(),
        );
    }
    starts
}

/// Solve the parameter design problem for one fitted model.
///
/// The constrained goal runs the penalty schedule from every start; the
/// incumbent only moves to a stage result whose residual does not exceed
/// its own. Weighted and SNR goals run the simplex search directly.
pub fn optimize_design(
    m: &RsmModel,
    goal: &DesignGoal,
    bounds: &Bounds,
    cov: &NoiseCovariance,
    cfg: &OptimizerConfig,
) -> Result<DesignSolution> {
    goal.validate()?;
    check_model(m, bounds, cov)?;
    let t = goal.target_or_zero();
    let variance = |x: &[f64]| m.transmitted_unchecked(x, cov) + m.sigma2;
    let residual = |x: &[f64]| (m.mean_unchecked(x) - t).abs();

    let starts = start_set(m, bounds, cfg);
    let schedule: &[f64] = if cfg.penalty_schedule.is_empty() {
        &[1.0]
    } else {
        &cfg.penalty_schedule
    };

    let solve_one = |x0: &Vec<f64>| -> RestartOutcome {
        match goal.formulation {
            Formulation::ConstrainedTarget => {
                let mut x = x0.clone();
                let mut r = residual(&x);
                let mut trace = Vec::with_capacity(schedule.len());
                let mut simplex_converged = true;
                for (stage, &rho) in schedule.iter().enumerate() {
                    let simplex_cfg = if stage + 1 < schedule.len() {
                        SimplexConfig {
                            tolerance: cfg.stage_tolerance.max(cfg.simplex.tolerance),
                            ..cfg.simplex
                        }
                    } else {
                        cfg.simplex
                    };
                    let res = simplex::minimize(
                        |p| variance(p) + rho * (m.mean_unchecked(p) - t).powi(2),
                        &x,
                        bounds,
                        &simplex_cfg,
                    );
                    let rc = residual(&res.x);
                    if rc <= r {
                        x = res.x;
                        r = rc;
                        simplex_converged = res.converged;
                    }
                    trace.push(r);
                }
                let rho = *schedule.last().unwrap();
                RestartOutcome {
                    objective: variance(&x) + rho * r * r,
                    x,
                    trace,
                    simplex_converged,
                }
            }
            Formulation::Weighted => {
                let alpha = goal.alpha.expect("validated");
                let f = |p: &[f64]| {
                    alpha * variance(p) + (1.0 - alpha) * (m.mean_unchecked(p) - t).powi(2)
                };
                let res = simplex::minimize(f, x0, bounds, &cfg.simplex);
                RestartOutcome {
                    objective: res.value,
                    x: res.x,
                    trace: Vec::new(),
                    simplex_converged: res.converged,
                }
            }
            Formulation::SnrNominal | Formulation::SnrLarger | Formulation::SnrSmaller => {
                let mode = match goal.formulation {
                    Formulation::SnrNominal => SnrMode::Nominal { target: t },
                    Formulation::SnrLarger => SnrMode::Larger,
                    _ => SnrMode::Smaller,
                };
                let f = |p: &[f64]| -population_snr(m.mean_unchecked(p), variance(p), mode);
                let res = simplex::minimize(f, x0, bounds, &cfg.simplex);
                RestartOutcome {
                    objective: res.value,
                    x: res.x,
                    trace: Vec::new(),
                    simplex_converged: res.converged,
                }
            }
        }
    };

    let outcomes: Vec<RestartOutcome> = starts.par_iter().map(solve_one).collect();
    // lowest objective, earliest restart on ties
    let best = outcomes
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.objective.total_cmp(&b.objective).then(ia.cmp(ib)))
        .map(|(i, _)| i)
        .expect("at least one start");
    let chosen = &outcomes[best];
    let x_hat = chosen.x.clone();
    let predicted_mean = m.mean_unchecked(&x_hat);
    let predicted_variance = variance(&x_hat);
    let constraint_residual = if goal.formulation.needs_target() {
        (predicted_mean - t).abs()
    } else {
        0.0
    };
    let converged = match goal.formulation {
        Formulation::ConstrainedTarget => constraint_residual <= target_tolerance(t),
        _ => chosen.simplex_converged,
    };
    let at_bound = x_hat
        .iter()
        .zip(bounds.low.iter().zip(&bounds.high))
        .map(|(v, (l, h))| v <= l || v >= h)
        .collect();
    Ok(DesignSolution {
        predicted_mean,
        predicted_variance,
        constraint_residual,
        objective: chosen.objective,
        converged,
        restarts_used: outcomes.len(),
        at_bound,
        penalty_trace: chosen.trace.clone(),
        restart_objectives: outcomes.iter().map(|o| o.objective).collect(),
        x_hat,
    })
}

/// Unconstrained minimizer of the transmitted variance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceMinimizer {
    pub x: Vec<f64>,
    /// `beta4` is identically zero, so the variance does not depend on x.
    pub degenerate: bool,
}

/// Minimum-norm least-squares solution of `B4' x = -b3`, which minimizes
/// the transmitted variance when the noise covariance is a multiple of I.
pub fn closed_form_variance_min(m: &RsmModel) -> VarianceMinimizer {
    solve_min_norm(m, None)
}

/// Minimizer of `(b3 + B4'x)' S (b3 + B4'x)` for a general covariance S.
pub fn closed_form_variance_min_weighted(m: &RsmModel, cov: &NoiseCovariance) -> VarianceMinimizer {
    solve_min_norm(m, Some(cov))
}

fn solve_min_norm(m: &RsmModel, cov: Option<&NoiseCovariance>) -> VarianceMinimizer {
    let s = m.s();
    if s == 0 || m.beta4.iter().all(|v| *v == 0.0) {
        return VarianceMinimizer {
            x: vec![0.0; s],
            degenerate: true,
        };
    }
    let mut a: DMatrix<f64> = m.beta4.transpose();
    let mut b: DVector<f64> = -&m.beta3;
    if let Some(cov) = cov {
        let eig = cov.matrix().clone().symmetric_eigen();
        let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        let root = &eig.eigenvectors
            * DMatrix::from_diagonal(&sqrt_vals)
            * eig.eigenvectors.transpose();
        a = &root * a;
        b = &root * b;
    }
    let svd = a.svd(true, true);
    let eps = 1e-12 * svd.singular_values.max();
    let x = svd
        .solve(&b, eps)
        .map(|v| v.iter().copied().collect())
        .unwrap_or_else(|_| vec![0.0; s]);
    VarianceMinimizer {
        x,
        degenerate: false,
    }
}

/// Active-set enumeration above this many controls is refused.
pub const BOX_MIN_CAP: usize = 12;

/// Exact minimizer of the transmitted variance over `bounds`, found by
/// enumerating which coordinates sit at a bound and solving the rest by
/// least squares. For a degenerate model the box point closest to the
/// origin is returned.
pub fn box_variance_min(m: &RsmModel, cov: &NoiseCovariance, bounds: &Bounds) -> Result<VarianceMinimizer> {
    let s = m.s();
    if bounds.dim() != s {
        return Err(Error::DimensionMismatch {
            expected: s,
            got: bounds.dim(),
        });
    }
    if s > BOX_MIN_CAP {
        return Err(Error::PoolTooLarge { len: s, cap: BOX_MIN_CAP });
    }
    let free = solve_min_norm(m, Some(cov));
    if free.degenerate {
        let mut x = free.x;
        bounds.clamp(&mut x);
        return Ok(VarianceMinimizer { x, degenerate: true });
    }
    let eig = cov.matrix().clone().symmetric_eigen();
    let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();
    let a: DMatrix<f64> = &root * m.beta4.transpose();
    let b: DVector<f64> = &root * &m.beta3;
    let value = |x: &[f64]| (&a * DVector::from_column_slice(x) + &b).norm_squared();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut state = vec![0u8; s];
    loop {
        let free_ids: Vec<usize> = (0..s).filter(|&i| state[i] == 0).collect();
        let mut x: Vec<f64> = (0..s)
            .map(|i| match state[i] {
                1 => bounds.low[i],
                2 => bounds.high[i],
                _ => 0.0,
            })
            .collect();
        let mut feasible = true;
        if !free_ids.is_empty() {
            let mut rhs = -b.clone();
            for i in (0..s).filter(|&i| state[i] != 0) {
                rhs -= a.column(i) * x[i];
            }
            let sub = a.select_columns(&free_ids);
            let svd = sub.svd(true, true);
            let eps = 1e-12 * svd.singular_values.max();
            match svd.solve(&rhs, eps) {
                Ok(y) => {
                    for (k, &i) in free_ids.iter().enumerate() {
                        let span = 1e-12 * (1.0 + bounds.high[i].abs().max(bounds.low[i].abs()));
                        if y[k] < bounds.low[i] - span || y[k] > bounds.high[i] + span {
                            feasible = false;
                        }
                        x[i] = y[k].clamp(bounds.low[i], bounds.high[i]);
                    }
                }
                Err(_) => feasible = false,
            }
        }
        if feasible {
            let v = value(&x);
            if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                best = Some((v, x));
            }
        }
        // next assignment in base 3
        let mut k = 0;
        while k < s && state[k] == 2 {
            state[k] = 0;
            k += 1;
        }
        if k == s {
            break;
        }
        state[k] += 1;
    }
    let (_, x) = best.expect("all-bound assignments are feasible");
    Ok(VarianceMinimizer { x, degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_d(beta0: f64, beta1: f64, beta2: f64, beta3: f64, beta4: f64) -> RsmModel {
        RsmModel::from_parts(
            vec!["x1".into()],
            vec!["z1".into()],
            beta0,
            DVector::from_vec(vec![beta1]),
            DMatrix::from_element(1, 1, beta2),
            DVector::from_vec(vec![beta3]),
            DMatrix::from_element(1, 1, beta4),
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn vertex_and_degenerate() {
        let m = one_d(0.0, 0.0, 0.0, 2.0, 1.0);
        let v = closed_form_variance_min(&m);
        assert!((v.x[0] + 2.0).abs() < 1e-12);
        assert!(!v.degenerate);
        let flat = one_d(0.0, 1.0, 0.0, 2.0, 0.0);
        let v = closed_form_variance_min(&flat);
        assert_eq!(v.x, vec![0.0]);
        assert!(v.degenerate);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = one_d(0.0, 1.0, 0.0, 2.0, 1.0);
        let cov = NoiseCovariance::isotropic(1, 1.0).unwrap();
        let goal = DesignGoal::constrained_target(1.0).unwrap();
        let wrong = Bounds::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            optimize_design(&m, &goal, &wrong, &cov, &OptimizerConfig::default()),
            Err(Error::InvalidBounds(_))
        ));
    }

    #[test]
    fn penalty_trace_is_monotone() {
        let m = one_d(1.0, 1.0, 0.5, 2.0, 1.0);
        let cov = NoiseCovariance::isotropic(1, 1.0).unwrap();
        let goal = DesignGoal::constrained_target(3.0).unwrap();
        let b = Bounds::new(vec![-5.0], vec![5.0]).unwrap();
        let sol = optimize_design(&m, &goal, &b, &cov, &OptimizerConfig::default()).unwrap();
        assert_eq!(sol.penalty_trace.len(), 7);
        for w in sol.penalty_trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert!(sol.converged);
        assert!(sol.constraint_residual <= target_tolerance(3.0));
        assert_eq!(sol.restart_objectives.len(), 16);
        for o in &sol.restart_objectives {
            assert!(sol.objective <= *o);
        }
    }

    #[test]
    fn snr_goal_smaller_prefers_small_response() {
        // mean x^2 + 1 with constant variance: smaller-is-better wants x = 0
        let m = one_d(1.0, 0.0, 1.0, 0.5, 0.0);
        let cov = NoiseCovariance::isotropic(1, 1.0).unwrap();
        let b = Bounds::new(vec![-3.0], vec![2.0]).unwrap();
        let sol = optimize_design(&m, &DesignGoal::snr_smaller(), &b, &cov, &OptimizerConfig::default())
            .unwrap();
        assert!(sol.x_hat[0].abs() < 1e-4);
        assert_eq!(sol.constraint_residual, 0.0);
    }

    #[test]
    fn empty_subset_is_trivial() {
        let m = RsmModel::from_parts(
            vec![],
            vec!["z1".into()],
            2.0,
            DVector::zeros(0),
            DMatrix::zeros(0, 0),
            DVector::from_vec(vec![1.0]),
            DMatrix::zeros(0, 1),
            0.5,
        )
        .unwrap();
        let cov = NoiseCovariance::isotropic(1, 1.0).unwrap();
        let b = Bounds::new(vec![], vec![]).unwrap();
        let goal = DesignGoal::constrained_target(2.0).unwrap();
        let sol = optimize_design(&m, &goal, &b, &cov, &OptimizerConfig::default()).unwrap();
        assert!(sol.x_hat.is_empty());
        assert_eq!(sol.predicted_variance, 1.5);
        assert_eq!(sol.constraint_residual, 0.0);
    }
}
