use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::data::{Bounds, Dataset, FoldAssignment};
use crate::design::{optimize_design, quantile_lattice, DesignGoal, DesignSolution, OptimizerConfig};
use crate::error::{Error, Result};
use crate::rng;
use crate::rsm::{fit_rsm, DesignMatrix, NoiseCovariance, RsmModel};

/// Inclusion mask over the candidate control pool.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Chromosome(pub Vec<bool>);

impl Chromosome {
    pub fn empty(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn from_indices(len: usize, on: &[usize]) -> Self {
        let mut bits = vec![false; len];
        for &i in on {
            bits[i] = true;
        }
        Self(bits)
    }

    /// Pattern `index` of the 2^L enumeration; the first pool variable is
    /// the most significant bit.
    pub fn from_index(len: usize, index: u64) -> Self {
        Self((0..len).map(|j| (index >> (len - 1 - j)) & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }

    pub fn selected<'a>(&self, pool: &'a [String]) -> Vec<&'a String> {
        pool.iter().zip(&self.0).filter(|(_, b)| **b).map(|(n, _)| n).collect()
    }

    pub fn key(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, b| (acc << 1) | u64::from(*b))
    }
}

impl fmt::Display for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// How the optimizer's search box is derived for a subset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BoundsPolicy {
    /// Observed per-column [min, max].
    Observed,
    /// Mean ± k standard deviations (covering all observations).
    SigmaBox(f64),
}

impl BoundsPolicy {
    pub fn bounds(&self, d: &Dataset, ids: &[String]) -> Result<Bounds> {
        match *self {
            Self::Observed => Bounds::observed(d, ids),
            Self::SigmaBox(k) => Bounds::sigma_box(d, ids, k),
        }
    }
}

/// Penalty weights; `None` selects the data-scaled default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct FitnessWeights {
    /// Weight on the squared target residual. Default `1e3 / (1 + t^2)`.
    pub constraint: Option<f64>,
    /// Weight per selected variable. Default `1e-3 * Var(y)`.
    pub cardinality: Option<f64>,
}

/// How the design terms of the fitness are estimated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub enum DesignScoring {
    /// Variance and target residual of the full-data model at its own
    /// optimum.
    InSample,
    /// The subset is fitted on two random halves; each half's optimum is
    /// scored by the other half's model and the two scores averaged.
    #[default]
    CrossFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitnessConfig {
    pub weights: FitnessWeights,
    pub scoring: DesignScoring,
    pub optimizer: OptimizerConfig,
    pub bounds: BoundsPolicy,
    /// Quantile-lattice starts handed to the optimizer per subset.
    pub lattice_points: usize,
}

impl Default for FitnessConfig {
    fn default() -> Self {
        Self {
            weights: FitnessWeights::default(),
            scoring: DesignScoring::default(),
            optimizer: OptimizerConfig::default(),
            bounds: BoundsPolicy::Observed,
            lattice_points: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitnessComponents {
    /// Transmitted variance at x-hat, as estimated by the configured
    /// scoring.
    pub transmitted_variance: f64,
    /// Mean out-of-fold squared residual.
    pub cv_sigma2: f64,
    pub constraint_penalty: f64,
    pub cardinality_penalty: f64,
}

impl FitnessComponents {
    pub fn compose(
        transmitted_variance: f64,
        cv_sigma2: f64,
        constraint_residual: f64,
        selected: usize,
        rho_constraint: f64,
        rho_cardinality: f64,
    ) -> Self {
        Self {
            transmitted_variance: transmitted_variance.max(0.0),
            cv_sigma2: cv_sigma2.max(0.0),
            constraint_penalty: rho_constraint * constraint_residual * constraint_residual,
            cardinality_penalty: rho_cardinality * selected as f64,
        }
    }

    pub fn objective(&self) -> f64 {
        self.transmitted_variance + self.cv_sigma2 + self.constraint_penalty + self.cardinality_penalty
    }
}

/// Score of one control subset (lower is better).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fitness {
    pub objective: f64,
    pub components: FitnessComponents,
    pub selected: Vec<String>,
    pub solution: DesignSolution,
    #[serde(skip)]
    pub model: RsmModel,
}

/// `k = 5` folds, or leave-one-out below 25 observations.
pub fn default_folds(n: usize, seed: u64) -> Result<FoldAssignment> {
    if n < 25 {
        FoldAssignment::leave_one_out(n)
    } else {
        FoldAssignment::new(n, 5, seed)
    }
}

/// Fits, cross-validates and optimizes one subset at a time, memoizing by
/// bit pattern. Shared across threads.
pub struct FitnessEvaluator<'a> {
    data: &'a Dataset,
    goal: DesignGoal,
    pool: Vec<String>,
    folds: FoldAssignment,
    halves: Option<FoldAssignment>,
    cov: NoiseCovariance,
    cfg: FitnessConfig,
    rho_constraint: f64,
    rho_cardinality: f64,
    cache: Mutex<HashMap<Chromosome, Arc<Fitness>>>,
    computed: AtomicUsize,
}

impl<'a> FitnessEvaluator<'a> {
    /// `data` is expected to have centered noise columns. The noise
    /// covariance defaults to the sample covariance of `data`.
    pub fn new(
        data: &'a Dataset,
        goal: DesignGoal,
        pool: Vec<String>,
        folds: FoldAssignment,
        cfg: FitnessConfig,
    ) -> Result<Self> {
        let cov = NoiseCovariance::new(data.noise_covariance()?)?;
        Self::with_covariance(data, goal, pool, folds, cfg, cov)
    }

    pub fn with_covariance(
        data: &'a Dataset,
        goal: DesignGoal,
        pool: Vec<String>,
        folds: FoldAssignment,
        cfg: FitnessConfig,
        cov: NoiseCovariance,
    ) -> Result<Self> {
        goal.validate()?;
        if folds.membership().len() != data.n() {
            return Err(Error::DimensionMismatch {
                expected: data.n(),
                got: folds.membership().len(),
            });
        }
        for id in &pool {
            data.column_with_role(id, crate::data::VariableRole::Control)?;
        }
        let y = data.response();
        let n = y.len() as f64;
        let ybar = y.iter().sum::<f64>() / n;
        let var_y = if y.len() > 1 {
            y.iter().map(|v| (v - ybar).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let t = goal.target_or_zero();
        let rho_constraint = cfg.weights.constraint.unwrap_or(1e3 / (1.0 + t * t));
        let rho_cardinality = cfg.weights.cardinality.unwrap_or(1e-3 * var_y);
        let halves = match cfg.scoring {
            DesignScoring::CrossFit if data.n() >= 4 => Some(FoldAssignment::new(
                data.n(),
                2,
                rng::derive_seed(cfg.optimizer.seed, &[0x4A1F]),
            )?),
            _ => None,
        };
        Ok(Self {
            data,
            goal,
            pool,
            folds,
            halves,
            cov,
            cfg,
            rho_constraint,
            rho_cardinality,
            cache: Mutex::new(HashMap::new()),
            computed: AtomicUsize::new(0),
        })
    }

    pub fn pool(&self) -> &[String] {
        &self.pool
    }

    pub fn goal(&self) -> &DesignGoal {
        &self.goal
    }

    pub fn covariance(&self) -> &NoiseCovariance {
        &self.cov
    }

    pub fn weights(&self) -> (f64, f64) {
        (self.rho_constraint, self.rho_cardinality)
    }

    /// Number of distinct patterns actually computed (cache misses).
    pub fn computed(&self) -> usize {
        self.computed.load(Ordering::Relaxed)
    }

    pub fn evaluate(&self, bits: &Chromosome) -> Result<Arc<Fitness>> {
        if bits.len() != self.pool.len() {
            return Err(Error::DimensionMismatch {
                expected: self.pool.len(),
                got: bits.len(),
            });
        }
        if let Some(hit) = self.cache.lock().expect("cache lock").get(bits) {
            return Ok(Arc::clone(hit));
        }
        let fitness = Arc::new(self.compute(bits)?);
        self.computed.fetch_add(1, Ordering::Relaxed);
        // last write wins; values are deterministic per pattern
        let mut cache = self.cache.lock().expect("cache lock");
        let entry = cache.entry(bits.clone()).or_insert_with(|| Arc::clone(&fitness));
        Ok(Arc::clone(entry))
    }

    fn compute(&self, bits: &Chromosome) -> Result<Fitness> {
        let subset: Vec<String> = bits.selected(&self.pool).into_iter().cloned().collect();
        let dm = DesignMatrix::build(self.data, &subset)?;
        let y = self.data.response();
        let model = fit_rsm(&dm, y)?;
        let cv_sigma2 = self.cross_validated_sigma2(&dm, y)?;

        let bounds = self.cfg.bounds.bounds(self.data, &subset)?;
        let lattice = quantile_lattice(self.data, &subset, self.cfg.lattice_points)?;
        let opt = self
            .cfg
            .optimizer
            .clone()
            .with_seed(rng::derive_seed(self.cfg.optimizer.seed, &[bits.key(), bits.len() as u64]))
            .with_start_points(lattice);
        let solution = optimize_design(&model, &self.goal, &bounds, &self.cov, &opt)?;

        let (transmitted, residual) = match &self.halves {
            Some(halves) => (self.cross_fit(&dm, y, halves, &bounds, &opt)?, solution.constraint_residual),
            None => (solution.predicted_variance - model.sigma2, solution.constraint_residual),
        };
        let components = FitnessComponents::compose(
            transmitted,
            cv_sigma2,
            residual,
            subset.len(),
            self.rho_constraint,
            self.rho_cardinality,
        );
        Ok(Fitness {
            objective: components.objective(),
            components,
            selected: subset,
            solution,
            model,
        })
    }

    /// Mean transmitted variance of each half's optimum under the opposite
    /// half's model.
    fn cross_fit(
        &self,
        dm: &DesignMatrix,
        y: &[f64],
        halves: &FoldAssignment,
        bounds: &Bounds,
        opt: &OptimizerConfig,
    ) -> Result<f64> {
        let models = (0..2)
            .map(|h| {
                let rows = halves.split(h).1;
                let ys: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
                fit_rsm(&dm.select_rows(&rows), &ys)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut tv = 0.0;
        for h in 0..2 {
            let cfg = opt.clone().with_seed(rng::derive_seed(opt.seed, &[h as u64]));
            let sol = optimize_design(&models[h], &self.goal, bounds, &self.cov, &cfg)?;
            tv += models[1 - h].transmitted_variance(&sol.x_hat, &self.cov)?;
        }
        if !tv.is_finite() {
            return Err(Error::NonFinite("cross-fitted transmitted variance".into()));
        }
        Ok(tv / 2.0)
    }

    fn cross_validated_sigma2(&self, dm: &DesignMatrix, y: &[f64]) -> Result<f64> {
        let mut sse = 0.0;
        let mut count = 0usize;
        for f in 0..self.folds.k() {
            let (train, held) = self.folds.split(f);
            if held.is_empty() || train.is_empty() {
                continue;
            }
            let train_y: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            let model = fit_rsm(&dm.select_rows(&train), &train_y)?;
            let pred = model.predict_design(&dm.select_rows(&held))?;
            for (p, &i) in pred.iter().zip(&held) {
                sse += (y[i] - p).powi(2);
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::InsufficientObservations { needed: 2, got: y.len() });
        }
        let v = sse / count as f64;
        if !v.is_finite() {
            return Err(Error::NonFinite("cross-validated residuals".into()));
        }
        Ok(v)
    }
}
