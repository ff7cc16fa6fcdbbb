use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, SelectionMetrics};
use super::sample::{center_known_noise, sample_observations};
use super::settings::ExperimentSetting;
use super::truth::{generate_ground_truth, GroundTruthModel};
use crate::baseline::{sequential_pipeline, PipelineConfig, Ranker};
use crate::data::{Dataset, FoldAssignment};
use crate::design::{DesignGoal, DesignSolution};
use crate::error::{Error, Result};
use crate::rng;
use crate::rsm::RsmModel;
use crate::search::{default_folds, ga_search, BoundsPolicy, FitnessConfig, FitnessEvaluator, GaConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Proposed,
    MiFilter,
    RandomForest,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Proposed, Method::MiFilter, Method::RandomForest];

    pub fn label(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::MiFilter => "mi_filter",
            Method::RandomForest => "random_forest",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOptions {
    pub fitness: FitnessConfig,
    pub pipeline: PipelineConfig,
    /// Operator settings for the GA; population and generations come from
    /// the setting unless overridden here.
    pub ga: GaConfig,
    pub ga_size: Option<(usize, usize)>,
    /// Fold count for cross-validation; `None` uses the default rule.
    pub folds: Option<usize>,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        let fitness = FitnessConfig {
            bounds: BoundsPolicy::SigmaBox(4.0),
            ..FitnessConfig::default()
        };
        let pipeline = PipelineConfig {
            bounds: BoundsPolicy::SigmaBox(4.0),
            ..PipelineConfig::default()
        };
        Self {
            fitness,
            pipeline,
            ga: GaConfig::default(),
            ga_size: None,
            folds: None,
        }
    }
}

/// Per-replication, per-method outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub setting: u32,
    pub replication: usize,
    pub method: Method,
    pub selected: Vec<String>,
    pub metrics: SelectionMetrics,
    pub target: f64,
    pub predicted_mean: f64,
    pub predicted_variance: f64,
    pub constraint_residual: f64,
    pub converged: bool,
    /// Under the true process.
    pub achieved_mean: f64,
    pub achieved_variance: f64,
    pub optimum_variance: f64,
    #[serde(skip)]
    pub runtime_ms: f64,
}

impl ReplicationRecord {
    pub fn abs_mean_error(&self) -> f64 {
        (self.achieved_mean - self.target).abs()
    }

    pub fn variance_ratio(&self) -> f64 {
        self.achieved_variance / self.optimum_variance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureRecord {
    pub setting: u32,
    pub replication: usize,
    pub method: Method,
    pub message: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub count: usize,
}

impl Summary {
    /// Mean, sample standard deviation and median; NaN when empty.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
                median: f64::NAN,
                count: 0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        Self { mean, std, median, count: n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodAggregate {
    pub setting: u32,
    pub method: Method,
    pub replications: usize,
    pub failed: usize,
    pub real_fraction: Summary,
    pub dummy_fraction: Summary,
    /// Over replications that produced a usable group mean.
    pub ratios: [Summary; 4],
    pub ratio_missing: [usize; 4],
    pub abs_mean_error: Summary,
    pub variance_ratio: Summary,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub setting: ExperimentSetting,
    pub master_seed: u64,
    pub methods: Vec<Method>,
    pub records: Vec<ReplicationRecord>,
    pub failures: Vec<FailureRecord>,
    pub aggregates: Vec<MethodAggregate>,
}

impl MetricsReport {
    pub fn aggregate(&self, method: Method) -> Option<&MethodAggregate> {
        self.aggregates.iter().find(|a| a.method == method)
    }

    pub fn records_for(&self, method: Method) -> impl Iterator<Item = &ReplicationRecord> {
        self.records.iter().filter(move |r| r.method == method)
    }

    /// Human-readable digest.
    pub fn summary(&self) -> String {
        let s = &self.setting;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "setting {}: C={} N={} D={} O={} sigma_eps={} runs={} ga={}x{}",
            s.id, s.controls, s.noise, s.dummies, s.observations, s.sigma_eps, s.runs, s.ga_pop, s.ga_gens
        );
        for a in &self.aggregates {
            let _ = writeln!(
                out,
                "  {:<14} reps={:<3} failed={:<2} real={:.3}±{:.3} dummy={:.3}±{:.3} ratio(b1..b4)={} |mean-t|={:.4} var/opt={:.4}",
                a.method.label(),
                a.replications,
                a.failed,
                a.real_fraction.mean,
                a.real_fraction.std,
                a.dummy_fraction.mean,
                a.dummy_fraction.std,
                a.ratios
                    .iter()
                    .map(|r| format!("{:.3}", r.mean))
                    .collect::<Vec<_>>()
                    .join("/"),
                a.abs_mean_error.mean,
                a.variance_ratio.mean,
            );
        }
        for f in &self.failures {
            let _ = writeln!(out, "  FAILED replication {} {}: {}", f.replication, f.method.label(), f.message);
        }
        out
    }
}

/// Seed for stream `stream` of replication `r`.
pub fn replication_seed(master: u64, setting: u32, r: usize, stream: u64) -> u64 {
    rng::derive_seed(master, &[setting as u64, r as u64, stream])
}

struct Outcome {
    selected: Vec<String>,
    model: RsmModel,
    solution: DesignSolution,
}

fn run_method(
    method: Method,
    data: &Dataset,
    truth: &GroundTruthModel,
    goal: &DesignGoal,
    folds: &FoldAssignment,
    s: &ExperimentSetting,
    opts: &ExperimentOptions,
    seed_of: impl Fn(u64) -> u64,
) -> Result<Outcome> {
    let pool = data.control_ids();
    match method {
        Method::Proposed => {
            let mut cfg = opts.fitness.clone();
            cfg.optimizer.seed = seed_of(6);
            let eval = FitnessEvaluator::new(data, goal.clone(), pool, folds.clone(), cfg)?;
            let (pop, gens) = opts.ga_size.unwrap_or((s.ga_pop, s.ga_gens));
            let ga = GaConfig {
                population: pop,
                generations: gens,
                seed: seed_of(4),
                ..opts.ga.clone()
            };
            let res = ga_search(&eval, &ga)?;
            Ok(Outcome {
                selected: res.fitness.selected.clone(),
                model: res.fitness.model.clone(),
                solution: res.fitness.solution.clone(),
            })
        }
        Method::MiFilter | Method::RandomForest => {
            let mut cfg = opts.pipeline.clone();
            cfg.forest.seed = seed_of(5);
            cfg.optimizer.seed = seed_of(6);
            let ranker = if method == Method::MiFilter {
                Ranker::MutualInformation
            } else {
                Ranker::RandomForest
            };
            let res = sequential_pipeline(data, &pool, ranker, truth.true_controls().len(), goal, &cfg)?;
            Ok(Outcome {
                selected: res.selected,
                model: res.model,
                solution: res.solution,
            })
        }
    }
}

fn replicate(
    s: &ExperimentSetting,
    methods: &[Method],
    master: u64,
    r: usize,
    opts: &ExperimentOptions,
) -> Vec<std::result::Result<ReplicationRecord, FailureRecord>> {
    let seed_of = |stream: u64| replication_seed(master, s.id, r, stream);
    let fail_all = |e: Error| {
        methods
            .iter()
            .map(|&method| {
                Err(FailureRecord {
                    setting: s.id,
                    replication: r,
                    method,
                    message: e.to_string(),
                })
            })
            .collect()
    };
    let prepared = (|| -> Result<_> {
        let truth = generate_ground_truth(s, seed_of(1))?;
        let raw = sample_observations(&truth, s.observations, seed_of(2))?;
        let data = center_known_noise(&raw, &truth)?;
        let folds = match opts.folds {
            Some(k) => FoldAssignment::new(data.n(), k, seed_of(3))?,
            None => default_folds(data.n(), seed_of(3))?,
        };
        let goal = DesignGoal::constrained_target(truth.target)?;
        Ok((truth, data, folds, goal))
    })();
    let (truth, data, folds, goal) = match prepared {
        Ok(p) => p,
        Err(e) => return fail_all(e),
    };
    let optimum = truth.optimum_variance();

    methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let scored = run_method(method, &data, &truth, &goal, &folds, s, opts, seed_of).and_then(|o| {
                let (achieved_mean, achieved_variance) = truth.evaluate_design(&o.selected, &o.solution.x_hat)?;
                Ok(ReplicationRecord {
                    setting: s.id,
                    replication: r,
                    method,
                    metrics: compute_metrics(&o.selected, &o.model, &truth),
                    selected: o.selected,
                    target: truth.target,
                    predicted_mean: o.solution.predicted_mean,
                    predicted_variance: o.solution.predicted_variance,
                    constraint_residual: o.solution.constraint_residual,
                    converged: o.solution.converged,
                    achieved_mean,
                    achieved_variance,
                    optimum_variance: optimum,
                    runtime_ms: start.elapsed().as_secs_f64() * 1e3,
                })
            });
            scored.map_err(|e| {
                log::warn!("setting {} replication {} {} failed: {e}", s.id, r, method.label());
                FailureRecord {
                    setting: s.id,
                    replication: r,
                    method,
                    message: e.to_string(),
                }
            })
        })
        .collect()
}

fn aggregate(s: &ExperimentSetting, method: Method, records: &[ReplicationRecord], failed: usize) -> MethodAggregate {
    let mine: Vec<&ReplicationRecord> = records.iter().filter(|r| r.method == method).collect();
    let col = |f: &dyn Fn(&ReplicationRecord) -> Option<f64>| -> Summary {
        Summary::of(&mine.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
    };
    let ratios = [0, 1, 2, 3].map(|g| col(&|r| r.metrics.ratios[g].mean));
    let ratio_missing = [0, 1, 2, 3].map(|g| mine.iter().map(|r| r.metrics.ratios[g].missing).sum());
    MethodAggregate {
        setting: s.id,
        method,
        replications: mine.len(),
        failed,
        real_fraction: col(&|r| Some(r.metrics.real_fraction)),
        dummy_fraction: col(&|r| Some(r.metrics.dummy_fraction)),
        ratios,
        ratio_missing,
        abs_mean_error: col(&|r| Some(r.abs_mean_error())),
        variance_ratio: col(&|r| Some(r.variance_ratio())),
        runtime_ms: mine.iter().map(|r| r.runtime_ms).sum(),
    }
}

/// Run every method on `s.runs` replications. Replication `r` draws all of
/// its randomness from `(master_seed, s.id, r)`, and all methods share its
/// dataset.
pub fn run_experiment(
    s: &ExperimentSetting,
    methods: &[Method],
    master_seed: u64,
    opts: &ExperimentOptions,
) -> Result<MetricsReport> {
    s.validate()?;
    if methods.is_empty() {
        return Err(Error::InvalidConfig("no methods requested".into()));
    }
    let mut methods = methods.to_vec();
    methods.sort();
    methods.dedup();

    let outcomes: Vec<_> = (0..s.runs)
        .into_par_iter()
        .map(|r| replicate(s, &methods, master_seed, r, opts))
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes.into_iter().flatten() {
        match o {
            Ok(rec) => records.push(rec),
            Err(f) => failures.push(f),
        }
    }
    let aggregates = methods
        .iter()
        .map(|&m| aggregate(s, m, &records, failures.iter().filter(|f| f.method == m).count()))
        .collect();
    Ok(MetricsReport {
        setting: s.clone(),
        master_seed,
        methods,
        records,
        failures,
        aggregates,
    })
}
