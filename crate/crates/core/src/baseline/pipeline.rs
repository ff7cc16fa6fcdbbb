use serde::{Deserialize, Serialize};

use super::forest::{rf_rank, RfConfig};
use super::mi::{mi_rank, Bins};
use super::RankedVariables;
use crate::data::Dataset;
use crate::design::{optimize_design, quantile_lattice, DesignGoal, DesignSolution, OptimizerConfig};
use crate::error::{Error, Result};
use crate::rsm::{fit_rsm, DesignMatrix, NoiseCovariance, RsmModel};
use crate::search::BoundsPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ranker {
    #[serde(rename = "mi")]
    MutualInformation,
    #[serde(rename = "rf")]
    RandomForest,
}

impl Ranker {
    pub fn label(self) -> &'static str {
        match self {
            Ranker::MutualInformation => "mi_filter",
            Ranker::RandomForest => "random_forest",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub bins: Bins,
    pub forest: RfConfig,
    pub optimizer: OptimizerConfig,
    pub bounds: BoundsPolicy,
    pub lattice_points: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            bins: Bins::Auto,
            forest: RfConfig::default(),
            optimizer: OptimizerConfig::default(),
            bounds: BoundsPolicy::Observed,
            lattice_points: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub ranker: Ranker,
    pub ranking: RankedVariables,
    /// Top-C variables, in pool order.
    pub selected: Vec<String>,
    pub model: RsmModel,
    pub solution: DesignSolution,
}

/// Rank, keep the top `select_count`, fit on them and optimize the design.
/// `select_count` above the pool size selects the whole pool.
pub fn sequential_pipeline(
    d: &Dataset,
    pool: &[String],
    ranker: Ranker,
    select_count: usize,
    goal: &DesignGoal,
    cfg: &PipelineConfig,
) -> Result<PipelineResult> {
    if select_count == 0 {
        return Err(Error::InvalidConfig("select_count must be >= 1".into()));
    }
    let ranking = match ranker {
        Ranker::MutualInformation => mi_rank(d, pool, cfg.bins)?,
        Ranker::RandomForest => rf_rank(d, pool, &cfg.forest)?,
    };
    let top = ranking.top(select_count.min(pool.len()));
    let selected: Vec<String> = pool.iter().filter(|id| top.contains(id)).cloned().collect();

    let dm = DesignMatrix::build(d, &selected)?;
    let model = fit_rsm(&dm, d.response())?;
    let cov = NoiseCovariance::new(d.noise_covariance()?)?;
    let bounds = cfg.bounds.bounds(d, &selected)?;
    let opt = cfg
        .optimizer
        .clone()
        .with_start_points(quantile_lattice(d, &selected, cfg.lattice_points)?);
    let solution = optimize_design(&model, goal, &bounds, &cov, &opt)?;
    Ok(PipelineResult {
        ranker,
        ranking,
        selected,
        model,
        solution,
    })
}
