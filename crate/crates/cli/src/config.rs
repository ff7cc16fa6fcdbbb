//! The run-config file format.

use std::path::{Path, PathBuf};

use robust_design::baseline::{Bins, RfConfig};
use robust_design::design::{DesignGoal, Formulation};
use robust_design::search::{BoundsPolicy, DesignScoring, GaConfig};
use robust_design::synth::{ExperimentSetting, Method};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Synth,
    Analyze,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; `--out` takes precedence.
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
    /// Worker threads; `None` uses every core.
    #[serde(default, skip_serializing)]
    pub jobs: Option<usize>,
    pub synth: Option<SynthSection>,
    pub data: Option<DataSection>,
    pub goal: Option<GoalSection>,
    #[serde(default)]
    pub ga: GaSection,
    #[serde(default)]
    pub fitness: FitnessSection,
    #[serde(default)]
    pub baselines: BaselineSection,
    /// Directory relative data paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    /// Preset setting ids.
    #[serde(default)]
    pub settings: Vec<u32>,
    /// Fully specified settings, run after the presets.
    #[serde(default)]
    pub custom: Vec<ExperimentSetting>,
    /// Replications per setting, replacing each setting's own count.
    pub runs: Option<usize>,
    /// Multiplies every setting's residual standard deviation.
    pub sigma_eps_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub path: PathBuf,
    pub response: String,
    pub controls: Vec<String>,
    pub noise: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalSection {
    pub formulation: Formulation,
    pub target: Option<f64>,
    pub alpha: Option<f64>,
}

impl GoalSection {
    pub fn goal(&self) -> Result<DesignGoal, CliError> {
        DesignGoal::new(self.formulation, self.target, self.alpha).map_err(CliError::from)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaSection {
    /// In synth mode these replace each setting's own GA size.
    pub population: Option<usize>,
    pub generations: Option<usize>,
    pub tournament_size: usize,
    pub crossover_prob: f64,
    pub mutation_prob: Option<f64>,
    pub elitism: usize,
    pub target_objective: Option<f64>,
    pub distinct: bool,
}

impl Default for GaSection {
    fn default() -> Self {
        let g = GaConfig::default();
        Self {
            population: None,
            generations: None,
            tournament_size: g.tournament_size,
            crossover_prob: g.crossover_prob,
            mutation_prob: g.mutation_prob,
            elitism: g.elitism,
            target_objective: g.target_objective,
            distinct: g.distinct,
        }
    }
}

impl GaSection {
    pub fn config(&self, seed: u64) -> GaConfig {
        let d = GaConfig::default();
        GaConfig {
            population: self.population.unwrap_or(d.population),
            generations: self.generations.unwrap_or(d.generations),
            tournament_size: self.tournament_size,
            crossover_prob: self.crossover_prob,
            mutation_prob: self.mutation_prob,
            elitism: self.elitism,
            seed,
            target_objective: self.target_objective,
            distinct: self.distinct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsSpec {
    Observed,
    SigmaBox(f64),
}

impl From<BoundsSpec> for BoundsPolicy {
    fn from(b: BoundsSpec) -> Self {
        match b {
            BoundsSpec::Observed => BoundsPolicy::Observed,
            BoundsSpec::SigmaBox(k) => BoundsPolicy::SigmaBox(k),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringSpec {
    InSample,
    #[default]
    CrossFit,
}

impl From<ScoringSpec> for DesignScoring {
    fn from(s: ScoringSpec) -> Self {
        match s {
            ScoringSpec::InSample => DesignScoring::InSample,
            ScoringSpec::CrossFit => DesignScoring::CrossFit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitnessSection {
    pub constraint_weight: Option<f64>,
    pub cardinality_weight: Option<f64>,
    pub scoring: ScoringSpec,
    /// Cross-validation folds; `None` uses 5, or leave-one-out below 25 rows.
    pub folds: Option<usize>,
    /// `None` means observed ranges in analyze mode and a 4-sigma box in
    /// synth mode.
    pub bounds: Option<BoundsSpec>,
    pub optimizer_starts: usize,
    pub lattice_points: usize,
}

impl Default for FitnessSection {
    fn default() -> Self {
        Self {
            constraint_weight: None,
            cardinality_weight: None,
            scoring: ScoringSpec::default(),
            folds: None,
            bounds: None,
            optimizer_starts: 16,
            lattice_points: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSection {
    pub enabled: Vec<Method>,
    /// Variables kept by each ranker in analyze mode; defaults to the size
    /// of the subset the GA selected.
    pub select_count: Option<usize>,
    pub bins: Bins,
    pub forest: RfConfig,
}

impl Default for BaselineSection {
    fn default() -> Self {
        Self {
            enabled: vec![Method::MiFilter, Method::RandomForest],
            select_count: None,
            bins: Bins::Auto,
            forest: RfConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        match self.mode {
            Mode::Synth => {
                let Some(s) = &self.synth else {
                    return bad("synth mode needs a [synth] section");
                };
                if s.settings.is_empty() && s.custom.is_empty() {
                    return bad("[synth] lists no settings");
                }
                let mut ids: Vec<u32> = s.settings.clone();
                ids.extend(s.custom.iter().map(|c| c.id));
                ids.sort_unstable();
                if ids.windows(2).any(|w| w[0] == w[1]) {
                    return bad("[synth] setting ids must be unique");
                }
                if s.runs == Some(0) {
                    return bad("[synth] runs must be >= 1");
                }
                if let Some(k) = s.sigma_eps_scale {
                    if !(k.is_finite() && k >= 0.0) {
                        return bad("[synth] sigma_eps_scale must be finite and >= 0");
                    }
                }
                if self.goal.is_some() {
                    return bad("synth mode takes its target from the ground truth; remove [goal]");
                }
            }
            Mode::Analyze => {
                let Some(d) = &self.data else {
                    return bad("analyze mode needs a [data] section");
                };
                if d.controls.is_empty() {
                    return bad("[data] controls is empty");
                }
                let Some(g) = &self.goal else {
                    return bad("analyze mode needs a [goal] section");
                };
                g.goal()?;
                if self.baselines.select_count == Some(0) {
                    return bad("[baselines] select_count must be >= 1");
                }
            }
        }
        if self.jobs == Some(0) {
            return bad("jobs must be >= 1");
        }
        if self.fitness.optimizer_starts == 0 {
            return bad("[fitness] optimizer_starts must be >= 1");
        }
        if let Some(BoundsSpec::SigmaBox(k)) = self.fitness.bounds {
            if !(k.is_finite() && k > 0.0) {
                return bad("[fitness] sigma_box must be positive");
            }
        }
        self.ga.config(0).validate()?;
        Ok(())
    }

    /// SHA-256 over the canonical serialization of everything that affects
    /// results (output location and thread count excluded).
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn data_path(&self) -> Option<PathBuf> {
        self.data.as_ref().map(|d| {
            if d.path.is_absolute() {
                d.path.clone()
            } else {
                self.base_dir.join(&d.path)
            }
        })
    }
}
