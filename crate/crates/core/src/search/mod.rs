//! Wrapper search over control-variable subsets. A subset's fitness is the
//! quality of the parameter design it supports.

mod fitness;
mod ga;

pub use fitness::{
    default_folds, BoundsPolicy, Chromosome, DesignScoring, Fitness, FitnessComponents, FitnessConfig,
    FitnessEvaluator, FitnessWeights,
};
pub use ga::{exhaustive_search, ga_search, rank_cmp, GaConfig, GenerationRecord, SearchResult, EXHAUSTIVE_CAP};
