//! Synthetic benchmark: ground-truth processes, observational samples and
//! selection metrics.

mod experiment;
mod metrics;
mod report;
mod sample;
mod settings;
mod truth;

pub use experiment::{
    replication_seed, run_experiment, ExperimentOptions, FailureRecord, Method, MethodAggregate, MetricsReport,
    ReplicationRecord, Summary,
};
pub use metrics::{compute_metrics, GroupRatio, SelectionMetrics};
pub use report::{write_aggregates_csv, write_replications_csv};
pub use sample::{center_known_noise, sample_observations, RESPONSE};
pub use settings::{CoefficientScale, ExperimentSetting, TargetRule};
pub use truth::{
    control_names, dummy_names, generate_ground_truth, noise_names, CaseStudyShape, ColumnMoments, GroundTruthModel,
};
