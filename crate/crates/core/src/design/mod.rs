//! Parameter design: choose control settings from a fitted model so the
//! mean hits a target while the transmitted variance is minimized.

mod goal;
mod optimize;
pub mod simplex;
mod snr;

pub use goal::{DesignGoal, Formulation};
pub use optimize::{
    box_variance_min, closed_form_variance_min, closed_form_variance_min_weighted, optimize_design,
    quantile_lattice, target_tolerance, DesignSolution, OptimizerConfig, VarianceMinimizer,
    BOX_MIN_CAP, TARGET_TOLERANCE,
};
pub use simplex::SimplexConfig;
pub use snr::{snr, snr_with, NominalDeviation, SnrMode};
