//! Quadratic dual response surfaces: design matrix, least-squares fit, and
//! the mean and variance surfaces derived from the fit.

mod design;
mod fit;
mod surface;

pub use design::{term_count, term_label, terms, DesignMatrix, Term};
pub use fit::{fit_rsm, FitDiagnostics, RsmModel, RIDGE_CONDITION, RIDGE_SCALE};
pub use surface::{
    default_delta_step, delta_variance, ModelDocument, NoiseCovariance, TermCoefficient,
    PSD_TOLERANCE,
};
