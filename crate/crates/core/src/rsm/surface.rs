use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::fit::RsmModel;
use crate::error::{Error, Result};

/// Eigenvalues below `-PSD_TOLERANCE` reject a covariance matrix.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Validated (symmetric, positive semidefinite) noise covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCovariance(DMatrix<f64>);

impl NoiseCovariance {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("noise covariance".into()));
        }
        let scale = m.amax().max(1.0);
        if (&m - m.transpose()).amax() > 1e-12 * scale {
            return Err(Error::NotSymmetric);
        }
        if m.nrows() > 0 {
            let min = m.clone().symmetric_eigenvalues().min();
            if min < -PSD_TOLERANCE {
                return Err(Error::NotPsd(min));
            }
        }
        Ok(Self(m))
    }

    /// `variance * I`.
    pub fn isotropic(q: usize, variance: f64) -> Result<Self> {
        Self::new(DMatrix::from_diagonal_element(q, q, variance))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// `g' S g`.
    pub fn quadratic_form(&self, g: &[f64]) -> f64 {
        let q = self.dim();
        let mut acc = 0.0;
        for a in 0..q {
            let mut row = 0.0;
            for b in 0..q {
                row += self.0[(a, b)] * g[b];
            }
            acc += g[a] * row;
        }
        acc
    }
}

impl RsmModel {
    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.s() {
            return Err(Error::DimensionMismatch {
                expected: self.s(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Process mean `b0 + x'b1 + x'B2 x`.
    pub fn mean_surface(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.mean_unchecked(x))
    }

    pub(crate) fn mean_unchecked(&self, x: &[f64]) -> f64 {
        let s = self.s();
        let mut v = self.beta0;
        for i in 0..s {
            v += self.beta1[i] * x[i];
            let mut row = 0.0;
            for j in 0..s {
                row += self.beta2[(i, j)] * x[j];
            }
            v += x[i] * row;
        }
        v
    }

    /// Gradient of the response in z: `b3 + B4' x`.
    pub fn noise_slope(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        Ok(DVector::from_vec(self.slope_unchecked(x)))
    }

    pub(crate) fn slope_unchecked(&self, x: &[f64]) -> Vec<f64> {
        (0..self.q())
            .map(|k| {
                self.beta3[k]
                    + (0..self.s())
                        .map(|i| self.beta4[(i, k)] * x[i])
                        .sum::<f64>()
            })
            .collect()
    }

    fn check_cov(&self, cov: &NoiseCovariance) -> Result<()> {
        if cov.dim() != self.q() {
            return Err(Error::DimensionMismatch {
                expected: self.q(),
                got: cov.dim(),
            });
        }
        Ok(())
    }

    /// Variance transmitted from the noise variables,
    /// `(b3 + B4'x)' S (b3 + B4'x)`, excluding the residual variance.
    pub fn transmitted_variance(&self, x: &[f64], cov: &NoiseCovariance) -> Result<f64> {
        self.check_dim(x)?;
        self.check_cov(cov)?;
        Ok(self.transmitted_unchecked(x, cov))
    }

    pub(crate) fn transmitted_unchecked(&self, x: &[f64], cov: &NoiseCovariance) -> f64 {
        cov.quadratic_form(&self.slope_unchecked(x)).max(0.0)
    }

    /// Process variance: transmitted variance plus `sigma2`.
    pub fn variance_surface(&self, x: &[f64], cov: &NoiseCovariance) -> Result<f64> {
        Ok(self.transmitted_variance(x, cov)? + self.sigma2)
    }

    /// Full model prediction at (x, z), error term excluded.
    pub fn predict(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        if z.len() != self.q() {
            return Err(Error::DimensionMismatch {
                expected: self.q(),
                got: z.len(),
            });
        }
        let slope = self.slope_unchecked(x);
        Ok(self.mean_unchecked(x) + slope.iter().zip(z).map(|(g, v)| g * v).sum::<f64>())
    }

    pub fn to_document(&self) -> ModelDocument {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            m.row_iter().map(|r| r.iter().copied().collect()).collect()
        };
        ModelDocument {
            subset: self.subset.clone(),
            noise: self.noise_ids.clone(),
            terms: self
                .term_labels()
                .into_iter()
                .zip(self.coefficients().iter().copied())
                .map(|(label, coefficient)| TermCoefficient { label, coefficient })
                .collect(),
            beta0: self.beta0,
            beta1: self.beta1.iter().copied().collect(),
            beta2: rows(&self.beta2),
            beta3: self.beta3.iter().copied().collect(),
            beta4: rows(&self.beta4),
            sigma2: self.sigma2,
            diagnostics: self.diagnostics,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TermCoefficient {
    pub label: String,
    pub coefficient: f64,
}

/// Serializable view of a fitted model.
#[derive(Debug, Clone, Serialize)]
pub struct ModelDocument {
    pub subset: Vec<String>,
    pub noise: Vec<String>,
    pub terms: Vec<TermCoefficient>,
    pub beta0: f64,
    pub beta1: Vec<f64>,
    pub beta2: Vec<Vec<f64>>,
    pub beta3: Vec<f64>,
    pub beta4: Vec<Vec<f64>>,
    pub sigma2: f64,
    pub diagnostics: super::fit::FitDiagnostics,
}

/// Default finite-difference step: `1e-5 * (1 + largest noise std-dev)`.
pub fn default_delta_step(cov: &NoiseCovariance) -> f64 {
    let scale = (0..cov.dim())
        .map(|k| cov.matrix()[(k, k)].max(0.0).sqrt())
        .fold(0.0, f64::max);
    1e-5 * (1.0 + scale)
}

/// Transmission-of-error variance for an arbitrary response function.
///
/// `predict(x, z)` is differentiated in z at z = 0 by central differences;
/// the result is `g' S g + sigma2`.
pub fn delta_variance<F>(
    predict: F,
    x: &[f64],
    cov: &NoiseCovariance,
    sigma2: f64,
    step: f64,
) -> Result<f64>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidConfig(format!("delta step must be > 0, got {step}")));
    }
    let q = cov.dim();
    let mut z = vec![0.0; q];
    let mut grad = vec![0.0; q];
    for k in 0..q {
        z[k] = step;
        let up = predict(x, &z);
        z[k] = -step;
        let down = predict(x, &z);
        z[k] = 0.0;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite("prediction".into()));
        }
        grad[k] = (up - down) / (2.0 * step);
    }
    Ok(cov.quadratic_form(&grad) + sigma2)
}
