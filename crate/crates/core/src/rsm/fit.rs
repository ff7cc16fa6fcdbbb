use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::design::{term_label, terms, DesignMatrix, Term};
use crate::error::{Error, Result};

/// Relative condition estimate above which the plain solve is abandoned.
pub const RIDGE_CONDITION: f64 = 1e10;
/// Ridge penalty is this fraction of the mean diagonal of X'X.
pub const RIDGE_SCALE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitDiagnostics {
    /// Fewer rows than terms, or condition estimate above the ridge threshold.
    pub rank_deficient: bool,
    pub ridge: bool,
    /// `sigma2` was computed with an `n` denominator because `n <= p`.
    pub sigma2_degenerate: bool,
    pub condition: f64,
    pub r_squared: f64,
}

/// Fitted dual response model over one control subset.
///
/// `beta2` holds pure quadratic coefficients on the diagonal and half of
/// each fitted cross-term coefficient off the diagonal, so the mean surface
/// is the plain quadratic form `x' beta2 x`.
#[derive(Debug, Clone, PartialEq)]
pub struct RsmModel {
    pub subset: Vec<String>,
    pub noise_ids: Vec<String>,
    pub beta0: f64,
    pub beta1: DVector<f64>,
    pub beta2: DMatrix<f64>,
    pub beta3: DVector<f64>,
    /// s x q control-by-noise interactions.
    pub beta4: DMatrix<f64>,
    pub sigma2: f64,
    pub diagnostics: FitDiagnostics,
    coefficients: DVector<f64>,
}

impl RsmModel {
    /// Assemble a model from coefficient blocks (used for ground-truth models
    /// and hand-built examples).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        subset: Vec<String>,
        noise_ids: Vec<String>,
        beta0: f64,
        beta1: DVector<f64>,
        beta2: DMatrix<f64>,
        beta3: DVector<f64>,
        beta4: DMatrix<f64>,
        sigma2: f64,
    ) -> Result<Self> {
        let s = subset.len();
        let q = noise_ids.len();
        let dims_ok = beta1.len() == s
            && beta2.shape() == (s, s)
            && beta3.len() == q
            && beta4.shape() == (s, q);
        if !dims_ok {
            return Err(Error::DimensionMismatch {
                expected: s,
                got: beta1.len(),
            });
        }
        if (&beta2 - beta2.transpose()).amax() > 1e-12 {
            return Err(Error::NotSymmetric);
        }
        if !(sigma2 >= 0.0) {
            return Err(Error::NonFinite("sigma2".into()));
        }
        let all = std::iter::once(beta0)
            .chain(beta1.iter().copied())
            .chain(beta2.iter().copied())
            .chain(beta3.iter().copied())
            .chain(beta4.iter().copied());
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model coefficients".into()));
        }
        let coefficients = DVector::from_iterator(
            super::design::term_count(s, q),
            terms(s, q).into_iter().map(|t| match t {
                Term::Intercept => beta0,
                Term::Linear(i) => beta1[i],
                Term::Quadratic(i, j) if i == j => beta2[(i, i)],
                Term::Quadratic(i, j) => 2.0 * beta2[(i, j)],
                Term::Noise(k) => beta3[k],
                Term::Interaction(i, k) => beta4[(i, k)],
            }),
        );
        Ok(Self {
            subset,
            noise_ids,
            beta0,
            beta1,
            beta2,
            beta3,
            beta4,
            sigma2,
            diagnostics: FitDiagnostics {
                rank_deficient: false,
                ridge: false,
                sigma2_degenerate: false,
                condition: 1.0,
                r_squared: 1.0,
            },
            coefficients,
        })
    }

    pub fn s(&self) -> usize {
        self.subset.len()
    }

    pub fn q(&self) -> usize {
        self.noise_ids.len()
    }

    /// Coefficients in design-matrix term order.
    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn term_labels(&self) -> Vec<String> {
        terms(self.s(), self.q())
            .into_iter()
            .map(|t| term_label(t, &self.subset, &self.noise_ids))
            .collect()
    }

    /// Predictions for every row of a design matrix built on the same terms.
    pub fn predict_design(&self, dm: &DesignMatrix) -> Result<DVector<f64>> {
        if dm.cols() != self.coefficients.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coefficients.len(),
                got: dm.cols(),
            });
        }
        Ok(dm.matrix() * &self.coefficients)
    }

    pub fn has_non_finite(&self) -> bool {
        self.coefficients.iter().any(|v| !v.is_finite()) || !self.sigma2.is_finite()
    }
}

/// Least-squares fit of the quadratic response model.
///
/// Solved through a Householder QR of the design matrix. When the system is
/// underdetermined or the condition estimate of R exceeds
/// [`RIDGE_CONDITION`], the augmented system `[X; sqrt(l) I]` is solved
/// instead with `l = 1e-8 * trace(X'X) / p`.
pub fn fit_rsm(dm: &DesignMatrix, y: &[f64]) -> Result<RsmModel> {
    let x = dm.matrix();
    let (n, p) = x.shape();
    if n == 0 {
        return Err(Error::NoRows);
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("response".into()));
    }
    let yv = DVector::from_column_slice(y);

    let mut condition = f64::INFINITY;
    let mut solution = None;
    if n >= p {
        let qr = x.clone().qr();
        let r = qr.r();
        let sv = r.singular_values();
        let (max, min) = (sv.max(), sv.min());
        condition = if min > 0.0 { max / min } else { f64::INFINITY };
        if condition <= RIDGE_CONDITION {
            let qty = qr.q().transpose() * &yv;
            solution = r.solve_upper_triangular(&qty);
        }
    }
    let ridge = solution.is_none();
    let beta = match solution {
        Some(b) => b,
        None => ridge_solve(x, &yv)?,
    };
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fitted coefficients".into()));
    }

    let fitted = x * &beta;
    let rss: f64 = (&yv - &fitted).iter().map(|r| r * r).sum();
    let sigma2_degenerate = n <= p;
    let sigma2 = if sigma2_degenerate {
        rss / n as f64
    } else {
        rss / (n - p) as f64
    };
    let ybar = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };

    let s = dm.subset().len();
    let q = dm.noise().len();
    let mut beta0 = 0.0;
    let mut beta1 = DVector::zeros(s);
    let mut beta2 = DMatrix::zeros(s, s);
    let mut beta3 = DVector::zeros(q);
    let mut beta4 = DMatrix::zeros(s, q);
    for (term, &b) in dm.terms().iter().zip(beta.iter()) {
        match *term {
            Term::Intercept => beta0 = b,
            Term::Linear(i) => beta1[i] = b,
            Term::Quadratic(i, j) if i == j => beta2[(i, i)] = b,
            Term::Quadratic(i, j) => {
                beta2[(i, j)] = 0.5 * b;
                beta2[(j, i)] = 0.5 * b;
            }
            Term::Noise(k) => beta3[k] = b,
            Term::Interaction(i, k) => beta4[(i, k)] = b,
        }
    }
    Ok(RsmModel {
        subset: dm.subset().to_vec(),
        noise_ids: dm.noise().to_vec(),
        beta0,
        beta1,
        beta2,
        beta3,
        beta4,
        sigma2,
        diagnostics: FitDiagnostics {
            rank_deficient: ridge,
            ridge,
            sigma2_degenerate,
            condition,
            r_squared,
        },
        coefficients: beta,
    })
}

fn ridge_solve(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let (n, p) = x.shape();
    let trace: f64 = x.iter().map(|v| v * v).sum();
    let lambda = RIDGE_SCALE * trace / p as f64;
    let mut aug = DMatrix::zeros(n + p, p);
    aug.view_mut((0, 0), (n, p)).copy_from(x);
    let root = lambda.sqrt();
    for j in 0..p {
        aug[(n + j, j)] = root;
    }
    let mut rhs = DVector::zeros(n + p);
    rhs.rows_mut(0, n).copy_from(y);
    let qr = aug.qr();
    let qty = qr.q().transpose() * rhs;
    qr.r()
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::NonFinite("ridge solve".into()))
}
