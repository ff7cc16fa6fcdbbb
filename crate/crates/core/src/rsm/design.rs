use nalgebra::DMatrix;

use crate::data::{Dataset, VariableRole};
use crate::error::{Error, Result};

/// One column of the quadratic design matrix. Indices refer to positions
/// in the subset (controls) and the noise list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Term {
    Intercept,
    Linear(usize),
    Quadratic(usize, usize),
    Noise(usize),
    Interaction(usize, usize),
}

/// Term list in canonical order: intercept, linear x, x_i*x_j for i <= j,
/// linear z, x_i*z_k.
pub fn terms(s: usize, q: usize) -> Vec<Term> {
    let mut t = Vec::with_capacity(term_count(s, q));
    t.push(Term::Intercept);
    t.extend((0..s).map(Term::Linear));
    for i in 0..s {
        for j in i..s {
            t.push(Term::Quadratic(i, j));
        }
    }
    t.extend((0..q).map(Term::Noise));
    for i in 0..s {
        for k in 0..q {
            t.push(Term::Interaction(i, k));
        }
    }
    t
}

pub fn term_count(s: usize, q: usize) -> usize {
    1 + s + s * (s + 1) / 2 + q + s * q
}

pub fn term_label(term: Term, subset: &[String], noise: &[String]) -> String {
    match term {
        Term::Intercept => "intercept".to_owned(),
        Term::Linear(i) => subset[i].clone(),
        Term::Quadratic(i, j) if i == j => format!("{}^2", subset[i]),
        Term::Quadratic(i, j) => format!("{}*{}", subset[i], subset[j]),
        Term::Noise(k) => noise[k].clone(),
        Term::Interaction(i, k) => format!("{}*{}", subset[i], noise[k]),
    }
}

/// Quadratic-in-x, linear-in-z design matrix with control-by-noise
/// interactions.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    matrix: DMatrix<f64>,
    terms: Vec<Term>,
    labels: Vec<String>,
    subset: Vec<String>,
    noise: Vec<String>,
}

impl DesignMatrix {
    /// Build from the dataset's control columns named in `subset` and all of
    /// its noise columns.
    pub fn build(d: &Dataset, subset: &[String]) -> Result<Self> {
        let xs = subset
            .iter()
            .map(|id| d.column_with_role(id, VariableRole::Control))
            .collect::<Result<Vec<_>>>()?;
        let noise = d.noise_ids();
        let zs: Vec<&[f64]> = noise
            .iter()
            .map(|id| d.column_with_role(id, VariableRole::Noise))
            .collect::<Result<_>>()?;
        Self::from_columns(&xs, &zs, subset.to_vec(), noise)
    }

    pub fn from_columns(
        xs: &[&[f64]],
        zs: &[&[f64]],
        subset: Vec<String>,
        noise: Vec<String>,
    ) -> Result<Self> {
        if xs.len() != subset.len() {
            return Err(Error::DimensionMismatch {
                expected: subset.len(),
                got: xs.len(),
            });
        }
        if zs.len() != noise.len() {
            return Err(Error::DimensionMismatch {
                expected: noise.len(),
                got: zs.len(),
            });
        }
        let n = xs.iter().chain(zs).map(|c| c.len()).next().unwrap_or(0);
        if let Some(bad) = xs.iter().chain(zs).find(|c| c.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        let terms = terms(subset.len(), noise.len());
        let matrix = DMatrix::from_fn(n, terms.len(), |r, c| match terms[c] {
            Term::Intercept => 1.0,
            Term::Linear(i) => xs[i][r],
            Term::Quadratic(i, j) => xs[i][r] * xs[j][r],
            Term::Noise(k) => zs[k][r],
            Term::Interaction(i, k) => xs[i][r] * zs[k][r],
        });
        let labels = terms
            .iter()
            .map(|t| term_label(*t, &subset, &noise))
            .collect();
        Ok(Self {
            matrix,
            terms,
            labels,
            subset,
            noise,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn subset(&self) -> &[String] {
        &self.subset
    }

    pub fn noise(&self) -> &[String] {
        &self.noise
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            matrix: self.matrix.select_rows(rows),
            terms: self.terms.clone(),
            labels: self.labels.clone(),
            subset: self.subset.clone(),
            noise: self.noise.clone(),
        }
    }
}
