//! Observational datasets: column roles, loading, noise centering, noise
//! covariance, optimization bounds and fold assignment.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// What a column means to the process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableRole {
    Control,
    Noise,
    Response,
}

/// Ordered column-name to role map. Column order in the resulting
/// [`Dataset`] follows the schema, not the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoleSchema {
    entries: Vec<(String, VariableRole)>,
}

impl RoleSchema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, role: VariableRole) -> Self {
        self.entries.push((name.into(), role));
        self
    }

    pub fn push(&mut self, name: impl Into<String>, role: VariableRole) {
        self.entries.push((name.into(), role));
    }

    pub fn entries(&self) -> &[(String, VariableRole)] {
        &self.entries
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (name, _) in &self.entries {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        let count = |r: VariableRole| self.entries.iter().filter(|(_, x)| *x == r).count();
        match count(VariableRole::Response) {
            1 => {}
            k => {
                return Err(Error::Schema(format!(
                    "exactly one response column required, found {k}"
                )))
            }
        }
        if count(VariableRole::Control) == 0 {
            return Err(Error::Schema("at least one control column required".into()));
        }
        if count(VariableRole::Noise) == 0 {
            return Err(Error::Schema("at least one noise column required".into()));
        }
        Ok(())
    }
}

/// Centering record for one noise column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseScaling {
    pub column: String,
    pub mean: f64,
    pub scale: f64,
    /// The column was constant; its centered form is all zeros.
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Standardization {
    pub unit_variance: bool,
    pub columns: Vec<NoiseScaling>,
}

/// Immutable table of named numeric columns with roles.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    roles: Vec<VariableRole>,
    columns: Vec<Vec<f64>>,
    n: usize,
    standardization: Option<Standardization>,
}

const MISSING_TOKENS: &[&str] = &["", "na", "nan", "null", "none", "?", "-"];

impl Dataset {
    /// Build a dataset from in-memory columns, in schema order.
    pub fn from_columns(schema: &RoleSchema, columns: Vec<Vec<f64>>) -> Result<Self> {
        schema.validate()?;
        if columns.len() != schema.entries.len() {
            return Err(Error::DimensionMismatch {
                expected: schema.entries.len(),
                got: columns.len(),
            });
        }
        let n = columns[0].len();
        if n == 0 {
            return Err(Error::NoRows);
        }
        for ((name, _), col) in schema.entries.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: col.len(),
                });
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonNumeric {
                    row,
                    column: name.clone(),
                    value: col[row].to_string(),
                });
            }
        }
        Ok(Self {
            names: schema.entries.iter().map(|(n, _)| n.clone()).collect(),
            roles: schema.entries.iter().map(|(_, r)| *r).collect(),
            columns,
            n,
            standardization: None,
        })
    }

    /// Parse comma-separated text with a header row. Columns absent from the
    /// schema are ignored. Row numbers in errors are 1-based data rows.
    pub fn read_csv<R: Read>(reader: R, schema: &RoleSchema) -> Result<Self> {
        schema.validate()?;
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        let mut seen = HashSet::new();
        for h in &headers {
            if !seen.insert(h.as_str()) {
                return Err(Error::DuplicateColumn(h.clone()));
            }
        }
        let index: Vec<usize> = schema
            .entries
            .iter()
            .map(|(name, _)| {
                headers
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| Error::MissingColumn(name.clone()))
            })
            .collect::<Result<_>>()?;

        let mut columns = vec![Vec::new(); index.len()];
        for (r, record) in rdr.records().enumerate() {
            let record = record?;
            let row = r + 1;
            for (c, &idx) in index.iter().enumerate() {
                let column = &schema.entries[c].0;
                let raw = record.get(idx).unwrap_or("");
                if MISSING_TOKENS.contains(&raw.to_ascii_lowercase().as_str()) {
                    return Err(Error::MissingValue {
                        row,
                        column: column.clone(),
                    });
                }
                match raw.parse::<f64>() {
                    Ok(v) if v.is_finite() => columns[c].push(v),
                    _ => {
                        return Err(Error::NonNumeric {
                            row,
                            column: column.clone(),
                            value: raw.to_owned(),
                        })
                    }
                }
            }
        }
        if columns[0].is_empty() {
            return Err(Error::NoRows);
        }
        Self::from_columns(schema, columns)
    }

    pub fn load(path: impl AsRef<Path>, schema: &RoleSchema) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file), schema)
    }

    /// Write the columns back out. `f64`'s `Display` is the shortest string
    /// that parses back to the same bits, so a reload is exact.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.names)?;
        for i in 0..self.n {
            w.write_record(self.columns.iter().map(|c| c[i].to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn schema(&self) -> RoleSchema {
        RoleSchema {
            entries: self
                .names
                .iter()
                .cloned()
                .zip(self.roles.iter().copied())
                .collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn role(&self, name: &str) -> Option<VariableRole> {
        self.position(name).map(|i| self.roles[i])
    }

    fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.position(name).map(|i| self.columns[i].as_slice())
    }

    fn ids_with(&self, role: VariableRole) -> Vec<String> {
        self.names
            .iter()
            .zip(&self.roles)
            .filter(|(_, r)| **r == role)
            .map(|(n, _)| n.clone())
            .collect()
    }

    pub fn control_ids(&self) -> Vec<String> {
        self.ids_with(VariableRole::Control)
    }

    pub fn noise_ids(&self) -> Vec<String> {
        self.ids_with(VariableRole::Noise)
    }

    pub fn response_id(&self) -> &str {
        let i = self
            .roles
            .iter()
            .position(|r| *r == VariableRole::Response)
            .expect("validated dataset has a response");
        &self.names[i]
    }

    pub fn response(&self) -> &[f64] {
        self.column(self.response_id()).expect("response exists")
    }

    /// Look up a column that must carry `role`.
    pub fn column_with_role(&self, name: &str, role: VariableRole) -> Result<&[f64]> {
        match self.position(name) {
            Some(i) if self.roles[i] == role => Ok(&self.columns[i]),
            _ => Err(Error::UnknownColumn(name.to_owned())),
        }
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    /// Center every noise column to zero mean; with `unit_variance` also
    /// scale to unit sample variance. A dataset that already carries a
    /// record is returned unchanged.
    pub fn standardize_noise(&self, unit_variance: bool) -> Dataset {
        if self.standardization.is_some() {
            return self.clone();
        }
        let mut out = self.clone();
        let mut records = Vec::new();
        for (i, role) in self.roles.iter().enumerate() {
            if *role != VariableRole::Noise {
                continue;
            }
            let col = &mut out.columns[i];
            let mean = col.iter().sum::<f64>() / self.n as f64;
            let constant = col.iter().all(|v| *v == col[0]);
            for v in col.iter_mut() {
                *v -= mean;
            }
            let mut scale = 1.0;
            if unit_variance && !constant && self.n > 1 {
                let var = col.iter().map(|v| v * v).sum::<f64>() / (self.n - 1) as f64;
                scale = var.sqrt();
                for v in col.iter_mut() {
                    *v /= scale;
                }
            }
            if constant {
                col.iter_mut().for_each(|v| *v = 0.0);
            }
            records.push(NoiseScaling {
                column: self.names[i].clone(),
                mean,
                scale,
                constant,
            });
        }
        out.standardization = Some(Standardization {
            unit_variance,
            columns: records,
        });
        out
    }

    /// Sample covariance (n - 1 denominator) of the noise columns.
    pub fn noise_covariance(&self) -> Result<DMatrix<f64>> {
        if self.n < 2 {
            return Err(Error::InsufficientObservations {
                needed: 2,
                got: self.n,
            });
        }
        let cols: Vec<&[f64]> = self
            .roles
            .iter()
            .zip(&self.columns)
            .filter(|(r, _)| **r == VariableRole::Noise)
            .map(|(_, c)| c.as_slice())
            .collect();
        Ok(sample_covariance(&cols))
    }

    /// Seeded shuffle followed by round-robin assignment.
    pub fn split_folds(&self, k: usize, seed: u64) -> Result<FoldAssignment> {
        FoldAssignment::new(self.n, k, seed)
    }

    /// Condition number of the column-standardized [controls | noise] matrix.
    /// Large values flag controls that are nearly collinear with noise.
    pub fn collinearity_condition(&self) -> f64 {
        let cols: Vec<&Vec<f64>> = self
            .roles
            .iter()
            .zip(&self.columns)
            .filter(|(r, _)| **r != VariableRole::Response)
            .map(|(_, c)| c)
            .collect();
        let n = self.n;
        let mut m = DMatrix::zeros(n, cols.len());
        for (j, col) in cols.iter().enumerate() {
            let mean = col.iter().sum::<f64>() / n as f64;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
            for i in 0..n {
                m[(i, j)] = if sd > 0.0 { (col[i] - mean) / sd } else { 0.0 };
            }
        }
        let sv = m.singular_values();
        let max = sv.max();
        let min = sv.min();
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

/// Covariance of equal-length columns with an n - 1 denominator.
pub fn sample_covariance(cols: &[&[f64]]) -> DMatrix<f64> {
    let q = cols.len();
    let n = cols.first().map_or(0, |c| c.len());
    let means: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().sum::<f64>() / n as f64)
        .collect();
    let mut cov = DMatrix::zeros(q, q);
    for a in 0..q {
        for b in a..q {
            let s: f64 = (0..n)
                .map(|i| (cols[a][i] - means[a]) * (cols[b][i] - means[b]))
                .sum();
            let v = s / (n as f64 - 1.0);
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    cov
}

/// Box constraints on the control variables of one subset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bounds {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl Bounds {
    pub fn new(low: Vec<f64>, high: Vec<f64>) -> Result<Self> {
        if low.len() != high.len() {
            return Err(Error::DimensionMismatch {
                expected: low.len(),
                got: high.len(),
            });
        }
        for (i, (l, h)) in low.iter().zip(&high).enumerate() {
            if !l.is_finite() || !h.is_finite() {
                return Err(Error::InvalidBounds(format!("bound {i} is not finite")));
            }
            if l > h {
                return Err(Error::InvalidBounds(format!("low > high for variable {i}")));
            }
        }
        Ok(Self { low, high })
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    /// Observed per-column [min, max].
    pub fn observed(d: &Dataset, ids: &[String]) -> Result<Self> {
        let mut low = Vec::with_capacity(ids.len());
        let mut high = Vec::with_capacity(ids.len());
        for id in ids {
            let col = d.column_with_role(id, VariableRole::Control)?;
            low.push(col.iter().copied().fold(f64::INFINITY, f64::min));
            high.push(col.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }
        Self::new(low, high)
    }

    /// Sample mean ± `k` sample standard deviations, widened where needed so
    /// the box still covers every observed value.
    pub fn sigma_box(d: &Dataset, ids: &[String], k: f64) -> Result<Self> {
        let obs = Self::observed(d, ids)?;
        let mut low = obs.low;
        let mut high = obs.high;
        for (j, id) in ids.iter().enumerate() {
            let col = d.column_with_role(id, VariableRole::Control)?;
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            let sd = if col.len() > 1 {
                (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            low[j] = low[j].min(mean - k * sd);
            high[j] = high[j].max(mean + k * sd);
        }
        Self::new(low, high)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.low.iter().zip(&self.high))
                .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (l, h)) in x.iter_mut().zip(self.low.iter().zip(&self.high)) {
            *v = v.clamp(*l, *h);
        }
    }
}

/// Per-observation fold index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    k: usize,
    membership: Vec<usize>,
}

impl FoldAssignment {
    pub fn new(n: usize, k: usize, seed: u64) -> Result<Self> {
        if k < 2 || k > n {
            return Err(Error::FoldCount { k, n });
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng::rng_from(seed, &[0xF01D]));
        let mut membership = vec![0; n];
        for (pos, &obs) in order.iter().enumerate() {
            membership[obs] = pos % k;
        }
        Ok(Self { k, membership })
    }

    /// Leave-one-out assignment.
    pub fn leave_one_out(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::FoldCount { k: n, n });
        }
        Ok(Self {
            k: n,
            membership: (0..n).collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn membership(&self) -> &[usize] {
        &self.membership
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.membership {
            sizes[f] += 1;
        }
        sizes
    }

    /// (training rows, held-out rows) for fold `f`.
    pub fn split(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        let (held, train): (Vec<usize>, Vec<usize>) =
            (0..self.membership.len()).partition(|&i| self.membership[i] == f);
        (train, held)
    }
}
