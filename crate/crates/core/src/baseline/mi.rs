//! Plug-in mutual information on equal-frequency bins.

use serde::{Deserialize, Serialize};

use super::RankedVariables;
use crate::data::{Dataset, VariableRole};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bins {
    /// `ceil(sqrt(n))`, capped at [`MAX_AUTO_BINS`].
    #[default]
    Auto,
    #[serde(untagged)]
    Fixed(usize),
}

pub const MAX_AUTO_BINS: usize = 32;

impl Bins {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            Bins::Auto => ((n as f64).sqrt().ceil() as usize).clamp(1, MAX_AUTO_BINS),
            Bins::Fixed(b) => b.max(1),
        }
    }
}

/// Assign each value to one of `b` equal-count bins by rank. Tied values
/// share the bin of their first rank, so a constant column lands in bin 0.
pub fn equal_frequency_bins(values: &[f64], b: usize) -> Vec<usize> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    let mut bins = vec![0; n];
    let mut start = 0;
    while start < n {
        let v = values[order[start]];
        let mut end = start;
        while end < n && values[order[end]] == v {
            end += 1;
        }
        let bin = start * b / n;
        for &i in &order[start..end] {
            bins[i] = bin;
        }
        start = end;
    }
    bins
}

/// Mutual information in bits between two discrete label vectors.
pub fn mutual_information(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut joint = vec![0usize; ka * kb];
    let mut pa = vec![0usize; ka];
    let mut pb = vec![0usize; kb];
    for (&i, &j) in a.iter().zip(b) {
        joint[i * kb + j] += 1;
        pa[i] += 1;
        pb[j] += 1;
    }
    let nf = n as f64;
    let mut mi = 0.0;
    for i in 0..ka {
        for j in 0..kb {
            let c = joint[i * kb + j];
            if c == 0 {
                continue;
            }
            let pij = c as f64 / nf;
            mi += pij * (c as f64 * nf / (pa[i] as f64 * pb[j] as f64)).log2();
        }
    }
    mi.max(0.0)
}

/// Rank pool variables by binned mutual information with the response.
pub fn mi_rank(d: &Dataset, pool: &[String], bins: Bins) -> Result<RankedVariables> {
    let n = d.n();
    if n < 4 {
        return Err(Error::InsufficientObservations { needed: 4, got: n });
    }
    let b = bins.resolve(n);
    let y_bins = equal_frequency_bins(d.response(), b);
    let mut scores = Vec::with_capacity(pool.len());
    let mut constant = Vec::new();
    for id in pool {
        let col = d.column_with_role(id, VariableRole::Control)?;
        if col.iter().all(|v| *v == col[0]) {
            constant.push(id.clone());
            scores.push((id.clone(), 0.0));
            continue;
        }
        let x_bins = equal_frequency_bins(col, b);
        scores.push((id.clone(), mutual_information(&x_bins, &y_bins)));
    }
    Ok(RankedVariables::from_scores(scores, constant))
}
