//! Random forest of regression trees, used only for variable ranking.

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RankedVariables;
use crate::data::{Dataset, VariableRole};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeaturesPerSplit {
    /// `ceil(sqrt(L))`.
    #[default]
    Sqrt,
    #[serde(untagged)]
    Count(usize),
}

impl FeaturesPerSplit {
    pub fn resolve(self, pool: usize) -> usize {
        match self {
            Self::Sqrt => ((pool as f64).sqrt().ceil() as usize).clamp(1, pool.max(1)),
            Self::Count(k) => k.clamp(1, pool.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImportanceKind {
    /// Total squared-error decrease per variable.
    #[default]
    Impurity,
    /// Out-of-bag MSE increase when the variable is permuted.
    Permutation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfConfig {
    pub trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub features_per_split: FeaturesPerSplit,
    pub seed: u64,
    pub importance: ImportanceKind,
}

impl Default for RfConfig {
    fn default() -> Self {
        Self {
            trees: 100,
            max_depth: 12,
            min_samples_leaf: 5,
            features_per_split: FeaturesPerSplit::Sqrt,
            seed: 0,
            importance: ImportanceKind::Impurity,
        }
    }
}

enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, row: impl Fn(usize) -> f64) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row(feature) <= threshold { left } else { right },
            }
        }
    }
}

struct Grower<'a> {
    x: &'a [&'a [f64]],
    y: &'a [f64],
    cfg: &'a RfConfig,
    mtry: usize,
    importance: Vec<f64>,
    nodes: Vec<Node>,
}

fn sse(y: &[f64], rows: &[usize]) -> (f64, f64) {
    let n = rows.len() as f64;
    let sum: f64 = rows.iter().map(|&i| y[i]).sum();
    let mean = sum / n;
    (rows.iter().map(|&i| (y[i] - mean).powi(2)).sum(), mean)
}

impl Grower<'_> {
    fn grow(&mut self, rows: &mut [usize], depth: usize, r: &mut rng::Rng) -> usize {
        let (node_sse, mean) = sse(self.y, rows);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(mean));
        let leaf = self.cfg.min_samples_leaf.max(1);
        if depth >= self.cfg.max_depth || rows.len() < 2 * leaf || node_sse <= 0.0 {
            return id;
        }
        let features = index::sample(r, self.x.len(), self.mtry);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted = rows.to_vec();
        for feature in features.iter() {
            let col = self.x[feature];
            sorted.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
            let total: f64 = sorted.iter().map(|&i| self.y[i]).sum();
            let total_sq: f64 = sorted.iter().map(|&i| self.y[i] * self.y[i]).sum();
            let n = sorted.len();
            let (mut s, mut sq) = (0.0, 0.0);
            for k in 0..n - 1 {
                let v = self.y[sorted[k]];
                s += v;
                sq += v * v;
                let nl = k + 1;
                let nr = n - nl;
                if nl < leaf || nr < leaf || col[sorted[k]] == col[sorted[k + 1]] {
                    continue;
                }
                let left = sq - s * s / nl as f64;
                let rs = total - s;
                let right = (total_sq - sq) - rs * rs / nr as f64;
                let split_sse = (left + right).max(0.0);
                if best.is_none_or(|(b, _, _)| split_sse < b) {
                    let threshold = 0.5 * (col[sorted[k]] + col[sorted[k + 1]]);
                    best = Some((split_sse, feature, threshold));
                }
            }
        }
        let Some((split_sse, feature, threshold)) = best else {
            return id;
        };
        let gain = node_sse - split_sse;
        if gain <= 1e-12 * node_sse {
            return id;
        }
        self.importance[feature] += gain;
        let col = self.x[feature];
        let mid = partition(rows, |&i| col[i] <= threshold);
        let (lrows, rrows) = rows.split_at_mut(mid);
        let left = self.grow(lrows, depth + 1, r);
        let right = self.grow(rrows, depth + 1, r);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

fn partition<T, F: Fn(&T) -> bool>(v: &mut [T], pred: F) -> usize {
    let mut i = 0;
    for j in 0..v.len() {
        if pred(&v[j]) {
            v.swap(i, j);
            i += 1;
        }
    }
    i
}

struct TreeOutcome {
    impurity: Vec<f64>,
    permutation: Vec<f64>,
}

fn grow_tree(x: &[&[f64]], y: &[f64], cfg: &RfConfig, tree: usize) -> TreeOutcome {
    let n = y.len();
    let l = x.len();
    let mut r = rng::rng_from(cfg.seed, &[0x7EE, tree as u64]);
    let mut rows: Vec<usize> = (0..n).map(|_| r.random_range(0..n)).collect();
    let mut in_bag = vec![false; n];
    for &i in &rows {
        in_bag[i] = true;
    }
    let mut g = Grower {
        x,
        y,
        cfg,
        mtry: cfg.features_per_split.resolve(l),
        importance: vec![0.0; l],
        nodes: Vec::new(),
    };
    g.grow(&mut rows, 0, &mut r);
    let impurity = g.importance;
    let model = Tree { nodes: g.nodes };

    let mut permutation = vec![0.0; l];
    if cfg.importance == ImportanceKind::Permutation {
        let oob: Vec<usize> = (0..n).filter(|&i| !in_bag[i]).collect();
        if !oob.is_empty() {
            let mse = |perm_feature: Option<(usize, &[usize])>| -> f64 {
                oob.iter()
                    .enumerate()
                    .map(|(k, &i)| {
                        let p = model.predict(|f| match perm_feature {
                            Some((pf, src)) if pf == f => x[f][src[k]],
                            _ => x[f][i],
                        });
                        (y[i] - p).powi(2)
                    })
                    .sum::<f64>()
                    / oob.len() as f64
            };
            let base = mse(None);
            for (f, slot) in permutation.iter_mut().enumerate() {
                let mut shuffled = oob.clone();
                shuffled.shuffle(&mut r);
                *slot = mse(Some((f, &shuffled))) - base;
            }
        }
    }
    TreeOutcome {
        impurity,
        permutation,
    }
}

/// Rank pool variables by forest importance, normalized to sum to 1 (all
/// zeros when no tree ever split).
pub fn rf_rank(d: &Dataset, pool: &[String], cfg: &RfConfig) -> Result<RankedVariables> {
    if cfg.trees == 0 || cfg.max_depth == 0 {
        return Err(Error::InvalidConfig("trees and max_depth must be >= 1".into()));
    }
    let leaf = cfg.min_samples_leaf.max(1);
    if d.n() < 2 * leaf {
        return Err(Error::InsufficientObservations {
            needed: 2 * leaf,
            got: d.n(),
        });
    }
    let x: Vec<&[f64]> = pool
        .iter()
        .map(|id| d.column_with_role(id, VariableRole::Control))
        .collect::<Result<_>>()?;
    let y = d.response();
    let outcomes: Vec<TreeOutcome> = (0..cfg.trees)
        .into_par_iter()
        .map(|t| grow_tree(&x, y, cfg, t))
        .collect();

    let mut scores = vec![0.0; pool.len()];
    for o in &outcomes {
        let src = match cfg.importance {
            ImportanceKind::Impurity => &o.impurity,
            ImportanceKind::Permutation => &o.permutation,
        };
        for (s, v) in scores.iter_mut().zip(src) {
            *s += v / cfg.trees as f64;
        }
    }
    for s in scores.iter_mut() {
        *s = s.max(0.0);
    }
    let total: f64 = scores.iter().sum();
    if total > 0.0 {
        scores.iter_mut().for_each(|s| *s /= total);
    }
    let constant = pool
        .iter()
        .zip(&x)
        .filter(|(_, c)| c.iter().all(|v| *v == c[0]))
        .map(|(id, _)| id.clone())
        .collect();
    Ok(RankedVariables::from_scores(
        pool.iter().cloned().zip(scores).collect(),
        constant,
    ))
}
