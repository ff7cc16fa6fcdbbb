//! Sequential filter/ranking baselines: rank the pool, keep the top C, then
//! fit and optimize on that fixed subset.

mod forest;
mod mi;
mod pipeline;

use serde::Serialize;

pub use forest::{rf_rank, FeaturesPerSplit, ImportanceKind, RfConfig};
pub use mi::{equal_frequency_bins, mi_rank, mutual_information, Bins, MAX_AUTO_BINS};
pub use pipeline::{sequential_pipeline, PipelineConfig, PipelineResult, Ranker};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEntry {
    pub id: String,
    pub score: f64,
}

/// Pool variables in descending score order; ties keep pool order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedVariables {
    pub entries: Vec<RankedEntry>,
    /// Variables whose column was constant (scored 0).
    pub constant: Vec<String>,
}

impl RankedVariables {
    pub fn from_scores(scores: Vec<(String, f64)>, constant: Vec<String>) -> Self {
        let mut indexed: Vec<(usize, (String, f64))> = scores.into_iter().enumerate().collect();
        indexed.sort_by(|(ia, (_, a)), (ib, (_, b))| b.total_cmp(a).then(ia.cmp(ib)));
        Self {
            entries: indexed
                .into_iter()
                .map(|(_, (id, score))| RankedEntry { id, score })
                .collect(),
            constant,
        }
    }

    pub fn top(&self, c: usize) -> Vec<String> {
        self.entries.iter().take(c).map(|e| e.id.clone()).collect()
    }

    pub fn score(&self, id: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.id == id).map(|e| e.score)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.id == id)
    }
}
