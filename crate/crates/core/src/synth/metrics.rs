use serde::Serialize;

use super::truth::GroundTruthModel;
use crate::rsm::RsmModel;

/// Ratios contributed by one coefficient group.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GroupRatio {
    /// Mean of `beta / beta_hat` over usable entries.
    pub mean: Option<f64>,
    pub used: usize,
    /// Guarded entries whose variables were not all selected.
    pub missing: usize,
}

impl GroupRatio {
    fn from_entries(entries: &[Option<f64>]) -> Self {
        let used: Vec<f64> = entries.iter().flatten().copied().collect();
        Self {
            mean: (!used.is_empty()).then(|| used.iter().sum::<f64>() / used.len() as f64),
            used: used.len(),
            missing: entries.len() - used.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionMetrics {
    pub real_fraction: f64,
    pub dummy_fraction: f64,
    /// Groups beta1, beta2, beta3, beta4.
    pub ratios: [GroupRatio; 4],
}

fn ratio(beta: f64, fitted: Option<f64>) -> Option<f64> {
    let hat = fitted?;
    let r = beta / hat;
    r.is_finite().then_some(r)
}

/// Score a selection and its fitted model against the truth.
pub fn compute_metrics(selected: &[String], fitted: &RsmModel, truth: &GroundTruthModel) -> SelectionMetrics {
    let real = truth.true_controls();
    let hits = real.iter().filter(|id| selected.contains(id)).count();
    let dummies = truth.dummy_ids.iter().filter(|id| selected.contains(id)).count();
    let real_fraction = if real.is_empty() { 0.0 } else { hits as f64 / real.len() as f64 };
    let dummy_fraction = if truth.dummy_ids.is_empty() {
        0.0
    } else {
        dummies as f64 / truth.dummy_ids.len() as f64
    };

    let at = |id: &String| fitted.subset.iter().position(|s| s == id);
    let noise_at = |id: &String| fitted.noise_ids.iter().position(|s| s == id);
    let t = &truth.model;
    let guard = truth.coefficient_sd.map(|sd| 0.05 * sd);
    let keep = |g: usize, beta: f64| beta.abs() > guard[g];

    let mut groups: [Vec<Option<f64>>; 4] = Default::default();
    for (i, id) in real.iter().enumerate() {
        if keep(0, t.beta1[i]) {
            groups[0].push(ratio(t.beta1[i], at(id).map(|p| fitted.beta1[p])));
        }
        for (j, jd) in real.iter().enumerate().skip(i) {
            if keep(1, t.beta2[(i, j)]) {
                let hat = at(id).zip(at(jd)).map(|(a, b)| fitted.beta2[(a, b)]);
                groups[1].push(ratio(t.beta2[(i, j)], hat));
            }
        }
    }
    for (k, id) in t.noise_ids.iter().enumerate() {
        if keep(2, t.beta3[k]) {
            groups[2].push(ratio(t.beta3[k], noise_at(id).map(|p| fitted.beta3[p])));
        }
        for (i, xd) in real.iter().enumerate() {
            if keep(3, t.beta4[(i, k)]) {
                let hat = at(xd).zip(noise_at(id)).map(|(a, b)| fitted.beta4[(a, b)]);
                groups[3].push(ratio(t.beta4[(i, k)], hat));
            }
        }
    }
    SelectionMetrics {
        real_fraction,
        dummy_fraction,
        ratios: groups.map(|g| GroupRatio::from_entries(&g)),
    }
}
