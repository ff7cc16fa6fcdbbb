use rand_distr::{Distribution, StandardNormal};

use super::truth::{noise_names, GroundTruthModel};
use crate::data::{Dataset, RoleSchema, VariableRole};
use crate::error::{Error, Result};
use crate::rng;

pub const RESPONSE: &str = "y";

/// Draw `n` independent rows from `g`. Columns are the true controls,
/// the noise variables, the dummies (as controls) and `y`.
pub fn sample_observations(g: &GroundTruthModel, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::NoRows);
    }
    let mut r = rng::rng_from(seed, &[0x5A4]);
    let mut draw = |mean: f64, sd: f64| -> Vec<f64> {
        (0..n)
            .map(|_| mean + sd * { let v: f64 = StandardNormal.sample(&mut r); v })
            .collect::<Vec<f64>>()
    };
    let xs: Vec<Vec<f64>> = (0..g.controls.len()).map(|i| draw(g.controls.mean[i], g.controls.sd[i])).collect();
    let zs: Vec<Vec<f64>> = (0..g.noise.len()).map(|k| draw(g.noise.mean[k], g.noise.sd[k])).collect();
    let ds: Vec<Vec<f64>> = (0..g.dummies.len()).map(|k| draw(g.dummies.mean[k], g.dummies.sd[k])).collect();
    let eps = draw(0.0, g.sigma_eps);

    let mut x = vec![0.0; xs.len()];
    let mut z = vec![0.0; zs.len()];
    let mut y = Vec::with_capacity(n);
    for row in 0..n {
        for (slot, col) in x.iter_mut().zip(&xs) {
            *slot = col[row];
        }
        for ((slot, col), mean) in z.iter_mut().zip(&zs).zip(&g.noise.mean) {
            *slot = col[row] - mean;
        }
        y.push(g.model.predict(&x, &z)? + eps[row]);
    }

    let mut schema = RoleSchema::new();
    for id in g.true_controls() {
        schema.push(id.clone(), VariableRole::Control);
    }
    for id in noise_names(zs.len()) {
        schema.push(id, VariableRole::Noise);
    }
    for id in &g.dummy_ids {
        schema.push(id.clone(), VariableRole::Control);
    }
    schema.push(RESPONSE, VariableRole::Response);
    let columns = xs.into_iter().chain(zs).chain(ds).chain(std::iter::once(y)).collect();
    Dataset::from_columns(&schema, columns)
}

/// Copy of `d` with the known noise means removed, so the fitted model
/// is expressed in the same noise coordinates as the truth.
pub fn center_known_noise(d: &Dataset, g: &GroundTruthModel) -> Result<Dataset> {
    let schema = d.schema();
    let ids = d.noise_ids();
    let columns = d
        .names()
        .iter()
        .map(|name| {
            let col = d.column(name).expect("own column").to_vec();
            match ids.iter().position(|id| id == name) {
                Some(k) => col.into_iter().map(|v| v - g.noise.mean[k]).collect(),
                None => col,
            }
        })
        .collect();
    Dataset::from_columns(&schema, columns)
}
