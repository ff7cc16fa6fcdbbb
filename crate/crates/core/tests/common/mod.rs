#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use robust_design::data::Dataset;
use robust_design::rng::{rng_from, Rng};
use robust_design::rsm::RsmModel;
use robust_design::synth::{center_known_noise, generate_ground_truth, sample_observations, ExperimentSetting, GroundTruthModel};

pub fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn normal(r: &mut Rng) -> f64 {
    StandardNormal.sample(r)
}

/// Model with independent standard-normal coefficients.
pub fn random_model(r: &mut Rng, s: usize, q: usize, sigma2: f64) -> RsmModel {
    let b1 = DVector::from_fn(s, |_, _| normal(r));
    let mut b2 = DMatrix::zeros(s, s);
    for i in 0..s {
        for j in i..s {
            let v = normal(r);
            b2[(i, j)] = v;
            b2[(j, i)] = v;
        }
    }
    let b3 = DVector::from_fn(q, |_, _| normal(r));
    let b4 = DMatrix::from_fn(s, q, |_, _| normal(r));
    RsmModel::from_parts(names("x", s), names("z", q), normal(r), b1, b2, b3, b4, sigma2).unwrap()
}

pub fn uniform(r: &mut Rng, lo: f64, hi: f64) -> f64 {
    r.random_range(lo..hi)
}

pub fn rng(seed: u64) -> Rng {
    rng_from(seed, &[0x7E57])
}

/// Setting 1 with a custom pool and noise level.
pub fn small_setting(controls: usize, noise: usize, dummies: usize, observations: usize, sigma_eps: f64) -> ExperimentSetting {
    let mut s = ExperimentSetting::preset(1).unwrap();
    s.id = 100;
    s.controls = controls;
    s.noise = noise;
    s.dummies = dummies;
    s.observations = observations;
    s.sigma_eps = sigma_eps;
    s
}

/// Ground truth plus a centered sample drawn from it.
pub fn truth_and_data(s: &ExperimentSetting, seed: u64) -> (GroundTruthModel, Dataset) {
    let g = generate_ground_truth(s, seed).unwrap();
    let d = sample_observations(&g, s.observations, seed ^ 0xD47A).unwrap();
    let d = center_known_noise(&d, &g).unwrap();
    (g, d)
}
