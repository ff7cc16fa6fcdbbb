mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use robust_design::rsm::{default_delta_step, delta_variance, fit_rsm, DesignMatrix, NoiseCovariance, RsmModel};
use robust_design::synth::compute_metrics;

/// Draws of z ~ N(0, S) through a Cholesky factor.
fn correlated_draws(r: &mut robust_design::rng::Rng, cov: &DMatrix<f64>, n: usize) -> Vec<Vec<f64>> {
    let l = cov.clone().cholesky().expect("positive definite").l();
    (0..n)
        .map(|_| {
            let e = DVector::from_fn(cov.nrows(), |_, _| normal(r));
            (&l * e).iter().copied().collect()
        })
        .collect()
}

fn mean_and_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

#[test]
fn noiseless_truth_is_recovered() {
    let s = small_setting(2, 2, 0, 1000, 1e-8);
    let (g, d) = truth_and_data(&s, 11);
    let dm = DesignMatrix::build(&d, g.true_controls()).unwrap();
    let m = fit_rsm(&dm, d.response()).unwrap();
    let truth = &g.model;
    for (a, b) in m.coefficients().iter().zip(truth.coefficients().iter()) {
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }
    let metrics = compute_metrics(g.true_controls(), &m, &g);
    for group in &metrics.ratios {
        if let Some(r) = group.mean {
            assert!((r - 1.0).abs() < 1e-3, "{r}");
        }
    }
}

#[test]
fn mean_surface_matches_monte_carlo() {
    let mut r = rng(2);
    let m = random_model(&mut r, 2, 2, 0.0);
    let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
    let x = [0.7, -1.1];
    let preds: Vec<f64> = correlated_draws(&mut r, &cov, 1_000_000)
        .iter()
        .map(|z| m.predict(&x, z).unwrap())
        .collect();
    let (mc, var) = mean_and_var(&preds);
    let se = (var / preds.len() as f64).sqrt();
    assert!((mc - m.mean_surface(&x).unwrap()).abs() < 3.0 * se);
}

#[test]
fn variance_surface_matches_monte_carlo() {
    let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]);
    let m = RsmModel::from_parts(
        vec!["x1".into()],
        vec!["z1".into(), "z2".into()],
        0.0,
        DVector::zeros(1),
        DMatrix::zeros(1, 1),
        DVector::from_vec(vec![1.0, 0.0]),
        DMatrix::from_row_slice(1, 2, &[0.5, -1.0]),
        0.0,
    )
    .unwrap();
    let nc = NoiseCovariance::new(cov.clone()).unwrap();
    let exact = m.variance_surface(&[1.0], &nc).unwrap();
    let mut r = rng(3);
    let preds: Vec<f64> = correlated_draws(&mut r, &cov, 1_000_000)
        .iter()
        .map(|z| m.predict(&[1.0], z).unwrap())
        .collect();
    let (_, mc) = mean_and_var(&preds);
    assert!((mc - exact).abs() / exact < 0.01, "{mc} vs {exact}");
}

#[test]
fn delta_method_equals_closed_form_on_fitted_models() {
    let mut r = rng(4);
    for trial in 0..10 {
        let s = 1 + trial % 3;
        let q = 1 + trial % 2;
        let truth = random_model(&mut r, s, q, 0.0);
        let n = 200;
        let xs: Vec<Vec<f64>> = (0..s).map(|_| (0..n).map(|_| normal(&mut r)).collect()).collect();
        let zs: Vec<Vec<f64>> = (0..q).map(|_| (0..n).map(|_| normal(&mut r)).collect()).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let x: Vec<f64> = xs.iter().map(|c| c[i]).collect();
                let z: Vec<f64> = zs.iter().map(|c| c[i]).collect();
                truth.predict(&x, &z).unwrap() + 0.3 * normal(&mut r)
            })
            .collect();
        let xr: Vec<&[f64]> = xs.iter().map(|c| c.as_slice()).collect();
        let zr: Vec<&[f64]> = zs.iter().map(|c| c.as_slice()).collect();
        let dm = DesignMatrix::from_columns(&xr, &zr, names("x", s), names("z", q)).unwrap();
        let m = fit_rsm(&dm, &y).unwrap();
        let cov = NoiseCovariance::isotropic(q, 1.3).unwrap();
        let x: Vec<f64> = (0..s).map(|_| normal(&mut r)).collect();
        let closed = m.variance_surface(&x, &cov).unwrap();
        let delta = delta_variance(|x, z| m.predict(x, z).unwrap(), &x, &cov, m.sigma2, default_delta_step(&cov)).unwrap();
        assert!((delta - closed).abs() / closed < 1e-6, "{delta} vs {closed}");
    }
}

#[test]
fn residuals_are_orthogonal_to_the_design() {
    let s = small_setting(3, 2, 1, 300, 1.0);
    let (_, d) = truth_and_data(&s, 5);
    let dm = DesignMatrix::build(&d, &d.control_ids()).unwrap();
    let m = fit_rsm(&dm, d.response()).unwrap();
    let y = DVector::from_column_slice(d.response());
    let resid = &y - m.predict_design(&dm).unwrap();
    let worst = (dm.matrix().transpose() * resid).amax();
    assert!(worst < 1e-6 * y.norm(), "{worst}");
}

#[test]
fn noise_shift_is_absorbed_by_the_fit() {
    let s = small_setting(2, 2, 1, 150, 1.0);
    let (_, d) = truth_and_data(&s, 6);
    let mut cols: Vec<Vec<f64>> = d.names().iter().map(|n| d.column(n).unwrap().to_vec()).collect();
    for (name, col) in d.names().iter().zip(&mut cols) {
        if d.noise_ids().contains(name) {
            col.iter_mut().for_each(|v| *v = 3.0 + *v);
        }
    }
    let shifted = robust_design::data::Dataset::from_columns(&d.schema(), cols).unwrap();
    let ids = d.control_ids();
    let before = fit_rsm(&DesignMatrix::build(&d, &ids).unwrap(), d.response()).unwrap();
    let recentred = shifted.standardize_noise(false);
    let dm_after = DesignMatrix::build(&recentred, &ids).unwrap();
    let after = fit_rsm(&dm_after, recentred.response()).unwrap();
    let raw = fit_rsm(&DesignMatrix::build(&shifted, &ids).unwrap(), shifted.response()).unwrap();
    let p0 = before.predict_design(&DesignMatrix::build(&d, &ids).unwrap()).unwrap();
    let p1 = after.predict_design(&dm_after).unwrap();
    let p2 = raw.predict_design(&DesignMatrix::build(&shifted, &ids).unwrap()).unwrap();
    assert!((&p0 - &p1).amax() < 1e-8);
    assert!((&p0 - &p2).amax() < 1e-8);
}

#[test]
fn term_labels_are_stable() {
    let s = small_setting(3, 2, 0, 50, 1.0);
    let (_, d) = truth_and_data(&s, 7);
    let ids = d.control_ids();
    let a = DesignMatrix::build(&d, &ids).unwrap();
    let b = DesignMatrix::build(&d, &ids).unwrap();
    assert_eq!(a.labels(), b.labels());
    assert_eq!(a.labels()[..5], ["intercept", "x1", "x2", "x3", "x1^2"]);
    assert_eq!(a.labels().last().unwrap(), "x3*z2");
}
