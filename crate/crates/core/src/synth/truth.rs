use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::settings::{ExperimentSetting, TargetRule};
use crate::data::Bounds;
use crate::design::{box_variance_min, closed_form_variance_min_weighted};
use crate::error::{Error, Result};
use crate::rng;
use crate::rsm::{NoiseCovariance, RsmModel};

/// Independent normal sampling moments for one group of columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMoments {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl ColumnMoments {
    pub fn uniform(count: usize, mean: f64, sd: f64) -> Self {
        Self {
            mean: vec![mean; count],
            sd: vec![sd; count],
        }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

/// The process that generates a synthetic dataset. The model acts on
/// noise deviations `z - E(z)`.
#[derive(Debug, Clone)]
pub struct GroundTruthModel {
    pub model: RsmModel,
    pub sigma_eps: f64,
    pub dummy_ids: Vec<String>,
    pub controls: ColumnMoments,
    pub noise: ColumnMoments,
    pub dummies: ColumnMoments,
    /// Coefficient standard deviations per group, used for the ratio guard.
    pub coefficient_sd: [f64; 4],
    /// Robust setting that defines the target.
    pub x_star: Vec<f64>,
    pub degenerate: bool,
    pub target: f64,
    /// Smallest true variance over all of control space.
    pub global_min_variance: f64,
}

pub fn control_names(c: usize) -> Vec<String> {
    (1..=c).map(|i| format!("x{i}")).collect()
}

pub fn noise_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("z{i}")).collect()
}

pub fn dummy_names(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("d{i}")).collect()
}

fn gaussian(r: &mut rng::Rng, sd: f64) -> f64 {
    if sd == 0.0 {
        0.0
    } else {
        let v: f64 = StandardNormal.sample(r);
        sd * v
    }
}

fn diagonal_covariance(m: &ColumnMoments) -> NoiseCovariance {
    let diag = DVector::from_iterator(m.len(), m.sd.iter().map(|s| s * s));
    NoiseCovariance::new(DMatrix::from_diagonal(&diag)).expect("diagonal covariance")
}

impl GroundTruthModel {
    pub fn true_controls(&self) -> &[String] {
        &self.model.subset
    }

    pub fn noise_covariance(&self) -> NoiseCovariance {
        diagonal_covariance(&self.noise)
    }

    pub fn true_mean(&self, x: &[f64]) -> Result<f64> {
        self.model.mean_surface(x)
    }

    pub fn true_variance(&self, x: &[f64]) -> Result<f64> {
        self.model.variance_surface(x, &self.noise_covariance())
    }

    pub fn optimum_variance(&self) -> f64 {
        self.true_variance(&self.x_star).expect("x_star has model dimension")
    }

    /// Full control vector for a design given over `ids`. True controls
    /// missing from `ids` sit at their sampling mean; dummies are ignored.
    pub fn embed(&self, ids: &[String], values: &[f64]) -> Result<Vec<f64>> {
        if ids.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: ids.len(),
                got: values.len(),
            });
        }
        Ok(self
            .true_controls()
            .iter()
            .enumerate()
            .map(|(i, name)| match ids.iter().position(|id| id == name) {
                Some(p) => values[p],
                None => self.controls.mean[i],
            })
            .collect())
    }

    /// True (mean, variance) of a design chosen over `ids`.
    pub fn evaluate_design(&self, ids: &[String], values: &[f64]) -> Result<(f64, f64)> {
        let x = self.embed(ids, values)?;
        Ok((self.true_mean(&x)?, self.true_variance(&x)?))
    }
}

/// Draw a ground-truth process for `s`.
pub fn generate_ground_truth(s: &ExperimentSetting, seed: u64) -> Result<GroundTruthModel> {
    s.validate()?;
    let [sb1, sb2, sb3, sb4] = s.coefficient_sd();
    let (c, q) = (s.controls, s.noise);
    let mut r = rng::rng_from(seed, &[0x7207]);

    let beta1 = DVector::from_iterator(c, (0..c).map(|_| gaussian(&mut r, sb1)));
    let mut beta2 = DMatrix::zeros(c, c);
    for i in 0..c {
        for j in i..c {
            let v = gaussian(&mut r, sb2);
            beta2[(i, j)] = v;
            beta2[(j, i)] = v;
        }
    }
    let beta3 = DVector::from_iterator(q, (0..q).map(|_| gaussian(&mut r, sb3)));
    let beta4 = DMatrix::from_fn(c, q, |_, _| gaussian(&mut r, sb4));

    let model = RsmModel::from_parts(
        control_names(c),
        noise_names(q),
        0.0,
        beta1,
        beta2,
        beta3,
        beta4,
        s.sigma_eps * s.sigma_eps,
    )?;
    let noise = ColumnMoments::uniform(q, s.mean_z, s.sigma_z);
    let cov = diagonal_covariance(&noise);
    let free = closed_form_variance_min_weighted(&model, &cov);
    let global_min_variance = model.variance_surface(&free.x, &cov)?;
    let vm = match s.target_rule {
        TargetRule::Unconstrained => free,
        TargetRule::OperatingBox { sigmas } => {
            let k = sigmas * s.sigma_x;
            let bounds = Bounds::new(vec![s.mean_x - k; c], vec![s.mean_x + k; c])?;
            box_variance_min(&model, &cov, &bounds)?
        }
    };
    let target = model.mean_surface(&vm.x)?;
    Ok(GroundTruthModel {
        model,
        sigma_eps: s.sigma_eps,
        dummy_ids: dummy_names(s.dummies),
        controls: ColumnMoments::uniform(c, s.mean_x, s.sigma_x),
        noise,
        dummies: ColumnMoments::uniform(s.dummies, s.mean_d, s.sigma_d),
        coefficient_sd: [sb1, sb2, sb3, sb4],
        x_star: vm.x,
        degenerate: vm.degenerate,
        target,
        global_min_variance,
    })
}

/// A process resembling a production line history: a pool of real and
/// irrelevant controls with heterogeneous scales, a variance-minimizing
/// setting inside the observed range and an injected target mean.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseStudyShape {
    pub controls: usize,
    pub dummies: usize,
    pub noise: usize,
    pub observations: usize,
    pub target: f64,
    pub sigma_eps: f64,
    pub sigma_b1: f64,
    pub sigma_b2: f64,
    pub sigma_b4: f64,
    /// Half-width of the window around the control means, in standard
    /// deviations, from which `x_star` is drawn.
    pub optimum_spread: f64,
}

impl Default for CaseStudyShape {
    fn default() -> Self {
        Self {
            controls: 6,
            dummies: 4,
            noise: 6,
            observations: 214,
            target: 65.0,
            sigma_eps: 0.5,
            sigma_b1: 1.0,
            sigma_b2: 0.1,
            sigma_b4: 0.5,
            optimum_spread: 0.3,
        }
    }
}

impl CaseStudyShape {
    /// Column moments are drawn per column (means in [0, 50], sds in
    /// [0.5, 3]); `x_star` solves the noise-slope equations exactly and
    /// the intercept puts the true mean at `x_star` on the target.
    pub fn generate(&self, seed: u64) -> Result<GroundTruthModel> {
        if self.controls == 0 || self.noise == 0 || self.observations < 2 {
            return Err(Error::InvalidConfig("case study needs controls, noise and rows".into()));
        }
        let (c, q) = (self.controls, self.noise);
        let mut r = rng::rng_from(seed, &[0xCA5E]);
        let moments = |k: usize, r: &mut rng::Rng| ColumnMoments {
            mean: (0..k).map(|_| r.random_range(0.0..50.0)).collect(),
            sd: (0..k).map(|_| r.random_range(0.5..3.0)).collect(),
        };
        let controls = moments(c, &mut r);
        let dummies = moments(self.dummies, &mut r);
        let noise = ColumnMoments::uniform(q, 0.0, 1.0);

        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        let x_star: Vec<f64> = (0..c)
            .map(|i| controls.mean[i] + controls.sd[i] * r.random_range(-1.0..=1.0) * self.optimum_spread)
            .collect();
        // coefficients act on standardized controls so every column matters
        let scale: Vec<f64> = controls.sd.iter().map(|s| 1.0 / s).collect();
        let beta1 = DVector::from_fn(c, |i, _| self.sigma_b1 * unit.sample(&mut r) * scale[i]);
        let mut beta2 = DMatrix::zeros(c, c);
        for i in 0..c {
            for j in i..c {
                let v = self.sigma_b2 * unit.sample(&mut r) * scale[i] * scale[j];
                beta2[(i, j)] = v;
                beta2[(j, i)] = v;
            }
        }
        let beta4 = DMatrix::from_fn(c, q, |i, _| self.sigma_b4 * unit.sample(&mut r) * scale[i]);
        let xs = DVector::from_column_slice(&x_star);
        let beta3 = -(beta4.transpose() * &xs);
        let partial = (beta1.transpose() * &xs)[0] + (xs.transpose() * &beta2 * &xs)[0];
        let model = RsmModel::from_parts(
            control_names(c),
            noise_names(q),
            self.target - partial,
            beta1,
            beta2,
            beta3,
            beta4,
            self.sigma_eps * self.sigma_eps,
        )?;
        let target = model.mean_surface(&x_star)?;
        let global_min_variance = self.sigma_eps * self.sigma_eps;
        Ok(GroundTruthModel {
            model,
            sigma_eps: self.sigma_eps,
            dummy_ids: dummy_names(self.dummies),
            controls,
            noise,
            dummies,
            coefficient_sd: [self.sigma_b1, self.sigma_b2, 0.0, self.sigma_b4],
            x_star,
            degenerate: false,
            target,
            global_min_variance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_structured() {
        let s = ExperimentSetting::preset(7).unwrap();
        let a = generate_ground_truth(&s, 11).unwrap();
        let b = generate_ground_truth(&s, 11).unwrap();
        assert_eq!(a.model.coefficients(), b.model.coefficients());
        assert_eq!(a.model.beta0, 0.0);
        assert_eq!(a.model.beta2, a.model.beta2.transpose());
        assert_eq!(a.dummy_ids, vec!["d1", "d2", "d3", "d4"]);
        assert!((a.target - a.true_mean(&a.x_star).unwrap()).abs() < 1e-12);
        let c = generate_ground_truth(&s, 12).unwrap();
        assert_ne!(a.model.coefficients(), c.model.coefficients());
    }

    #[test]
    fn no_interaction_means_degenerate() {
        let mut s = ExperimentSetting::preset(1).unwrap();
        s.sigma_b4 = 0.0;
        s.target_rule = TargetRule::Unconstrained;
        let g = generate_ground_truth(&s, 3).unwrap();
        assert!(g.model.beta4.iter().all(|v| *v == 0.0));
        assert!(g.degenerate);
        assert_eq!(g.target, 0.0);
    }

    #[test]
    fn case_study_hits_target() {
        let g = CaseStudyShape::default().generate(5).unwrap();
        assert!((g.target - 65.0).abs() < 1e-9);
        let slope = g.model.noise_slope(&g.x_star).unwrap();
        assert!(slope.amax() < 1e-9);
        assert!((g.optimum_variance() - 0.25).abs() < 1e-9);
    }

    #[test]
    fn embed_fills_unselected_with_means() {
        let s = ExperimentSetting::preset(5).unwrap();
        let g = generate_ground_truth(&s, 1).unwrap();
        let x = g
            .embed(&["d1".to_string(), "x2".to_string()], &[100.0, 3.0])
            .unwrap();
        assert_eq!(x, vec![1.0, 3.0]);
    }
}
