use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the coefficient scale columns are read.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientScale {
    /// Values are standard deviations.
    #[default]
    StdDev,
    /// Values are variances; the standard deviation is their square root.
    Variance,
}

/// Where the ground-truth robust setting, and so the target, is taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetRule {
    /// Unconstrained minimizer of the true transmitted variance.
    Unconstrained,
    /// Minimizer within `E(X) ± sigmas·σ_X` of every control.
    OperatingBox { sigmas: f64 },
}

impl Default for TargetRule {
    fn default() -> Self {
        Self::OperatingBox { sigmas: 4.0 }
    }
}

/// One synthetic benchmark configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSetting {
    pub id: u32,
    pub controls: usize,
    pub noise: usize,
    pub dummies: usize,
    pub observations: usize,
    pub sigma_eps: f64,
    pub sigma_x: f64,
    pub mean_x: f64,
    pub sigma_z: f64,
    pub mean_z: f64,
    pub sigma_d: f64,
    pub mean_d: f64,
    pub sigma_b1: f64,
    pub sigma_b2: f64,
    pub sigma_b3: f64,
    pub sigma_b4: f64,
    pub runs: usize,
    pub ga_pop: usize,
    pub ga_gens: usize,
    #[serde(default)]
    pub coefficient_scale: CoefficientScale,
    #[serde(default)]
    pub target_rule: TargetRule,
}

// id, C, N, D, O, s_eps, s_X, E(X), s_Z, E(Z), s_D, E(D), s_b1, s_b2, s_b3, s_b4, runs, pop, gens
#[rustfmt::skip]
const TABLE: [[f64; 19]; 18] = [
    [1.0, 2.0, 2.0, 2.0, 100.0, 1.0, 2.0, 0.0, 1.0, 0.0, 2.0, 0.0, 0.1, 0.5, 2.0, 0.5, 20.0, 4.0, 10.0],
    [2.0, 2.0, 2.0, 2.0, 100.0, 1.0, 2.0, 1.0, 1.0, 0.0, 2.0, 1.0, 0.1, 0.1, 2.0, 0.1, 20.0, 4.0, 10.0],
    [3.0, 2.0, 2.0, 2.0, 100.0, 1.0, 2.0, 10.0, 1.0, 0.0, 2.0, 10.0, 1.0, 0.01, 2.0, 0.01, 20.0, 4.0, 10.0],
    [4.0, 2.0, 2.0, 2.0, 100.0, 1.0, 8.0, 0.0, 1.0, 0.0, 8.0, 0.0, 0.1, 0.5, 8.0, 0.5, 20.0, 4.0, 10.0],
    [5.0, 2.0, 2.0, 2.0, 100.0, 1.0, 8.0, 1.0, 1.0, 0.0, 8.0, 1.0, 0.1, 0.1, 8.0, 0.1, 20.0, 4.0, 10.0],
    [6.0, 2.0, 2.0, 2.0, 100.0, 1.0, 8.0, 10.0, 1.0, 0.0, 8.0, 10.0, 1.0, 0.01, 8.0, 0.01, 20.0, 4.0, 10.0],
    [7.0, 4.0, 4.0, 4.0, 1000.0, 1.0, 2.0, 0.0, 1.0, 0.0, 2.0, 0.0, 0.1, 0.5, 2.0, 0.5, 20.0, 10.0, 25.0],
    [8.0, 4.0, 4.0, 4.0, 1000.0, 1.0, 2.0, 1.0, 1.0, 0.0, 2.0, 1.0, 0.1, 0.1, 2.0, 0.1, 20.0, 10.0, 25.0],
    [9.0, 4.0, 4.0, 4.0, 1000.0, 1.0, 2.0, 10.0, 1.0, 0.0, 2.0, 10.0, 1.0, 0.01, 2.0, 0.01, 20.0, 10.0, 25.0],
    [10.0, 4.0, 4.0, 4.0, 1000.0, 1.0, 8.0, 0.0, 1.0, 0.0, 8.0, 0.0, 0.1, 0.5, 8.0, 0.5, 20.0, 10.0, 25.0],
    [11.0, 4.0, 4.0, 4.0, 1000.0, 1.0, 8.0, 1.0, 1.0, 0.0, 8.0, 1.0, 0.1, 0.1, 8.0, 0.1, 20.0, 10.0, 25.0],
    [12.0, 4.0, 4.0, 4.0, 1000.0, 1.0, 8.0, 10.0, 1.0, 0.0, 8.0, 10.0, 1.0, 0.01, 8.0, 0.01, 20.0, 10.0, 25.0],
    [13.0, 8.0, 8.0, 8.0, 1000.0, 1.0, 2.0, 0.0, 1.0, 0.0, 2.0, 0.0, 0.1, 0.5, 2.0, 0.5, 20.0, 20.0, 60.0],
    [14.0, 8.0, 8.0, 8.0, 1000.0, 1.0, 2.0, 1.0, 1.0, 0.0, 2.0, 1.0, 0.1, 0.1, 2.0, 0.1, 20.0, 20.0, 60.0],
    [15.0, 8.0, 8.0, 8.0, 1000.0, 1.0, 2.0, 10.0, 1.0, 0.0, 2.0, 10.0, 1.0, 0.01, 2.0, 0.01, 20.0, 20.0, 60.0],
    [16.0, 8.0, 8.0, 8.0, 1000.0, 1.0, 8.0, 0.0, 1.0, 0.0, 8.0, 0.0, 0.1, 0.5, 8.0, 0.5, 20.0, 20.0, 60.0],
    [17.0, 8.0, 8.0, 8.0, 1000.0, 1.0, 8.0, 1.0, 1.0, 0.0, 8.0, 1.0, 0.1, 0.1, 8.0, 0.1, 20.0, 20.0, 60.0],
    [18.0, 8.0, 8.0, 8.0, 1000.0, 1.0, 8.0, 10.0, 1.0, 0.0, 8.0, 10.0, 1.0, 0.01, 8.0, 0.01, 20.0, 20.0, 60.0],
];

impl ExperimentSetting {
    /// Built-in benchmark setting `id` in 1..=18.
    pub fn preset(id: u32) -> Result<Self> {
        let row = TABLE
            .get((id as usize).wrapping_sub(1))
            .ok_or_else(|| Error::InvalidConfig(format!("no built-in setting {id} (valid: 1-18)")))?;
        Ok(Self {
            id,
            controls: row[1] as usize,
            noise: row[2] as usize,
            dummies: row[3] as usize,
            observations: row[4] as usize,
            sigma_eps: row[5],
            sigma_x: row[6],
            mean_x: row[7],
            sigma_z: row[8],
            mean_z: row[9],
            sigma_d: row[10],
            mean_d: row[11],
            sigma_b1: row[12],
            sigma_b2: row[13],
            sigma_b3: row[14],
            sigma_b4: row[15],
            runs: row[16] as usize,
            ga_pop: row[17] as usize,
            ga_gens: row[18] as usize,
            coefficient_scale: CoefficientScale::StdDev,
            target_rule: TargetRule::default(),
        })
    }

    pub fn all_presets() -> Vec<Self> {
        (1..=18).map(|i| Self::preset(i).expect("table row")).collect()
    }

    pub fn with_runs(mut self, runs: usize) -> Self {
        self.runs = runs;
        self
    }

    pub fn with_sigma_eps_scale(mut self, factor: f64) -> Self {
        self.sigma_eps *= factor;
        self
    }

    /// Coefficient standard deviations for groups 1-4.
    pub fn coefficient_sd(&self) -> [f64; 4] {
        let raw = [self.sigma_b1, self.sigma_b2, self.sigma_b3, self.sigma_b4];
        match self.coefficient_scale {
            CoefficientScale::StdDev => raw,
            CoefficientScale::Variance => raw.map(|v| v.sqrt()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.controls == 0 || self.noise == 0 || self.observations == 0 || self.runs == 0 {
            return Err(Error::InvalidConfig(format!(
                "setting {}: controls, noise, observations and runs must be >= 1",
                self.id
            )));
        }
        let sigmas = [
            self.sigma_eps,
            self.sigma_x,
            self.sigma_z,
            self.sigma_d,
            self.sigma_b1,
            self.sigma_b2,
            self.sigma_b3,
            self.sigma_b4,
        ];
        if sigmas.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "setting {}: standard deviations must be finite and >= 0",
                self.id
            )));
        }
        let means = [self.mean_x, self.mean_z, self.mean_d];
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidConfig(format!("setting {}: non-finite mean", self.id)));
        }
        if let TargetRule::OperatingBox { sigmas } = self.target_rule {
            if !(sigmas > 0.0) || !sigmas.is_finite() {
                return Err(Error::InvalidConfig(format!("setting {}: target box must be > 0", self.id)));
            }
        }
        if self.ga_pop < 2 {
            return Err(Error::InvalidConfig(format!("setting {}: ga_pop must be >= 2", self.id)));
        }
        Ok(())
    }
}
