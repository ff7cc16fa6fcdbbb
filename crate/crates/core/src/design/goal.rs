use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// Minimize variance subject to mean = target.
    ConstrainedTarget,
    /// Minimize `alpha * Var + (1 - alpha) * (E - t)^2`.
    Weighted,
    /// Maximize nominal-is-best SNR.
    SnrNominal,
    /// Maximize larger-is-better SNR.
    SnrLarger,
    /// Maximize smaller-is-better SNR.
    SnrSmaller,
}

impl Formulation {
    pub fn needs_target(self) -> bool {
        matches!(self, Self::ConstrainedTarget | Self::Weighted | Self::SnrNominal)
    }
}

/// What parameter design should achieve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignGoal {
    pub formulation: Formulation,
    pub target: Option<f64>,
    pub alpha: Option<f64>,
}

impl DesignGoal {
    pub fn new(formulation: Formulation, target: Option<f64>, alpha: Option<f64>) -> Result<Self> {
        let g = Self {
            formulation,
            target,
            alpha,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn constrained_target(t: f64) -> Result<Self> {
        Self::new(Formulation::ConstrainedTarget, Some(t), None)
    }

    pub fn weighted(t: f64, alpha: f64) -> Result<Self> {
        Self::new(Formulation::Weighted, Some(t), Some(alpha))
    }

    pub fn snr_nominal(t: f64) -> Result<Self> {
        Self::new(Formulation::SnrNominal, Some(t), None)
    }

    pub fn snr_larger() -> Self {
        Self {
            formulation: Formulation::SnrLarger,
            target: None,
            alpha: None,
        }
    }

    pub fn snr_smaller() -> Self {
        Self {
            formulation: Formulation::SnrSmaller,
            target: None,
            alpha: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.formulation;
        match (f.needs_target(), self.target) {
            (true, None) => return Err(Error::InvalidGoal(format!("{f:?} requires a target"))),
            (false, Some(_)) => {
                return Err(Error::InvalidGoal(format!("{f:?} does not take a target")))
            }
            (true, Some(t)) if !t.is_finite() => {
                return Err(Error::InvalidGoal("target is not finite".into()))
            }
            _ => {}
        }
        match (f == Formulation::Weighted, self.alpha) {
            (true, Some(a)) if a > 0.0 && a < 1.0 => Ok(()),
            (true, Some(a)) => Err(Error::InvalidGoal(format!("alpha {a} not in (0, 1)"))),
            (true, None) => Err(Error::InvalidGoal("weighted goal requires alpha".into())),
            (false, Some(_)) => Err(Error::InvalidGoal("alpha is only valid for Weighted".into())),
            (false, None) => Ok(()),
        }
    }

    /// Target value, or 0 when the formulation has none.
    pub fn target_or_zero(&self) -> f64 {
        self.target.unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presence_rules() {
        assert!(DesignGoal::constrained_target(1.0).is_ok());
        assert!(DesignGoal::new(Formulation::ConstrainedTarget, None, None).is_err());
        assert!(DesignGoal::new(Formulation::ConstrainedTarget, Some(1.0), Some(0.5)).is_err());
        assert!(DesignGoal::weighted(1.0, 0.5).is_ok());
        assert!(DesignGoal::weighted(1.0, 1.0).is_err());
        assert!(DesignGoal::weighted(1.0, 0.0).is_err());
        assert!(DesignGoal::new(Formulation::Weighted, Some(1.0), None).is_err());
        assert!(DesignGoal::new(Formulation::SnrLarger, Some(1.0), None).is_err());
        assert!(DesignGoal::snr_smaller().validate().is_ok());
        assert!(DesignGoal::snr_nominal(f64::NAN).is_err());
    }
}
