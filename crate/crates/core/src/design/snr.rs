//! Taguchi signal-to-noise ratios, in decibels.

use serde::{Deserialize, Serialize};

use crate::error::{DegenerateSnr, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SnrMode {
    /// Nominal-is-best around `target`.
    Nominal { target: f64 },
    Larger,
    Smaller,
}

/// Which deviation enters the nominal-is-best denominator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NominalDeviation {
    /// `s^2 = sum (y_i - t)^2 / (n - 1)`.
    #[default]
    AboutTarget,
    /// Conventional sample variance, `sum (y_i - ybar)^2 / (n - 1)`.
    AboutMean,
}

fn degenerate(kind: DegenerateSnr) -> Error {
    Error::DegenerateStatistic(kind)
}

pub fn snr(y: &[f64], mode: SnrMode) -> Result<f64> {
    snr_with(y, mode, NominalDeviation::AboutTarget)
}

pub fn snr_with(y: &[f64], mode: SnrMode, deviation: NominalDeviation) -> Result<f64> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("snr sample".into()));
    }
    let n = y.len() as f64;
    match mode {
        SnrMode::Nominal { target } => {
            if y.len() < 2 {
                return Err(degenerate(DegenerateSnr::TooFewObservations));
            }
            let mean = y.iter().sum::<f64>() / n;
            let center = match deviation {
                NominalDeviation::AboutTarget => target,
                NominalDeviation::AboutMean => mean,
            };
            let s2 = y.iter().map(|v| (v - center).powi(2)).sum::<f64>() / (n - 1.0);
            if s2 == 0.0 {
                return Err(degenerate(DegenerateSnr::ZeroDeviation));
            }
            if mean == 0.0 {
                return Err(degenerate(DegenerateSnr::ZeroMean));
            }
            Ok(10.0 * (mean * mean / s2).log10())
        }
        SnrMode::Larger => {
            if y.is_empty() {
                return Err(degenerate(DegenerateSnr::TooFewObservations));
            }
            if y.contains(&0.0) {
                return Err(degenerate(DegenerateSnr::ZeroObservation));
            }
            let msd = y.iter().map(|v| (1.0 / v).powi(2)).sum::<f64>() / n;
            Ok(-10.0 * msd.log10())
        }
        SnrMode::Smaller => {
            if y.is_empty() {
                return Err(degenerate(DegenerateSnr::TooFewObservations));
            }
            let msd = y.iter().map(|v| v * v).sum::<f64>() / n;
            if msd == 0.0 {
                return Err(degenerate(DegenerateSnr::AllZero));
            }
            Ok(-10.0 * msd.log10())
        }
    }
}

/// Population SNR of a response with the given mean and variance, used when
/// an SNR goal drives the design search. Larger-is-better uses the
/// second-order expansion `E[1/y^2] ~ (1 + 3 v / m^2) / m^2`.
pub(crate) fn population_snr(mean: f64, variance: f64, mode: SnrMode) -> f64 {
    let tiny = f64::MIN_POSITIVE;
    match mode {
        SnrMode::Nominal { target } => {
            let s2 = (variance + (mean - target).powi(2)).max(tiny);
            10.0 * ((mean * mean).max(tiny) / s2).log10()
        }
        SnrMode::Larger => {
            let m2 = (mean * mean).max(tiny);
            let msd = (1.0 + 3.0 * variance / m2) / m2;
            -10.0 * msd.log10()
        }
        SnrMode::Smaller => -10.0 * (mean * mean + variance).max(tiny).log10(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_values() {
        assert_eq!(snr(&[1.0, 1.0], SnrMode::Smaller).unwrap(), 0.0);
        assert_eq!(snr(&[1.0, 1.0], SnrMode::Larger).unwrap(), 0.0);
        let v = snr(&[9.0, 11.0], SnrMode::Nominal { target: 10.0 }).unwrap();
        // 10 * log10(100 / 2)
        assert!((v - 16.989_700_043_360_187).abs() < 1e-12);
    }

    #[test]
    fn conventional_deviation_flag() {
        let y = [9.0, 12.0];
        let paper = snr(&y, SnrMode::Nominal { target: 10.0 }).unwrap();
        let conv = snr_with(&y, SnrMode::Nominal { target: 10.0 }, NominalDeviation::AboutMean).unwrap();
        // about target: (1 + 4) / 1; about mean: (2.25 + 2.25) / 1
        assert!((paper - 10.0 * (110.25f64 / 5.0).log10()).abs() < 1e-12);
        assert!((conv - 10.0 * (110.25f64 / 4.5).log10()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cases_are_distinct() {
        let err = |r: Result<f64>| match r {
            Err(Error::DegenerateStatistic(k)) => k,
            other => panic!("expected degenerate error, got {other:?}"),
        };
        assert_eq!(
            err(snr(&[10.0, 10.0], SnrMode::Nominal { target: 10.0 })),
            DegenerateSnr::ZeroDeviation
        );
        assert_eq!(
            err(snr(&[-1.0, 1.0], SnrMode::Nominal { target: 0.5 })),
            DegenerateSnr::ZeroMean
        );
        assert_eq!(
            err(snr(&[1.0], SnrMode::Nominal { target: 0.5 })),
            DegenerateSnr::TooFewObservations
        );
        assert_eq!(err(snr(&[1.0, 0.0], SnrMode::Larger)), DegenerateSnr::ZeroObservation);
        assert_eq!(err(snr(&[0.0, 0.0], SnrMode::Smaller)), DegenerateSnr::AllZero);
        assert_eq!(err(snr(&[], SnrMode::Smaller)), DegenerateSnr::TooFewObservations);
    }
}
