//! Integrated control-variable selection and robust parameter design for
//! observational process data.
//!
//! A quadratic response model in the control variables `x` and noise
//! variables `z` is fitted by least squares; its mean and
//! transmitted-variance surfaces drive a parameter-design optimizer, and a
//! genetic-algorithm wrapper searches control subsets using the achieved
//! design quality as fitness. Filter (mutual information) and
//! random-forest ranking baselines and a seeded synthetic benchmark are
//! included.

pub mod baseline;
pub mod data;
pub mod design;
pub mod error;
pub mod rng;
pub mod rsm;
pub mod search;
pub mod synth;

pub use error::{Error, Result};
