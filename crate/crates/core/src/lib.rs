//! Numerical laboratory for p-exponential priors: the univariate law, the
//! product measure and its concentration function, closed-form contraction
//! rates, and contraction experiments in the white noise and density models.

pub mod concentration;
pub mod error;
pub mod experiments;
pub mod grid1d;
pub mod measure;
pub mod models;
pub mod quadrature;
pub mod rates;
pub mod rng;
pub mod sequences;
pub mod stats;
pub mod univariate;

pub use error::{Error, Result};
pub use measure::PExpMeasure;
pub use sequences::{CoefVec, IndexScheme, ScalingSpec};
pub use univariate::PExpParams;
