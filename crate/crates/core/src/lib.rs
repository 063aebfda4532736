//! Numerical tools for autocorrelation inequalities: step-function
//! autocorrelations, Fourier-side bounds, constant evaluation, extremal
//! search and dual-certificate checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod bump;
pub mod constants;
pub mod correlate;
pub mod dualcheck;
pub mod error;
pub mod funcspace;
pub mod functionals;
pub mod quad;
pub mod search;
pub mod spectral;

pub use error::{Error, Result};
pub use funcspace::{AnalyticFamily, GridFunction, MixedMeasure};
pub use quad::Estimate;
