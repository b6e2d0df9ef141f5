//! Nonlinear population Monte Carlo with transformed importance weights.
//!
//! Weights live in the log domain throughout ([`weights`]). Every random
//! draw comes from a keyed [`sampling::RngStream`], so results depend only
//! on the seed and never on thread scheduling.
//!
//! [`gmm`] and [`skm`] hold the two benchmark models: a two-component
//! Gaussian mixture with a grid-quadrature reference posterior, and a
//! Lotka-Volterra jump process observed in noise.

// `!(x > 0.0)` is the idiom for rejecting NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gmm;
pub mod metrics;
pub mod pmc;
pub mod sampling;
pub mod skm;
pub mod weights;

pub use error::{Error, Result};
