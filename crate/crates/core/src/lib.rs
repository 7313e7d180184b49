//! Simulation and analysis of photon echoes in rare-earth ion ensembles.

pub mod analytic;
pub mod error;
pub mod fit;
pub mod metrics;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod sim;
pub mod units;
pub mod validate;

pub use error::{Error, Result};
pub use model::*;
pub use validate::{validate, Validate, ValidationReport};
