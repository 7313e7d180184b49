use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Outcome of a least-squares fit. Parameters are in SI units, in the order
/// given by the model registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model_id: String,
    pub param_names: Vec<String>,
    pub params: Vec<f64>,
    /// Row-major, `params.len()` square. Rows of frozen parameters are zero.
    pub covariance: Vec<Vec<f64>>,
    /// sqrt(Σ r²) of the (weighted) residuals.
    pub residual_norm: f64,
    pub n_points: usize,
    pub converged: bool,
    pub iterations: usize,
    #[serde(default)]
    pub fixed: Vec<String>,
    #[serde(default)]
    pub diagnostic: Option<String>,
    /// Conventions needed to reproduce the fit (log base, t0, weighting...).
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl FitResult {
    fn index(&self, name: &str) -> Option<usize> {
        self.param_names.iter().position(|n| n == name)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.params[i])
    }

    /// One-sigma standard error from the covariance diagonal.
    pub fn stderr(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.covariance[i][i].max(0.0).sqrt())
    }

    pub fn named(&self) -> BTreeMap<String, f64> {
        self.param_names
            .iter()
            .cloned()
            .zip(self.params.iter().copied())
            .collect()
    }
}
