use crate::error::{Error, Result};

use super::document::{failure_summary, space_checks};

/// Allowed deviation of the weight sum from 1.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Finite hidden-variable space: named points and their probability weights.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenSpace {
    points: Vec<String>,
    weights: Vec<f64>,
}

impl HiddenSpace {
    pub fn new(points: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        let checks = space_checks(&points, &weights);
        if let Some(msg) = failure_summary(&checks) {
            return Err(Error::InvalidSpace(msg));
        }
        Ok(HiddenSpace { points, weights })
    }

    /// Points named `l0`, `l1`, ... with the given weights.
    pub fn with_weights(weights: Vec<f64>) -> Result<Self> {
        let points = (0..weights.len()).map(|i| format!("l{i}")).collect();
        Self::new(points, weights)
    }

    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::SpaceSize(0));
        }
        Self::with_weights(vec![1.0 / size as f64; size])
    }

    pub fn point_mass() -> Self {
        HiddenSpace {
            points: vec!["l0".to_string()],
            weights: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Same points, different weights.
    pub fn reweighted(&self, weights: Vec<f64>) -> Result<Self> {
        Self::new(self.points.clone(), weights)
    }
}
