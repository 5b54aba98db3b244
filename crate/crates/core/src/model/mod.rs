//! Generative model for the node-attribute matrix.
//!
//! Nodes arrive one at a time. Node 1 exhibits `Poisson(alpha)` features. Node
//! `n + 1` re-uses every already observed feature `k` independently with
//! probability
//!
//! ```text
//! P_n(k) = sum_{i<=n} R_i Z_{i,k} / (c + sum_{i<=n} R_i)
//! ```
//!
//! and then introduces `Poisson(Lambda_n)` brand new features, where
//! `Lambda_n = alpha / (sum_{i<=n} R_i)^(1 - beta)`. `R_i` is the fitness of
//! node `i`; fitter nodes pass their features on more often.

mod fitness;
mod generate;
pub mod io;
mod matrix;

pub use fitness::{FitnessSpec, FitnessVector};
pub use generate::{
    generate, generate_matrix, inclusion_probability, new_feature_rate, sample_growth, Generated,
};
pub use matrix::{AttributeMatrix, DenseMatrix};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("beta must be finite and at most 1, got {0}")]
    InvalidBeta(f64),
    #[error("c must be nonnegative and finite, got {0}")]
    InvalidOffset(f64),
    #[error("invalid fitness distribution: {0}")]
    InvalidFitness(String),
    #[error("node count must be at least 1")]
    EmptyModel,
    #[error("row {row}: {reason}")]
    NotLeftOrdered { row: usize, reason: String },
    #[error("fitness vector has {got} entries, matrix has {expected} rows")]
    LengthMismatch { expected: usize, got: usize },
    #[error("fitness value {value} at node {index} is not strictly positive")]
    NonPositiveFitness { index: usize, value: f64 },
    #[error("feature index {k} out of range (only {available} features observed)")]
    FeatureOutOfRange { k: usize, available: usize },
    #[error("node prefix {0} out of range")]
    PrefixOutOfRange(usize),
}

/// `alpha`, `beta` and the inclusion offset `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    alpha: f64,
    beta: f64,
    c: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, ModelError> {
        Self::with_offset(alpha, beta, 0.0)
    }

    pub fn with_offset(alpha: f64, beta: f64, c: f64) -> Result<Self, ModelError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(ModelError::InvalidAlpha(alpha));
        }
        if !(beta.is_finite() && beta <= 1.0) {
            return Err(ModelError::InvalidBeta(beta));
        }
        if !(c.is_finite() && c >= 0.0) {
            return Err(ModelError::InvalidOffset(c));
        }
        Ok(Self { alpha, beta, c })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `alpha' = alpha / m_R^(1 - beta)`, the rate parameter that goes with
    /// fitness values normalized by their mean.
    pub fn alpha_prime(&self, mean_fitness: f64) -> f64 {
        self.alpha / mean_fitness.powf(1.0 - self.beta)
    }

    /// Limit of `L_n / a_n(beta)`; defined for `beta` in `[0, 1]`.
    pub fn growth_limit(&self, mean_fitness: f64) -> Option<f64> {
        if self.beta == 0.0 {
            Some(self.alpha / mean_fitness)
        } else if self.beta > 0.0 && self.beta <= 1.0 {
            Some(self.alpha / (self.beta * mean_fitness.powf(1.0 - self.beta)))
        } else {
            None
        }
    }

    /// Normalizing sequence `a_n(beta)`: `ln n` for `beta = 0`, `n^beta` otherwise.
    pub fn growth_scale(&self, n: usize) -> Option<f64> {
        let n = n as f64;
        if self.beta == 0.0 {
            Some(n.ln())
        } else if self.beta > 0.0 && self.beta <= 1.0 {
            Some(n.powf(self.beta))
        } else {
            None
        }
    }
}
