//! Latent-attribute network model: fitness-weighted feature matrices,
//! parameter estimation, fitness recovery and graph synthesis.

pub mod estimation;
pub mod graph;
pub mod ingest;
pub mod likelihood;
pub mod mcmc;
pub mod model;
pub mod rank;
pub mod rng;
pub mod stats;
