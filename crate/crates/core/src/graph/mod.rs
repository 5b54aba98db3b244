//! Graphs built from attribute matrices.
//!
//! The weight of a node pair is `w_ij = z_i^T Xi z_j`; with `Xi = I` it counts
//! shared features. Three edge models are offered:
//!
//! * FF: each pair is linked independently with probability `Phi(w_ij)`,
//!   `Phi(x) = 1 / (exp(K (theta - x)) + 1)`.
//! * FFBA: nodes arrive in order and node `i` links to `j < i` with
//!   probability `delta Phi(w_ij) + (1 - delta) D_j / (2 m)`, where `D_j` and
//!   `m` are the degree and edge totals after node `i - 1` arrived.
//! * FFJR: an FF graph `A'` is built first; then every node picks one node at
//!   distance two in `A'` uniformly and links to it with probability
//!   `1 - delta`.

mod calibrate;
mod generate;
pub mod io;
mod weights;

pub use calibrate::{calibrate_model, calibrate_theta, expected_edges, sigmoid, Calibration, WeightDistribution};
pub use generate::{generate, generate_from_weights, generate_ff, generate_ffba, generate_ffjr, mixture_probability, GraphBuild};
pub use weights::{brute_force_weights, weight, PairWeights};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("node {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("influence matrix: {0}")]
    InvalidInfluence(String),
    #[error("steepness K must be positive, got {0}")]
    InvalidSteepness(f64),
    #[error("mixing weight delta must lie in [0, 1], got {0}")]
    InvalidDelta(f64),
    #[error("target edge count {target} exceeds the {pairs} available pairs")]
    TargetTooLarge { target: f64, pairs: u64 },
    #[error("target edge count must be a nonnegative finite number, got {0}")]
    InvalidTarget(f64),
    #[error("threshold calibration failed to converge: {0}")]
    Calibration(String),
    #[error("unknown edge model {0:?}")]
    UnknownModel(String),
}

/// Symmetric feature-feature influence matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Influence {
    Identity,
    /// Diagonal entries `xi_kk`; features beyond the vector get weight 0.
    Diagonal(Vec<f64>),
    /// Row-major `dim x dim` matrix; features beyond `dim` get weight 0.
    Dense { dim: usize, values: Vec<f64> },
}

impl Influence {
    pub fn validate(&self) -> Result<(), GraphError> {
        let bad = |m: String| Err(GraphError::InvalidInfluence(m));
        match self {
            Self::Identity => Ok(()),
            Self::Diagonal(d) => match d.iter().position(|v| !v.is_finite()) {
                Some(k) => bad(format!("entry {k} is not finite")),
                None => Ok(()),
            },
            Self::Dense { dim, values } => {
                if values.len() != dim * dim {
                    return bad(format!("{} values for a {dim}x{dim} matrix", values.len()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return bad("entries must be finite".into());
                }
                for a in 0..*dim {
                    for b in 0..a {
                        if values[a * dim + b] != values[b * dim + a] {
                            return bad(format!("not symmetric at ({a}, {b})"));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// `xi_{h,k}`.
    pub fn entry(&self, h: usize, k: usize) -> f64 {
        match self {
            Self::Identity => f64::from(u8::from(h == k)),
            Self::Diagonal(d) => {
                if h == k {
                    d.get(k).copied().unwrap_or(0.0)
                } else {
                    0.0
                }
            }
            Self::Dense { dim, values } => {
                if h < *dim && k < *dim {
                    values[h * dim + k]
                } else {
                    0.0
                }
            }
        }
    }

    pub(crate) fn is_diagonal(&self) -> bool {
        !matches!(self, Self::Dense { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ff,
    Ffba,
    Ffjr,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ff => "ff",
            Self::Ffba => "ffba",
            Self::Ffjr => "ffjr",
        })
    }
}

impl FromStr for ModelKind {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ff" => Ok(Self::Ff),
            "ffba" => Ok(Self::Ffba),
            "ffjr" => Ok(Self::Ffjr),
            _ => Err(GraphError::UnknownModel(s.to_string())),
        }
    }
}

/// Edge model parameters. `k = f64::INFINITY` selects the step function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeModel {
    pub kind: ModelKind,
    pub xi: Influence,
    pub k: f64,
    pub theta: f64,
    pub delta: f64,
}

impl EdgeModel {
    pub fn new(kind: ModelKind, k: f64, theta: f64, delta: f64) -> Result<Self, GraphError> {
        let model = Self {
            kind,
            xi: Influence::Identity,
            k,
            theta,
            delta,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn ff(k: f64, theta: f64) -> Result<Self, GraphError> {
        Self::new(ModelKind::Ff, k, theta, 1.0)
    }

    pub fn with_influence(mut self, xi: Influence) -> Result<Self, GraphError> {
        xi.validate()?;
        self.xi = xi;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if !(self.k > 0.0) || self.k.is_nan() {
            return Err(GraphError::InvalidSteepness(self.k));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(GraphError::InvalidDelta(self.delta));
        }
        self.xi.validate()
    }

    pub fn phi(&self, x: f64) -> f64 {
        sigmoid(x, self.k, self.theta)
    }

    /// Share of the target edge count assigned to the feature term when
    /// calibrating `theta`: the whole target for FF and FFBA (whose feature
    /// term is already scaled by `delta`), `delta` of it for FFJR.
    pub fn feature_share(&self) -> f64 {
        match self.kind {
            ModelKind::Ff | ModelKind::Ffba => 1.0,
            ModelKind::Ffjr => self.delta,
        }
    }
}

/// Undirected simple graph with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<u32>>,
    edges: usize,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); n],
            edges: 0,
        }
    }

    /// Builds a graph from an edge list, merging duplicates.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            for node in [a, b] {
                if node >= n {
                    return Err(GraphError::NodeOutOfRange { node, n });
                }
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            adjacency[a].push(b as u32);
            adjacency[b].push(a as u32);
        }
        let mut total = 0;
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
            total += list.len();
        }
        Ok(Self {
            adjacency,
            edges: total / 2,
        })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&(b as u32)).is_ok()
    }

    /// Edges `(a, b)` with `a < b`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edges);
        for (a, list) in self.adjacency.iter().enumerate() {
            for &b in list {
                if (b as usize) > a {
                    out.push((a, b as usize));
                }
            }
        }
        out
    }

    /// Symmetric, sorted, free of self-loops and duplicates.
    pub fn is_simple(&self) -> bool {
        let mut half = 0;
        for (a, list) in self.adjacency.iter().enumerate() {
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return false;
            }
            for &b in list {
                if b as usize == a || !self.has_edge(b as usize, a) {
                    return false;
                }
            }
            half += list.len();
        }
        half == 2 * self.edges
    }

    /// Adds an edge, returning false when it already existed.
    pub(crate) fn insert(&mut self, a: usize, b: usize) -> bool {
        debug_assert_ne!(a, b);
        match self.adjacency[a].binary_search(&(b as u32)) {
            Ok(_) => false,
            Err(pos) => {
                self.adjacency[a].insert(pos, b as u32);
                let pos_b = self.adjacency[b].binary_search(&(a as u32)).unwrap_err();
                self.adjacency[b].insert(pos_b, a as u32);
                self.edges += 1;
                true
            }
        }
    }

    /// Builds from per-node sorted adjacency lists known to be symmetric.
    pub(crate) fn from_sorted_adjacency(adjacency: Vec<Vec<u32>>) -> Self {
        let edges = adjacency.iter().map(Vec::len).sum::<usize>() / 2;
        let g = Self { adjacency, edges };
        debug_assert!(g.is_simple());
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_construction() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 0), (2, 3)]).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert!(g.is_simple());
        assert_eq!(g.edges(), vec![(0, 1), (2, 3)]);
        assert!(Graph::from_edges(2, &[(0, 0)]).is_err());
        assert!(Graph::from_edges(2, &[(0, 2)]).is_err());
        let mut g = Graph::empty(3);
        assert!(g.insert(2, 0));
        assert!(!g.insert(0, 2));
        assert_eq!(g.neighbors(0), &[2]);
        assert!(g.is_simple());
    }

    #[test]
    fn influence_validation() {
        assert!(Influence::Dense {
            dim: 2,
            values: vec![1.0, 2.0, 3.0, 1.0]
        }
        .validate()
        .is_err());
        assert!(Influence::Dense { dim: 2, values: vec![1.0] }.validate().is_err());
        assert!(Influence::Diagonal(vec![f64::NAN]).validate().is_err());
        assert_eq!(Influence::Diagonal(vec![2.0]).entry(0, 0), 2.0);
        assert_eq!(Influence::Diagonal(vec![2.0]).entry(3, 3), 0.0);
        assert_eq!(Influence::Identity.entry(1, 1), 1.0);
        assert_eq!(Influence::Identity.entry(1, 2), 0.0);
    }

    #[test]
    fn model_validation() {
        assert!(EdgeModel::ff(0.0, 1.0).is_err());
        assert!(EdgeModel::ff(f64::NAN, 1.0).is_err());
        assert!(EdgeModel::ff(f64::INFINITY, 1.0).is_ok());
        assert!(EdgeModel::new(ModelKind::Ffba, 1.0, 0.0, 1.5).is_err());
        assert_eq!("FFJR".parse::<ModelKind>().unwrap(), ModelKind::Ffjr);
        assert!("ba".parse::<ModelKind>().is_err());
    }
}
