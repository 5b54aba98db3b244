use std::collections::HashSet;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::{EdgeModel, Graph, GraphError, ModelKind, PairWeights};
use crate::model::AttributeMatrix;
use crate::rng::{self, SimRng, Stream};

/// Below this background probability, background edges are drawn as a
/// binomial count placed uniformly instead of pair by pair.
const SPARSE_BACKGROUND: f64 = 0.1;

/// A sampled graph and some bookkeeping about how it was built.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphBuild {
    pub graph: Graph,
    /// Edges between pairs whose weight is the background offset.
    pub background_edges: usize,
    /// Edges added by the closure step (FFJR only).
    pub closure_edges: usize,
}

/// Samples a graph under `model.kind`.
pub fn generate(matrix: &AttributeMatrix, model: &EdgeModel, seed: u64) -> Result<GraphBuild, GraphError> {
    let weights = PairWeights::compute(matrix, &model.xi);
    generate_from_weights(&weights, model, seed)
}

/// Same as [`generate`] with precomputed pair weights.
pub fn generate_from_weights(weights: &PairWeights, model: &EdgeModel, seed: u64) -> Result<GraphBuild, GraphError> {
    model.validate()?;
    Ok(match model.kind {
        ModelKind::Ff => ff(weights, model, seed),
        ModelKind::Ffba => ffba(weights, model, seed),
        ModelKind::Ffjr => ffjr(weights, model, seed),
    })
}

/// Every pair is linked independently with probability `Phi(w_ij)`. The kind
/// and `delta` of the model are ignored.
pub fn generate_ff(matrix: &AttributeMatrix, model: &EdgeModel, seed: u64) -> Result<GraphBuild, GraphError> {
    model.validate()?;
    Ok(ff(&PairWeights::compute(matrix, &model.xi), model, seed))
}

pub fn generate_ffba(matrix: &AttributeMatrix, model: &EdgeModel, seed: u64) -> Result<GraphBuild, GraphError> {
    model.validate()?;
    Ok(ffba(&PairWeights::compute(matrix, &model.xi), model, seed))
}

pub fn generate_ffjr(matrix: &AttributeMatrix, model: &EdgeModel, seed: u64) -> Result<GraphBuild, GraphError> {
    model.validate()?;
    Ok(ffjr(&PairWeights::compute(matrix, &model.xi), model, seed))
}

/// Edge probability `delta phi + (1 - delta) degree / (2 edges)` of the mixed
/// preferential model, clamped to `[0, 1]`. The preferential term is 0 while
/// the graph has no edges.
pub fn mixture_probability(delta: f64, phi: f64, degree: usize, edges: usize) -> f64 {
    let pref = if edges == 0 {
        0.0
    } else {
        degree as f64 / (2.0 * edges as f64)
    };
    (delta * phi + (1.0 - delta) * pref).clamp(0.0, 1.0)
}

fn bernoulli(rng: &mut SimRng, p: f64) -> bool {
    rng.random::<f64>() < p
}

fn ff(weights: &PairWeights, model: &EdgeModel, seed: u64) -> GraphBuild {
    let n = weights.n();
    let mut rng = rng::stream(seed, Stream::Edges);
    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &(i, j, w) in weights.entries() {
        if bernoulli(&mut rng, model.phi(w)) {
            adjacency[i as usize].push(j);
            adjacency[j as usize].push(i);
        }
    }
    let p0 = model.phi(weights.offset());
    let background = weights.background_pairs();
    let mut background_edges = 0;
    if background > 0 && p0 > 0.0 {
        if p0 < SPARSE_BACKGROUND {
            let count = Binomial::new(background, p0)
                .expect("probability in [0, 1)")
                .sample(&mut rng);
            let mut chosen = HashSet::new();
            while (chosen.len() as u64) < count {
                let i = rng.random_range(1..n);
                let j = rng.random_range(0..i);
                if has_entry(weights, i, j) || !chosen.insert((i, j)) {
                    continue;
                }
            }
            let mut chosen: Vec<_> = chosen.into_iter().collect();
            chosen.sort_unstable();
            for (i, j) in chosen {
                adjacency[i].push(j as u32);
                adjacency[j].push(i as u32);
            }
            background_edges = count as usize;
        } else {
            for i in 1..n {
                let row = weights.row_entries(i);
                let mut next = 0;
                for j in 0..i {
                    if next < row.len() && row[next].1 as usize == j {
                        next += 1;
                        continue;
                    }
                    if bernoulli(&mut rng, p0) {
                        adjacency[i].push(j as u32);
                        adjacency[j].push(i as u32);
                        background_edges += 1;
                    }
                }
            }
        }
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }
    GraphBuild {
        graph: Graph::from_sorted_adjacency(adjacency),
        background_edges,
        closure_edges: 0,
    }
}

fn has_entry(weights: &PairWeights, i: usize, j: usize) -> bool {
    weights
        .row_entries(i)
        .binary_search_by_key(&(j as u32), |e| e.1)
        .is_ok()
}

fn ffba(weights: &PairWeights, model: &EdgeModel, seed: u64) -> GraphBuild {
    let n = weights.n();
    let mut rng = rng::stream(seed, Stream::Edges);
    let mut graph = Graph::empty(n);
    let mut degree = vec![0usize; n];
    let mut background_edges = 0;
    let mut new_links = Vec::new();
    for i in 1..n {
        let edges = graph.edge_count();
        let row = weights.row_entries(i);
        let mut next = 0;
        for j in 0..i {
            let (w, explicit) = if next < row.len() && row[next].1 as usize == j {
                next += 1;
                (row[next - 1].2, true)
            } else {
                (weights.offset(), false)
            };
            let p = mixture_probability(model.delta, model.phi(w), degree[j], edges);
            if bernoulli(&mut rng, p) {
                new_links.push(j);
                if !explicit {
                    background_edges += 1;
                }
            }
        }
        for &j in &new_links {
            graph.insert(i, j);
            degree[i] += 1;
            degree[j] += 1;
        }
        new_links.clear();
    }
    GraphBuild {
        graph,
        background_edges,
        closure_edges: 0,
    }
}

fn ffjr(weights: &PairWeights, model: &EdgeModel, seed: u64) -> GraphBuild {
    let base = ff(weights, model, seed);
    let first = &base.graph;
    let mut graph = first.clone();
    let mut rng = rng::stream(seed, Stream::Closure);
    let mut closure_edges = 0;
    let mut mark = vec![usize::MAX; first.n()];
    let mut two_hop = Vec::new();
    for i in 0..first.n() {
        mark[i] = i;
        for &u in first.neighbors(i) {
            mark[u as usize] = i;
        }
        for &u in first.neighbors(i) {
            for &v in first.neighbors(u as usize) {
                if mark[v as usize] != i {
                    mark[v as usize] = i;
                    two_hop.push(v);
                }
            }
        }
        if !two_hop.is_empty() {
            two_hop.sort_unstable();
            let v = two_hop[rng.random_range(0..two_hop.len())] as usize;
            if bernoulli(&mut rng, 1.0 - model.delta) && graph.insert(i, v) {
                closure_edges += 1;
            }
        }
        two_hop.clear();
    }
    GraphBuild {
        graph,
        background_edges: base.background_edges,
        closure_edges,
    }
}
