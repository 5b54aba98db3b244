//! Topology diagnostics: degree histogram, reachable pairs and the
//! distribution of shortest-path lengths.
//!
//! Pairs are unordered and exclude self-pairs. Breadth-first searches from
//! different sources run in parallel.

use std::collections::VecDeque;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::rng::{self, Stream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("sampled mode needs at least one source")]
    NoSources,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DistanceMode {
    Exact,
    /// BFS from `sources` distinct nodes drawn uniformly (capped at `n`).
    Sampled { sources: usize, seed: u64 },
}

/// `hist[d]` is the number of nodes of degree `d`.
pub fn degree_histogram(g: &Graph) -> Vec<u64> {
    let max = (0..g.n()).map(|i| g.degree(i)).max().unwrap_or(0);
    let mut hist = vec![0u64; if g.n() == 0 { 0 } else { max + 1 }];
    for i in 0..g.n() {
        hist[g.degree(i)] += 1;
    }
    hist
}

/// Reachability and distance distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceProfile {
    /// Fraction of pairs joined by a path.
    pub reachable_fraction: f64,
    /// `cdf[k - 1]` is the fraction of pairs at distance at most `k`.
    pub cdf: Vec<f64>,
    /// Standard error of `reachable_fraction` (sampled mode only).
    pub standard_error: Option<f64>,
    pub mode: DistanceMode,
}

/// Reached-node counts per distance (index `d - 1`) from one source.
fn bfs_counts(g: &Graph, source: usize, dist: &mut [u32], queue: &mut VecDeque<u32>) -> Vec<u64> {
    dist.fill(u32::MAX);
    dist[source] = 0;
    queue.clear();
    queue.push_back(source as u32);
    let mut counts = Vec::new();
    while let Some(u) = queue.pop_front() {
        let du = dist[u as usize];
        for &v in g.neighbors(u as usize) {
            if dist[v as usize] == u32::MAX {
                dist[v as usize] = du + 1;
                if counts.len() < (du + 1) as usize {
                    counts.push(0);
                }
                counts[du as usize] += 1;
                queue.push_back(v);
            }
        }
    }
    counts
}

fn merge(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    if a.len() < b.len() {
        a.resize(b.len(), 0);
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

fn per_source(g: &Graph, sources: &[usize]) -> Vec<Vec<u64>> {
    sources
        .par_iter()
        .map_init(
            || (vec![u32::MAX; g.n()], VecDeque::new()),
            |(dist, queue), &s| bfs_counts(g, s, dist, queue),
        )
        .collect()
}

fn cumulative(counts: &[u64], total: f64) -> Vec<f64> {
    let mut acc = 0u64;
    counts
        .iter()
        .map(|&c| {
            acc += c;
            acc as f64 / total
        })
        .collect()
}

pub fn distance_profile(g: &Graph, mode: DistanceMode) -> Result<DistanceProfile, StatsError> {
    let n = g.n();
    if let DistanceMode::Sampled { sources: 0, .. } = mode {
        return Err(StatsError::NoSources);
    }
    if n < 2 {
        return Ok(DistanceProfile {
            reachable_fraction: 0.0,
            cdf: Vec::new(),
            standard_error: None,
            mode,
        });
    }
    match mode {
        DistanceMode::Exact => {
            let all: Vec<usize> = (0..n).collect();
            let counts = per_source(g, &all).into_iter().fold(Vec::new(), merge);
            // Every unordered pair is seen from both ends.
            let total = (n as f64) * (n as f64 - 1.0);
            let cdf = cumulative(&counts, total);
            Ok(DistanceProfile {
                reachable_fraction: cdf.last().copied().unwrap_or(0.0),
                cdf,
                standard_error: None,
                mode,
            })
        }
        DistanceMode::Sampled { sources, seed } => {
            let s = sources.min(n);
            let mut rng = rng::stream(seed, Stream::Sources);
            let mut picked = index::sample(&mut rng, n, s).into_vec();
            picked.sort_unstable();
            let runs = per_source(g, &picked);
            let fractions: Vec<f64> = runs
                .iter()
                .map(|c| c.iter().sum::<u64>() as f64 / (n - 1) as f64)
                .collect();
            let counts = runs.into_iter().fold(Vec::new(), merge);
            let cdf = cumulative(&counts, s as f64 * (n - 1) as f64);
            let mean = fractions.iter().sum::<f64>() / s as f64;
            let standard_error = if s > 1 {
                let var = fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (s - 1) as f64;
                // Sampling without replacement from n sources.
                let fpc = ((n - s) as f64 / (n - 1) as f64).max(0.0);
                Some((var / s as f64 * fpc).sqrt())
            } else {
                None
            };
            Ok(DistanceProfile {
                reachable_fraction: cdf.last().copied().unwrap_or(0.0),
                cdf,
                standard_error,
                mode,
            })
        }
    }
}

/// Everything the `stats` command reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub n: usize,
    pub edges: usize,
    pub degree_histogram: Vec<u64>,
    pub distances: DistanceProfile,
}

pub fn topology_report(g: &Graph, mode: DistanceMode) -> Result<TopologyReport, StatsError> {
    Ok(TopologyReport {
        n: g.n(),
        edges: g.edge_count(),
        degree_histogram: degree_histogram(g),
        distances: distance_profile(g, mode)?,
    })
}
