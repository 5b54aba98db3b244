use std::collections::VecDeque;

use attrnet::graph::{calibrate_model, generate, EdgeModel, Graph, Influence, PairWeights};
use attrnet::model::{generate as generate_model, FitnessSpec, ModelParams};
use attrnet::stats::{degree_histogram, distance_profile, topology_report, DistanceMode};
use proptest::prelude::*;

/// All-pairs distances by BFS with plain adjacency sets.
fn oracle(n: usize, edges: &[(usize, usize)]) -> (f64, Vec<f64>) {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut by_dist = Vec::<u64>::new();
    for s in 0..n {
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    q.push_back(v);
                }
            }
        }
        for t in s + 1..n {
            if dist[t] != usize::MAX {
                if by_dist.len() < dist[t] {
                    by_dist.resize(dist[t], 0);
                }
                by_dist[dist[t] - 1] += 1;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let mut acc = 0;
    let cdf: Vec<f64> = by_dist
        .iter()
        .map(|c| {
            acc += c;
            acc as f64 / pairs
        })
        .collect();
    (cdf.last().copied().unwrap_or(0.0), cdf)
}

#[test]
fn complete_graph() {
    let edges: Vec<_> = (0..4).flat_map(|a| (a + 1..4).map(move |b| (a, b))).collect();
    let g = Graph::from_edges(4, &edges).unwrap();
    assert_eq!(degree_histogram(&g), vec![0, 0, 0, 4]);
    let p = distance_profile(&g, DistanceMode::Exact).unwrap();
    assert_eq!(p.reachable_fraction, 1.0);
    assert_eq!(p.cdf, vec![1.0]);
}

#[test]
fn path_and_components() {
    let path = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
    let h = degree_histogram(&path);
    assert_eq!((h[1], h[2]), (2, 1));
    let two = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
    let p = distance_profile(&two, DistanceMode::Exact).unwrap();
    assert!((p.reachable_fraction - 1.0 / 3.0).abs() < 1e-15);
    let r = topology_report(&Graph::empty(10), DistanceMode::Exact).unwrap();
    assert_eq!(r.distances.reachable_fraction, 0.0);
    assert!(r.distances.cdf.is_empty());
    assert_eq!(r.edges, 0);
}

fn ff_graph(n: usize, target: f64, k: f64, seed: u64) -> Graph {
    let p = ModelParams::new(3.0, 0.75).unwrap();
    let m = generate_model(&p, &FitnessSpec::uniform(0.75, 1.25).unwrap(), n, seed).unwrap().matrix;
    let pw = PairWeights::compute(&m, &Influence::Identity);
    let mut model = EdgeModel::ff(k, 0.0).unwrap();
    calibrate_model(&pw, &mut model, target).unwrap();
    generate(&m, &model, seed).unwrap().graph
}

#[test]
fn sampled_agrees_with_exact() {
    let g = ff_graph(2000, 4000.0, 1.0, 3);
    let exact = distance_profile(&g, DistanceMode::Exact).unwrap();
    let mut outside = 0;
    for seed in 0..20 {
        let s = distance_profile(&g, DistanceMode::Sampled { sources: 100, seed }).unwrap();
        let se = s.standard_error.unwrap();
        assert!(se > 0.0);
        if (s.reachable_fraction - exact.reachable_fraction).abs() > 3.0 * se {
            outside += 1;
        }
        assert_eq!(s.cdf.last().copied(), Some(s.reachable_fraction));
    }
    // 3 SE should hold for nearly every draw.
    assert!(outside <= 2, "{outside}/20 outside 3 SE");
}

#[test]
fn sampled_is_reproducible() {
    let g = ff_graph(300, 600.0, 1.0, 1);
    let mode = DistanceMode::Sampled { sources: 30, seed: 5 };
    assert_eq!(distance_profile(&g, mode).unwrap(), distance_profile(&g, mode).unwrap());
}

fn graphs() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..40).prop_flat_map(|n| {
        let pairs = proptest::collection::vec((0..n, 0..n), 0..3 * n);
        (Just(n), pairs.prop_map(|v| {
            let mut e: Vec<_> = v.into_iter().filter(|(a, b)| a != b).map(|(a, b)| (a.min(b), a.max(b))).collect();
            e.sort_unstable();
            e.dedup();
            e
        }))
    })
}

proptest! {
    #[test]
    fn exact_matches_oracle((n, edges) in graphs()) {
        let g = Graph::from_edges(n, &edges).unwrap();
        let p = distance_profile(&g, DistanceMode::Exact).unwrap();
        let (frac, cdf) = oracle(n, &edges);
        prop_assert!((p.reachable_fraction - frac).abs() < 1e-12);
        prop_assert_eq!(p.cdf.len(), cdf.len());
        for (a, b) in p.cdf.iter().zip(&cdf) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!(p.cdf.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(p.cdf.last().copied().unwrap_or(0.0), p.reachable_fraction);
        prop_assert!((0.0..=1.0).contains(&p.reachable_fraction));

        let h = degree_histogram(&g);
        prop_assert_eq!(h.iter().sum::<u64>(), n as u64);
        let ends: u64 = h.iter().enumerate().map(|(d, c)| d as u64 * c).sum();
        prop_assert_eq!(ends, 2 * edges.len() as u64);
    }

    #[test]
    fn all_sources_sampled_is_exact((n, edges) in graphs(), seed in any::<u64>()) {
        let g = Graph::from_edges(n, &edges).unwrap();
        let exact = distance_profile(&g, DistanceMode::Exact).unwrap();
        let all = distance_profile(&g, DistanceMode::Sampled { sources: n, seed }).unwrap();
        prop_assert_eq!(exact.cdf.len(), all.cdf.len());
        for (a, b) in exact.cdf.iter().zip(&all.cdf) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
