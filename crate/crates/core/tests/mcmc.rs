use attrnet::likelihood::{log_likelihood, objective};
use attrnet::mcmc::{recover_fitness, recover_fitness_normalized, InitialFitness, McmcConfig};
use attrnet::model::{generate, AttributeMatrix, FitnessSpec, ModelParams};
use proptest::prelude::*;

fn sample(n: usize, seed: u64) -> (AttributeMatrix, ModelParams) {
    let p = ModelParams::new(3.0, 0.8).unwrap();
    let g = generate(&p, &FitnessSpec::two_point(0.25, 1.75, 0.5).unwrap(), n, seed).unwrap();
    (g.matrix, p)
}

#[test]
fn trace_is_nondecreasing_and_matches_scratch() {
    let (m, p) = sample(150, 3);
    let cfg = McmcConfig { seed: 9, ..McmcConfig::default() };
    let t = recover_fitness(&m, &p, &cfg).unwrap();
    assert!(t.is_nondecreasing());
    assert!(t.accepted > 0);
    assert_eq!(t.objective.len(), t.iterations);
    let scratch = objective(&m, &t.r, &p).unwrap().value();
    assert!((scratch - t.final_objective).abs() < 1e-6 * scratch.abs());
    assert!((scratch - t.final_objective_exact).abs() < 1e-9 * scratch.abs());
    assert!(t.final_objective >= t.initial_objective);
}

#[test]
fn same_seed_same_chain() {
    let (m, p) = sample(80, 5);
    let cfg = McmcConfig { seed: 21, ..McmcConfig::default() };
    let a = recover_fitness(&m, &p, &cfg).unwrap();
    let b = recover_fitness(&m, &p, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn restricted_prefix_leaves_the_tail_alone() {
    let (m, p) = sample(120, 4);
    let cfg = McmcConfig { active_prefix: Some(10), initial: InitialFitness::Fill(1.3), seed: 2, ..McmcConfig::default() };
    let t = recover_fitness(&m, &p, &cfg).unwrap();
    assert!(t.r[10..].iter().all(|&v| v == 1.3));
    assert!(t.r[..10].iter().any(|&v| v != 1.3));
    assert!(t.is_nondecreasing());
}

#[test]
fn zero_variance_is_a_fixed_point() {
    let (m, p) = sample(60, 8);
    let start: Vec<f64> = (0..60).map(|i| 0.5 + (i % 7) as f64 * 0.2).collect();
    let cfg = McmcConfig {
        sigma2: 0.0,
        initial: InitialFitness::Vector(start.clone()),
        seed: 1,
        ..McmcConfig::default()
    };
    let t = recover_fitness(&m, &p, &cfg).unwrap();
    assert_eq!(t.r, start);
    assert_eq!(t.accepted, 0);
    assert!(t.converged);
    assert_eq!(t.iterations, 600);
    assert!(t.objective.iter().all(|&v| v == t.initial_objective));
}

#[test]
fn support_restriction_is_respected() {
    let (m, p) = sample(60, 2);
    let cfg = McmcConfig { support: Some((0.25, 1.75)), seed: 4, ..McmcConfig::default() };
    let t = recover_fitness(&m, &p, &cfg).unwrap();
    assert!(t.r.iter().all(|&v| (0.25..=1.75).contains(&v)));
}

#[test]
fn step_cap_reports_non_convergence() {
    let (m, p) = sample(60, 2);
    let cfg = McmcConfig { max_iters: Some(5), threshold: 0.0, seed: 4, ..McmcConfig::default() };
    let t = recover_fitness(&m, &p, &cfg).unwrap();
    assert_eq!(t.iterations, 5);
    assert!(!t.converged);
}

#[test]
fn invalid_configs() {
    let (m, p) = sample(10, 1);
    let bad = [
        McmcConfig { proposals: 0, ..McmcConfig::default() },
        McmcConfig { sigma2: -1.0, ..McmcConfig::default() },
        McmcConfig { threshold: -0.1, ..McmcConfig::default() },
        McmcConfig { active_prefix: Some(0), ..McmcConfig::default() },
        McmcConfig { active_prefix: Some(11), ..McmcConfig::default() },
        McmcConfig { initial: InitialFitness::Vector(vec![1.0; 3]), ..McmcConfig::default() },
        McmcConfig { initial: InitialFitness::Fill(0.0), ..McmcConfig::default() },
        McmcConfig { support: Some((2.0, 1.0)), ..McmcConfig::default() },
    ];
    for cfg in bad {
        assert!(recover_fitness(&m, &p, &cfg).is_err(), "{cfg:?}");
    }
}

#[test]
fn single_row_needs_no_iterations() {
    let m = AttributeMatrix::from_rows(vec![vec![0, 1, 2]]).unwrap();
    let fit = recover_fitness_normalized(&m, 0.0, None, &McmcConfig::default()).unwrap();
    assert_eq!(fit.r_prime(), &[1.0]);
    assert_eq!(fit.trace.iterations, 0);
    assert!(fit.estimation.is_none());
}

#[test]
fn normalized_procedure_uses_estimates() {
    let p = ModelParams::new(3.0, 0.5).unwrap();
    let g = generate(&p, &FitnessSpec::uniform(0.5, 1.5).unwrap(), 400, 12).unwrap();
    let fit = recover_fitness_normalized(&g.matrix, 0.0, None, &McmcConfig { seed: 3, ..McmcConfig::default() }).unwrap();
    let est = fit.estimation.unwrap();
    assert_eq!(fit.beta, Some(est.beta_hat.clamp(0.0, 1.0)));
    assert_eq!(fit.alpha_prime, Some(est.alpha_prime_hat));
    assert!(fit.trace.is_nondecreasing());
    assert_eq!(fit.r_prime().len(), 400);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn chains_never_decrease(n in 2usize..60, seed in any::<u64>(), sigma2 in 0.01f64..4.0, j in 1usize..6) {
        let (m, p) = sample(n, seed);
        let cfg = McmcConfig { sigma2, proposals: j, seed, threshold: 0.05, ..McmcConfig::default() };
        let t = recover_fitness(&m, &p, &cfg).unwrap();
        prop_assert!(t.is_nondecreasing());
        prop_assert!(t.r.iter().all(|&v| v > 0.0));
    }

    /// Dropping the first-row factor shifts every candidate by the same
    /// constant, so both objectives pick the same candidate.
    #[test]
    fn objectives_share_their_argmax(
        n in 2usize..40,
        seed in any::<u64>(),
        candidates in proptest::collection::vec(proptest::collection::vec(0.1f64..3.0, 40), 2..8),
    ) {
        let (m, p) = sample(n, seed);
        let argmax = |f: &dyn Fn(&[f64]) -> f64| {
            let vals: Vec<f64> = candidates.iter().map(|c| f(&c[..n])).collect();
            (0..vals.len()).max_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap()
        };
        let full = argmax(&|r| log_likelihood(&m, r, &p).unwrap().value());
        let reduced = argmax(&|r| objective(&m, r, &p).unwrap().value());
        prop_assert_eq!(full, reduced);
    }
}
