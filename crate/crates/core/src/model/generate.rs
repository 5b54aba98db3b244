use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::{AttributeMatrix, FitnessSpec, FitnessVector, ModelError, ModelParams};
use crate::rng::{self, SimRng, Stream};

/// A generated matrix together with the fitness values that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub matrix: AttributeMatrix,
    pub fitness: FitnessVector,
}

pub(crate) fn poisson(rng: &mut SimRng, lambda: f64) -> usize {
    if lambda <= 0.0 || !lambda.is_finite() {
        return 0;
    }
    // The constructor only fails for non-positive or astronomically large rates.
    Poisson::new(lambda).map(|d| d.sample(rng) as usize).unwrap_or(0)
}

/// `Lambda_n = alpha / (sum_{i<=n} R_i)^(1 - beta)` for the prefix `fitness`.
pub fn new_feature_rate(fitness: &[f64], params: &ModelParams) -> f64 {
    rate_from_sum(fitness.iter().sum(), params)
}

pub(crate) fn rate_from_sum(sum: f64, params: &ModelParams) -> f64 {
    if params.beta() == 1.0 {
        params.alpha()
    } else {
        params.alpha() / sum.powf(1.0 - params.beta())
    }
}

/// `P_n(k)` computed from the first `n` rows of `matrix`; `k` is 0-based.
pub fn inclusion_probability(
    matrix: &AttributeMatrix,
    fitness: &FitnessVector,
    n: usize,
    k: usize,
    c: f64,
) -> Result<f64, ModelError> {
    if n == 0 || n > matrix.n() {
        return Err(ModelError::PrefixOutOfRange(n));
    }
    if fitness.len() < n {
        return Err(ModelError::LengthMismatch {
            expected: n,
            got: fitness.len(),
        });
    }
    let available = matrix.prefix_totals()[n - 1];
    if k >= available {
        return Err(ModelError::FeatureOutOfRange { k, available });
    }
    let r = &fitness.values()[..n];
    let num: f64 = (0..n).filter(|&i| matrix.get(i, k)).map(|i| r[i]).sum();
    let den = c + r.iter().sum::<f64>();
    Ok((num / den).min(1.0))
}

/// Samples fitness values from `spec` and then the matrix.
pub fn generate(
    params: &ModelParams,
    spec: &FitnessSpec,
    n: usize,
    seed: u64,
) -> Result<Generated, ModelError> {
    if n == 0 {
        return Err(ModelError::EmptyModel);
    }
    spec.validate()?;
    let fitness = spec.sample(n, seed);
    let matrix = generate_matrix(params, &fitness, seed)?;
    Ok(Generated { matrix, fitness })
}

/// Samples a matrix for the given fitness values, one row per value.
pub fn generate_matrix(
    params: &ModelParams,
    fitness: &FitnessVector,
    seed: u64,
) -> Result<AttributeMatrix, ModelError> {
    let n = fitness.len();
    if n == 0 {
        return Err(ModelError::EmptyModel);
    }
    let r = fitness.values();
    let mut counts_rng = rng::stream(seed, Stream::NewCounts);
    let mut incl_rng = rng::stream(seed, Stream::Inclusion);

    let first = poisson(&mut counts_rng, params.alpha());
    let mut rows: Vec<Vec<u32>> = Vec::with_capacity(n);
    let mut new_counts = Vec::with_capacity(n);
    // weights[k] = sum of fitness over rows holding feature k.
    let mut weights: Vec<f64> = vec![r[0]; first];
    rows.push((0..first as u32).collect());
    new_counts.push(first);
    let mut sum = r[0];

    for &ri in &r[1..] {
        let den = params.c() + sum;
        let mut row: Vec<u32> = Vec::new();
        for (k, &w) in weights.iter().enumerate() {
            let p = w / den;
            if p >= 1.0 || incl_rng.random::<f64>() < p {
                row.push(k as u32);
            }
        }
        let fresh = poisson(&mut counts_rng, rate_from_sum(sum, params));
        let start = weights.len();
        row.extend((start..start + fresh).map(|k| k as u32));
        weights.resize(start + fresh, 0.0);
        for &k in &row {
            weights[k as usize] += ri;
        }
        rows.push(row);
        new_counts.push(fresh);
        sum += ri;
    }
    Ok(AttributeMatrix::from_parts(rows, new_counts))
}

/// Samples only the growth curve `L_1, ..., L_n`.
///
/// The number of new features depends on the fitness values alone, so this
/// skips the inclusion draws. For equal seeds the curve is identical to the
/// prefix totals of [`generate`].
pub fn sample_growth(
    params: &ModelParams,
    spec: &FitnessSpec,
    n: usize,
    seed: u64,
) -> Result<Vec<usize>, ModelError> {
    if n == 0 {
        return Err(ModelError::EmptyModel);
    }
    spec.validate()?;
    let fitness = spec.sample(n, seed);
    let r = fitness.values();
    let mut counts_rng = rng::stream(seed, Stream::NewCounts);
    let mut totals = Vec::with_capacity(n);
    let mut total = poisson(&mut counts_rng, params.alpha());
    totals.push(total);
    let mut sum = r[0];
    for &ri in &r[1..] {
        total += poisson(&mut counts_rng, rate_from_sum(sum, params));
        totals.push(total);
        sum += ri;
    }
    Ok(totals)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform() -> FitnessSpec {
        FitnessSpec::uniform(0.5, 1.5).unwrap()
    }

    #[test]
    fn rate_examples() {
        let p = ModelParams::new(3.0, 0.5).unwrap();
        assert_eq!(new_feature_rate(&[1.0; 4], &p), 1.5);
        let p = ModelParams::new(3.0, 0.0).unwrap();
        assert_eq!(new_feature_rate(&[2.0, 2.0], &p), 0.75);
        let p = ModelParams::new(3.0, 1.0).unwrap();
        assert_eq!(new_feature_rate(&[0.3, 7.0], &p), 3.0);
    }

    #[test]
    fn inclusion_examples() {
        let m = AttributeMatrix::from_rows(vec![vec![0], vec![]]).unwrap();
        let r = FitnessVector::new(vec![2.0, 3.0]).unwrap();
        assert!((inclusion_probability(&m, &r, 2, 0, 0.0).unwrap() - 0.4).abs() < 1e-15);
        assert!((inclusion_probability(&m, &r, 2, 0, 5.0).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(inclusion_probability(&m, &r, 1, 0, 0.0).unwrap(), 1.0);
        assert!(inclusion_probability(&m, &r, 2, 1, 0.0).is_err());
        assert!(inclusion_probability(&m, &r, 3, 0, 0.0).is_err());
    }

    #[test]
    fn generated_matrix_is_left_ordered() {
        let p = ModelParams::new(3.0, 0.7).unwrap();
        let g = generate(&p, &uniform(), 300, 1).unwrap();
        let rebuilt = AttributeMatrix::from_rows(g.matrix.rows().to_vec()).unwrap();
        assert_eq!(rebuilt, g.matrix);
        assert_eq!(g.fitness.len(), 300);
        if g.matrix.new_counts()[0] > 0 {
            assert!(g.matrix.first_row_universal());
        }
    }

    #[test]
    fn offset_generation_is_left_ordered() {
        let p = ModelParams::with_offset(3.0, 0.5, 2.0).unwrap();
        let g = generate(&p, &uniform(), 200, 4).unwrap();
        assert!(AttributeMatrix::from_rows(g.matrix.rows().to_vec()).is_ok());
    }

    #[test]
    fn deterministic_given_seed() {
        let p = ModelParams::new(3.0, 0.5).unwrap();
        assert_eq!(generate(&p, &uniform(), 100, 8).unwrap(), generate(&p, &uniform(), 100, 8).unwrap());
        assert_ne!(
            generate(&p, &uniform(), 100, 8).unwrap().matrix,
            generate(&p, &uniform(), 100, 9).unwrap().matrix
        );
    }

    #[test]
    fn growth_sampler_matches_full_generation() {
        for (beta, seed) in [(0.5, 3), (1.0, 4), (-1.0, 5), (0.0, 6)] {
            let p = ModelParams::new(3.0, beta).unwrap();
            let g = generate(&p, &uniform(), 400, seed).unwrap();
            assert_eq!(sample_growth(&p, &uniform(), 400, seed).unwrap(), g.matrix.prefix_totals());
        }
    }

    #[test]
    fn beta_one_grows_linearly() {
        let p = ModelParams::new(3.0, 1.0).unwrap();
        let spec = FitnessSpec::uniform(0.25, 1.75).unwrap();
        let l = sample_growth(&p, &spec, 2000, 10).unwrap();
        let ratio = *l.last().unwrap() as f64 / 2000.0;
        assert!((ratio - 3.0).abs() < 0.2, "L_n/n = {ratio}");
    }

    #[test]
    fn larger_alpha_gives_more_features() {
        let spec = FitnessSpec::uniform(0.25, 1.75).unwrap();
        let low = ModelParams::new(3.0, 0.5).unwrap();
        let high = ModelParams::new(10.0, 0.5).unwrap();
        let mut wins = 0;
        let seeds = 20;
        for seed in 0..seeds {
            let a = generate(&low, &spec, 300, seed).unwrap().matrix.num_features();
            let b = generate(&high, &spec, 300, seed).unwrap().matrix.num_features();
            if b > a {
                wins += 1;
            }
        }
        assert!(wins >= 18, "alpha=10 beat alpha=3 in only {wins}/{seeds} seeds");
    }
}
