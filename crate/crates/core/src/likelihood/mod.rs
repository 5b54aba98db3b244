//! Conditional likelihood of an attribute matrix given fitness values.
//!
//! Factor `j` (0-based, `j = 0..n-1`) is the probability of row `j + 1` given
//! rows `0..=j`:
//!
//! ```text
//! sum_{k < L_j} [ z ln P_j(k) + (1 - z) ln(1 - P_j(k)) ] + ln Poi(Lambda_j){N_{j+1}}
//! ```
//!
//! with `P_j(k) = w_jk / S_j`, `w_jk = sum_{i<=j} r_i Z_ik`, `S_j = c + T_j`,
//! `T_j = sum_{i<=j} r_i` and `Lambda_j = alpha / T_j^(1 - beta)`. The log
//! likelihood adds `ln Poi(alpha){N_1}` for the first row.
//!
//! When `c = 0`, features held by every row so far have `P_j(k) = 1` exactly.
//! They are detected structurally, contribute nothing when present and make
//! the observation impossible when absent.

mod fast;

pub use fast::FastEvaluator;

use thiserror::Error;

use crate::model::{AttributeMatrix, ModelParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LikelihoodError {
    #[error("fitness vector has {got} entries, matrix has {expected} rows")]
    LengthMismatch { expected: usize, got: usize },
    #[error("fitness value {value} at node {index} is not strictly positive")]
    NonPositive { index: usize, value: f64 },
    #[error("node index {index} out of range for {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("row {row} lacks feature {feature} held by every earlier row; the matrix has zero likelihood when c = 0")]
    Impossible { row: usize, feature: usize },
}

/// A log likelihood, or the distinguished outcome that the matrix cannot be
/// produced by the model at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogLik {
    Finite(f64),
    /// Row `row` lacks feature `feature` although every earlier row holds it
    /// and `c = 0`.
    Impossible { row: usize, feature: usize },
}

impl LogLik {
    /// The value, with impossible observations mapped to negative infinity.
    pub fn value(&self) -> f64 {
        match *self {
            Self::Finite(v) => v,
            Self::Impossible { .. } => f64::NEG_INFINITY,
        }
    }

    pub fn is_impossible(&self) -> bool {
        matches!(self, Self::Impossible { .. })
    }
}

pub(crate) fn check_fitness(matrix: &AttributeMatrix, r: &[f64]) -> Result<(), LikelihoodError> {
    if r.len() != matrix.n() {
        return Err(LikelihoodError::LengthMismatch {
            expected: matrix.n(),
            got: r.len(),
        });
    }
    if let Some((index, &value)) = r.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
        return Err(LikelihoodError::NonPositive { index, value });
    }
    Ok(())
}

/// `ln(k!)` for `k = 0..=max`.
pub(crate) fn ln_factorials(max: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(max + 1);
    let mut acc = 0.0;
    table.push(0.0);
    for k in 1..=max {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}

/// `ln Poi(lambda){count}` given `ln lambda`.
pub(crate) fn ln_poisson(count: usize, lambda: f64, ln_lambda: f64, ln_fact: &[f64]) -> f64 {
    count as f64 * ln_lambda - lambda - ln_fact[count]
}

/// Structural data shared by the evaluators.
#[derive(Debug, Clone)]
pub(crate) struct Structure {
    /// For first-row features: the first later row that lacks it, or `n`.
    pub first_miss: Vec<usize>,
    pub ln_fact: Vec<f64>,
    pub saturating: bool,
}

impl Structure {
    pub fn new(matrix: &AttributeMatrix, params: &ModelParams) -> Self {
        let n1 = matrix.new_counts()[0];
        let mut first_miss = vec![matrix.n(); n1];
        for (i, row) in matrix.rows().iter().enumerate().skip(1) {
            // Row holds first-row features as a sorted prefix of 0..n1.
            let held = row.partition_point(|&k| (k as usize) < n1);
            let mut next = 0;
            for &k in &row[..held] {
                for kk in next..k as usize {
                    first_miss[kk] = first_miss[kk].min(i);
                }
                next = k as usize + 1;
            }
            for kk in next..n1 {
                first_miss[kk] = first_miss[kk].min(i);
            }
        }
        let max_count = matrix.new_counts().iter().copied().max().unwrap_or(0);
        Self {
            first_miss,
            ln_fact: ln_factorials(max_count),
            saturating: params.c() == 0.0,
        }
    }

    /// Whether `P_j(k) = 1` exactly.
    #[inline]
    pub fn saturated(&self, j: usize, k: usize) -> bool {
        self.saturating && k < self.first_miss.len() && self.first_miss[k] > j
    }

    /// The first (row, feature) at which a universal feature goes missing.
    pub fn impossible(&self, n: usize) -> Option<(usize, usize)> {
        if !self.saturating {
            return None;
        }
        self.first_miss
            .iter()
            .enumerate()
            .filter(|(_, &m)| m < n)
            .map(|(k, &m)| (m, k))
            .min()
    }
}

/// Running prefix accumulation used by the exact evaluators.
struct Sweep<'a> {
    matrix: &'a AttributeMatrix,
    params: &'a ModelParams,
    structure: &'a Structure,
    /// `w_k` over rows accumulated so far.
    w: Vec<f64>,
    total: f64,
    next_row: usize,
}

impl<'a> Sweep<'a> {
    fn new(matrix: &'a AttributeMatrix, params: &'a ModelParams, structure: &'a Structure) -> Self {
        Self {
            matrix,
            params,
            structure,
            w: vec![0.0; matrix.num_features()],
            total: 0.0,
            next_row: 0,
        }
    }

    fn add_row(&mut self, r: f64) {
        for &k in self.matrix.row(self.next_row) {
            self.w[k as usize] += r;
        }
        self.total += r;
        self.next_row += 1;
    }

    /// Factor `j = next_row - 1`, predicting row `next_row`. The matrix must
    /// have been checked for impossible observations.
    fn factor(&self) -> f64 {
        let j = self.next_row - 1;
        let next = self.matrix.row(j + 1);
        let l_j = self.matrix.prefix_totals()[j];
        let s = self.params.c() + self.total;
        let ln_s = s.ln();
        let mut sum = 0.0;
        let mut active = 0usize;
        let mut pos = 0;
        for k in 0..l_j {
            let present = pos < next.len() && next[pos] as usize == k;
            if present {
                pos += 1;
            }
            if self.structure.saturated(j, k) {
                debug_assert!(present);
                continue;
            }
            active += 1;
            let w = self.w[k];
            sum += if present { w.ln() } else { (s - w).ln() };
        }
        sum -= active as f64 * ln_s;
        let lambda_ln = self.params.alpha().ln() - (1.0 - self.params.beta()) * self.total.ln();
        sum += ln_poisson(
            self.matrix.new_counts()[j + 1],
            lambda_ln.exp(),
            lambda_ln,
            &self.structure.ln_fact,
        );
        sum
    }
}

/// `ln P(Z_1 = z_1)`.
pub(crate) fn first_row_term(matrix: &AttributeMatrix, params: &ModelParams, ln_fact: &[f64]) -> f64 {
    ln_poisson(matrix.new_counts()[0], params.alpha(), params.alpha().ln(), ln_fact)
}

/// The full log likelihood, computed from scratch.
pub fn log_likelihood(
    matrix: &AttributeMatrix,
    r: &[f64],
    params: &ModelParams,
) -> Result<LogLik, LikelihoodError> {
    Ok(LikelihoodState::new(matrix, r, params)?.log_lik())
}

/// The log likelihood without the `r`-independent first-row term; this is
/// the quantity maximized when recovering fitness values.
pub fn objective(matrix: &AttributeMatrix, r: &[f64], params: &ModelParams) -> Result<LogLik, LikelihoodError> {
    Ok(LikelihoodState::new(matrix, r, params)?.objective())
}

/// Log likelihood with cached per-row factors, supporting single-coordinate
/// updates.
#[derive(Debug, Clone)]
pub struct LikelihoodState<'a> {
    matrix: &'a AttributeMatrix,
    params: ModelParams,
    structure: Structure,
    r: Vec<f64>,
    factors: Vec<f64>,
    first: f64,
    impossible: Option<(usize, usize)>,
    log_value: f64,
}

impl<'a> LikelihoodState<'a> {
    pub fn new(matrix: &'a AttributeMatrix, r: &[f64], params: &ModelParams) -> Result<Self, LikelihoodError> {
        check_fitness(matrix, r)?;
        let structure = Structure::new(matrix, params);
        let first = first_row_term(matrix, params, &structure.ln_fact);
        let mut state = Self {
            matrix,
            params: *params,
            structure,
            r: r.to_vec(),
            factors: vec![0.0; matrix.n().saturating_sub(1)],
            first,
            impossible: None,
            log_value: 0.0,
        };
        state.impossible = state.structure.impossible(matrix.n());
        state.recompute_from(0);
        Ok(state)
    }

    fn recompute_from(&mut self, start: usize) {
        let n = self.matrix.n();
        if self.impossible.is_some() {
            self.log_value = f64::NEG_INFINITY;
            return;
        }
        if n >= 2 && start < n - 1 {
            let mut sweep = Sweep::new(self.matrix, &self.params, &self.structure);
            for i in 0..=start {
                sweep.add_row(self.r[i]);
            }
            for j in start..n - 1 {
                if j > start {
                    sweep.add_row(self.r[j]);
                }
                self.factors[j] = sweep.factor();
            }
        }
        self.log_value = self.first + self.factors.iter().sum::<f64>();
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    /// Cached per-row factor values.
    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    pub fn log_lik(&self) -> LogLik {
        match self.impossible {
            Some((row, feature)) => LogLik::Impossible { row, feature },
            None => LogLik::Finite(self.log_value),
        }
    }

    pub fn objective(&self) -> LogLik {
        match self.log_lik() {
            LogLik::Finite(_) => LogLik::Finite(self.factors.iter().sum()),
            other => other,
        }
    }

    /// Replaces `r_i` by `value`, recomputing only the factors `j >= i`.
    pub fn update_coordinate(&mut self, i: usize, value: f64) -> Result<(), LikelihoodError> {
        if i >= self.r.len() {
            return Err(LikelihoodError::IndexOutOfRange { index: i, n: self.r.len() });
        }
        if !(value.is_finite() && value > 0.0) {
            return Err(LikelihoodError::NonPositive { index: i, value });
        }
        if self.r[i] == value {
            return Ok(());
        }
        self.r[i] = value;
        self.recompute_from(i);
        Ok(())
    }

    /// Non-mutating form of [`update_coordinate`](Self::update_coordinate).
    pub fn updated(&self, i: usize, value: f64) -> Result<Self, LikelihoodError> {
        let mut next = self.clone();
        next.update_coordinate(i, value)?;
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: Vec<Vec<u32>>) -> AttributeMatrix {
        AttributeMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn single_row_is_poisson() {
        let p = ModelParams::new(3.0, 0.5).unwrap();
        let ll = log_likelihood(&m(vec![vec![0, 1, 2]]), &[1.0], &p).unwrap();
        let expected = (4.5f64 * (-3.0f64).exp()).ln();
        assert!((ll.value() - expected).abs() < 1e-12);
    }

    #[test]
    fn two_row_hand_example() {
        let p = ModelParams::new(1.0, 1.0).unwrap();
        let ll = log_likelihood(&m(vec![vec![0], vec![0, 1]]), &[1.0, 1.0], &p).unwrap();
        assert!((ll.value() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn missing_universal_feature_is_impossible() {
        let p = ModelParams::new(1.0, 0.5).unwrap();
        let matrix = m(vec![vec![0, 1], vec![0], vec![0, 2]]);
        let ll = log_likelihood(&matrix, &[1.0, 1.0, 1.0], &p).unwrap();
        assert_eq!(ll, LogLik::Impossible { row: 1, feature: 1 });
        assert_eq!(ll.value(), f64::NEG_INFINITY);
        // With an offset the same matrix is possible.
        let p = ModelParams::with_offset(1.0, 0.5, 1.0).unwrap();
        assert!(log_likelihood(&matrix, &[1.0, 1.0, 1.0], &p).unwrap().value().is_finite());
    }

    #[test]
    fn updating_last_node_changes_nothing() {
        let p = ModelParams::new(2.0, 0.5).unwrap();
        let matrix = m(vec![vec![0, 1], vec![0, 1, 2], vec![0, 1, 3]]);
        let mut state = LikelihoodState::new(&matrix, &[1.0, 2.0, 0.5], &p).unwrap();
        let before = state.log_lik();
        state.update_coordinate(2, 7.0).unwrap();
        assert_eq!(state.log_lik(), before);
        state.update_coordinate(0, 1.0).unwrap();
        assert_eq!(state.log_lik(), before);
    }

    #[test]
    fn rejects_bad_fitness() {
        let p = ModelParams::new(2.0, 0.5).unwrap();
        let matrix = m(vec![vec![0], vec![0]]);
        assert!(log_likelihood(&matrix, &[1.0], &p).is_err());
        assert!(log_likelihood(&matrix, &[1.0, 0.0], &p).is_err());
        let mut state = LikelihoodState::new(&matrix, &[1.0, 1.0], &p).unwrap();
        assert!(state.update_coordinate(0, -1.0).is_err());
        assert!(state.update_coordinate(5, 1.0).is_err());
    }
}
