//! Rank agreement between true and recovered fitness values.
//!
//! Besides Kendall's tau-b, two weighted variants use the additive hyperbolic
//! scheme: a pair `(i, j)` weighs `1/(rho_i + 1) + 1/(rho_j + 1)`, where `rho`
//! is a 0-based importance rank. Ranking by position favours early nodes;
//! ranking by true value favours the fittest nodes.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankError {
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("prefix {k} must lie in 2..={len}")]
    InvalidPrefix { k: usize, len: usize },
    #[error("value at index {0} is not finite")]
    NonFinite(usize),
    #[error("correlation undefined: one of the vectors is constant on the prefix")]
    Undefined,
}

/// A truth/estimate pair restricted to its first `k` coordinates.
#[derive(Debug, Clone, Copy)]
pub struct RankComparison<'a> {
    truth: &'a [f64],
    estimate: &'a [f64],
}

impl<'a> RankComparison<'a> {
    pub fn new(truth: &'a [f64], estimate: &'a [f64], k: usize) -> Result<Self, RankError> {
        if truth.len() != estimate.len() {
            return Err(RankError::LengthMismatch(truth.len(), estimate.len()));
        }
        if k < 2 || k > truth.len() {
            return Err(RankError::InvalidPrefix { k, len: truth.len() });
        }
        let (truth, estimate) = (&truth[..k], &estimate[..k]);
        if let Some(i) = (0..k).find(|&i| !(truth[i].is_finite() && estimate[i].is_finite())) {
            return Err(RankError::NonFinite(i));
        }
        Ok(Self { truth, estimate })
    }

    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }

    pub fn kendall_tau(&self) -> Result<f64, RankError> {
        kendall_tau_b(self.truth, self.estimate)
    }

    /// Weighted tau where node `i` has importance rank `i`.
    pub fn weighted_tau_by_position(&self) -> Result<f64, RankError> {
        let ranks: Vec<usize> = (0..self.len()).collect();
        weighted_tau(self.truth, self.estimate, &ranks)
    }

    /// Weighted tau where the node with the largest true value has importance
    /// rank 0. Ties in the truth are broken by the larger estimate, then by
    /// the smaller index.
    pub fn weighted_tau_by_value(&self) -> Result<f64, RankError> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.truth[b]
                .total_cmp(&self.truth[a])
                .then(self.estimate[b].total_cmp(&self.estimate[a]))
                .then(a.cmp(&b))
        });
        let mut ranks = vec![0; self.len()];
        for (rank, &i) in order.iter().enumerate() {
            ranks[i] = rank;
        }
        weighted_tau(self.truth, self.estimate, &ranks)
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Weighted tau with pair weight `1/(ranks[i]+1) + 1/(ranks[j]+1)`.
pub fn weighted_tau(x: &[f64], y: &[f64], ranks: &[usize]) -> Result<f64, RankError> {
    let n = x.len();
    let w: Vec<f64> = ranks.iter().map(|&r| 1.0 / (r as f64 + 1.0)).collect();
    let (mut num, mut dx, mut dy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let wij = w[i] + w[j];
            let sx = sign(x[i] - x[j]);
            let sy = sign(y[i] - y[j]);
            num += wij * sx * sy;
            dx += wij * sx.abs();
            dy += wij * sy.abs();
        }
    }
    if dx == 0.0 || dy == 0.0 {
        return Err(RankError::Undefined);
    }
    Ok((num / (dx * dy).sqrt()).clamp(-1.0, 1.0))
}

/// Kendall's tau-b in `O(n log n)`.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64, RankError> {
    let n = x.len();
    let pairs_total = (n * (n - 1) / 2) as u64;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    // Pairs tied in x, and tied in both.
    let (mut tied_x, mut tied_xy) = (0u64, 0u64);
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        tied_x += ((j - i) * (j - i - 1) / 2) as u64;
        let mut a = i;
        while a < j {
            let mut b = a + 1;
            while b < j && y[idx[b]] == y[idx[a]] {
                b += 1;
            }
            tied_xy += ((b - a) * (b - a - 1) / 2) as u64;
            a = b;
        }
        i = j;
    }

    // Sorting by y now counts the discordant pairs as inversions.
    let mut ys: Vec<f64> = idx.iter().map(|&k| y[k]).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);

    let mut tied_y = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && ys[j] == ys[i] {
            j += 1;
        }
        tied_y += ((j - i) * (j - i - 1) / 2) as u64;
        i = j;
    }

    let nx = pairs_total - tied_x;
    let ny = pairs_total - tied_y;
    if nx == 0 || ny == 0 {
        return Err(RankError::Undefined);
    }
    let concordant_minus_discordant =
        pairs_total as i128 - tied_x as i128 - tied_y as i128 + tied_xy as i128 - 2 * swaps as i128;
    let tau = concordant_minus_discordant as f64 / (nx as f64 * ny as f64).sqrt();
    Ok(tau.clamp(-1.0, 1.0))
}

/// Stable merge sort returning the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], &mut buf[..mid]) + merge_count(&mut v[mid..], &mut buf[mid..]);
    let (mut a, mut b, mut k) = (0, mid, 0);
    while a < mid && b < n {
        if v[b].total_cmp(&v[a]) == Ordering::Less {
            buf[k] = v[b];
            swaps += (mid - a) as u64;
            b += 1;
        } else {
            buf[k] = v[a];
            a += 1;
        }
        k += 1;
    }
    buf[k..k + mid - a].copy_from_slice(&v[a..mid]);
    k += mid - a;
    buf[k..k + n - b].copy_from_slice(&v[b..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// All three metrics for one prefix length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub k: usize,
    pub kendall_tau: Option<f64>,
    pub weighted_by_position: Option<f64>,
    pub weighted_by_value: Option<f64>,
}

pub fn rank_row(truth: &[f64], estimate: &[f64], k: usize) -> Result<RankRow, RankError> {
    let cmp = RankComparison::new(truth, estimate, k)?;
    Ok(RankRow {
        k,
        kendall_tau: cmp.kendall_tau().ok(),
        weighted_by_position: cmp.weighted_tau_by_position().ok(),
        weighted_by_value: cmp.weighted_tau_by_value().ok(),
    })
}

/// Prefix lengths `floor(sqrt(n))`, `n / 2` and `n`, skipping those below 2.
pub fn standard_prefixes(n: usize) -> Vec<usize> {
    let mut ks: Vec<usize> = [n.isqrt(), n / 2, n].into_iter().filter(|&k| k >= 2).collect();
    ks.dedup();
    ks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_count_counts_inversions() {
        let mut v = vec![3.0, 1.0, 2.0, 1.0];
        let mut buf = vec![0.0; 4];
        assert_eq!(merge_count(&mut v, &mut buf), 4);
        assert_eq!(v, vec![1.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn prefixes() {
        assert_eq!(standard_prefixes(2000), vec![44, 1000, 2000]);
        assert_eq!(standard_prefixes(3), vec![3]);
        assert_eq!(standard_prefixes(1), Vec::<usize>::new());
    }

    #[test]
    fn validation() {
        assert!(RankComparison::new(&[1.0, 2.0], &[1.0], 2).is_err());
        assert!(RankComparison::new(&[1.0, 2.0], &[1.0, 2.0], 1).is_err());
        assert!(RankComparison::new(&[1.0, 2.0], &[1.0, 2.0], 3).is_err());
        assert!(RankComparison::new(&[1.0, f64::NAN], &[1.0, 2.0], 2).is_err());
        let c = RankComparison::new(&[1.0, 1.0], &[1.0, 2.0], 2).unwrap();
        assert_eq!(c.kendall_tau(), Err(RankError::Undefined));
        assert_eq!(c.weighted_tau_by_value(), Err(RankError::Undefined));
    }
}
