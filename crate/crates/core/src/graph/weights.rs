use std::collections::BTreeMap;

use super::calibrate::WeightDistribution;
use super::Influence;
use crate::model::AttributeMatrix;

/// `w_ij = sum_{h,k} Z_ih xi_hk Z_jk`, evaluated directly.
pub fn weight(matrix: &AttributeMatrix, xi: &Influence, i: usize, j: usize) -> f64 {
    let (a, b) = (matrix.row(i), matrix.row(j));
    if xi.is_diagonal() {
        let (mut p, mut q, mut acc) = (0, 0, 0.0);
        while p < a.len() && q < b.len() {
            match a[p].cmp(&b[q]) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    acc += xi.entry(a[p] as usize, a[p] as usize);
                    p += 1;
                    q += 1;
                }
            }
        }
        acc
    } else {
        let mut acc = 0.0;
        for &h in a {
            for &k in b {
                acc += xi.entry(h as usize, k as usize);
            }
        }
        acc
    }
}

/// All pair weights as a dense `n x n` table (diagonal left at 0). Meant as
/// a reference for small instances.
pub fn brute_force_weights(matrix: &AttributeMatrix, xi: &Influence) -> Vec<Vec<f64>> {
    let n = matrix.n();
    let mut table = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..i {
            let w = weight(matrix, xi, i, j);
            table[i][j] = w;
            table[j][i] = w;
        }
    }
    table
}

/// Pair weights of a matrix in sparse form.
///
/// Pairs without an entry share only the features held by every node and
/// have weight `offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairWeights {
    n: usize,
    offset: f64,
    /// `(i, j, w_ij)` with `j < i`, sorted by `(i, j)`.
    entries: Vec<(u32, u32, f64)>,
    /// Start of each node's entries.
    row_start: Vec<usize>,
}

impl PairWeights {
    pub fn compute(matrix: &AttributeMatrix, xi: &Influence) -> Self {
        let n = matrix.n();
        let mut entries = Vec::new();
        let mut offset = 0.0;
        if xi.is_diagonal() {
            let counts = matrix.column_counts();
            let universal: Vec<bool> = counts.iter().map(|&c| n >= 2 && c == n).collect();
            offset = universal
                .iter()
                .enumerate()
                .filter(|(_, &u)| u)
                .map(|(k, _)| xi.entry(k, k))
                .sum();
            let mut columns: Vec<Vec<u32>> = vec![Vec::new(); counts.len()];
            for (i, row) in matrix.rows().iter().enumerate() {
                for &k in row {
                    if !universal[k as usize] {
                        columns[k as usize].push(i as u32);
                    }
                }
            }
            let mut acc = vec![0.0; n];
            let mut touched = vec![false; n];
            let mut list: Vec<u32> = Vec::new();
            for (i, row) in matrix.rows().iter().enumerate() {
                for &k in row {
                    let k = k as usize;
                    if universal[k] {
                        continue;
                    }
                    let x = xi.entry(k, k);
                    if x == 0.0 {
                        continue;
                    }
                    for &j in &columns[k] {
                        let j = j as usize;
                        if j >= i {
                            break;
                        }
                        if !touched[j] {
                            touched[j] = true;
                            list.push(j as u32);
                        }
                        acc[j] += x;
                    }
                }
                list.sort_unstable();
                for &j in &list {
                    entries.push((i as u32, j, offset + acc[j as usize]));
                    acc[j as usize] = 0.0;
                    touched[j as usize] = false;
                }
                list.clear();
            }
        } else {
            for i in 0..n {
                for j in 0..i {
                    entries.push((i as u32, j as u32, weight(matrix, xi, i, j)));
                }
            }
        }
        let mut row_start = vec![0; n + 1];
        for &(i, _, _) in &entries {
            row_start[i as usize + 1] += 1;
        }
        for i in 0..n {
            row_start[i + 1] += row_start[i];
        }
        Self {
            n,
            offset,
            entries,
            row_start,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn entries(&self) -> &[(u32, u32, f64)] {
        &self.entries
    }

    /// Entries `(i, j, w)` of node `i` with `j < i`.
    pub fn row_entries(&self, i: usize) -> &[(u32, u32, f64)] {
        &self.entries[self.row_start[i]..self.row_start[i + 1]]
    }

    pub fn total_pairs(&self) -> u64 {
        let n = self.n as u64;
        n * n.saturating_sub(1) / 2
    }

    /// Pairs without an explicit entry.
    pub fn background_pairs(&self) -> u64 {
        self.total_pairs() - self.entries.len() as u64
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i > j { (i, j) } else { (j, i) };
        let row = self.row_entries(a);
        match row.binary_search_by_key(&(b as u32), |e| e.1) {
            Ok(p) => row[p].2,
            Err(_) => self.offset,
        }
    }

    /// Weights of node `i` towards every `j < i`.
    pub fn row_dense(&self, i: usize) -> Vec<f64> {
        let mut out = vec![self.offset; i];
        for &(_, j, w) in self.row_entries(i) {
            out[j as usize] = w;
        }
        out
    }

    /// Multiset of all pair weights.
    pub fn distribution(&self) -> WeightDistribution {
        let mut counts: BTreeMap<u64, (f64, u64)> = BTreeMap::new();
        let mut add = |w: f64, c: u64| {
            // Order-preserving key for finite floats.
            let bits = w.to_bits();
            let key = if w.is_sign_negative() { !bits } else { bits | (1 << 63) };
            counts.entry(key).or_insert((w, 0)).1 += c;
        };
        for &(_, _, w) in &self.entries {
            add(w, 1);
        }
        if self.background_pairs() > 0 {
            add(self.offset, self.background_pairs());
        }
        WeightDistribution::new(counts.into_values().collect())
    }
}
