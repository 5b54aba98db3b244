use super::ModelError;

/// Left-ordered sparse binary node-by-feature matrix.
///
/// Rows and feature indices are 0-based. Row `i` holds the sorted feature
/// indices of node `i`; its new features are exactly the block
/// `prefix_totals[i-1]..prefix_totals[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeMatrix {
    rows: Vec<Vec<u32>>,
    new_counts: Vec<usize>,
    prefix_totals: Vec<usize>,
}

impl AttributeMatrix {
    /// Builds a matrix from sorted rows, inferring the new-feature counts and
    /// checking the left-ordering invariant.
    pub fn from_rows(rows: Vec<Vec<u32>>) -> Result<Self, ModelError> {
        if rows.is_empty() {
            return Err(ModelError::EmptyModel);
        }
        let mut new_counts = Vec::with_capacity(rows.len());
        let mut prefix_totals = Vec::with_capacity(rows.len());
        let mut total = 0usize;
        for (i, row) in rows.iter().enumerate() {
            let not_left = |reason: String| ModelError::NotLeftOrdered { row: i, reason };
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(not_left("indices not strictly ascending".into()));
            }
            // Indices >= total must form the contiguous block total..total+N.
            let start = row.partition_point(|&k| (k as usize) < total);
            let fresh = &row[start..];
            for (offset, &k) in fresh.iter().enumerate() {
                if k as usize != total + offset {
                    return Err(not_left(format!(
                        "new feature {k} breaks the contiguous block starting at {total}"
                    )));
                }
            }
            total += fresh.len();
            new_counts.push(fresh.len());
            prefix_totals.push(total);
        }
        Ok(Self {
            rows,
            new_counts,
            prefix_totals,
        })
    }

    /// Builds a matrix and checks that the inferred new-feature counts equal
    /// `new_counts`.
    pub fn with_counts(rows: Vec<Vec<u32>>, new_counts: &[usize]) -> Result<Self, ModelError> {
        let matrix = Self::from_rows(rows)?;
        if matrix.new_counts.len() != new_counts.len() {
            return Err(ModelError::LengthMismatch {
                expected: matrix.n(),
                got: new_counts.len(),
            });
        }
        if let Some(row) = (0..matrix.n()).find(|&i| matrix.new_counts[i] != new_counts[i]) {
            return Err(ModelError::NotLeftOrdered {
                row,
                reason: format!(
                    "declared {} new features, row holds {}",
                    new_counts[row], matrix.new_counts[row]
                ),
            });
        }
        Ok(matrix)
    }

    /// Trusted constructor for the generator, which builds left-ordered rows by
    /// construction.
    pub(crate) fn from_parts(rows: Vec<Vec<u32>>, new_counts: Vec<usize>) -> Self {
        let mut total = 0;
        let prefix_totals = new_counts
            .iter()
            .map(|&c| {
                total += c;
                total
            })
            .collect();
        let matrix = Self {
            rows,
            new_counts,
            prefix_totals,
        };
        debug_assert!(Self::from_rows(matrix.rows.clone()).as_ref() == Ok(&matrix));
        matrix
    }

    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// `L_n`, the number of distinct features.
    pub fn num_features(&self) -> usize {
        *self.prefix_totals.last().unwrap_or(&0)
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    /// `N_1, ..., N_n`.
    pub fn new_counts(&self) -> &[usize] {
        &self.new_counts
    }

    /// `L_1, ..., L_n`.
    pub fn prefix_totals(&self) -> &[usize] {
        &self.prefix_totals
    }

    /// Total number of ones.
    pub fn ones(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, i: usize, k: usize) -> bool {
        u32::try_from(k).is_ok_and(|k| self.rows[i].binary_search(&k).is_ok())
    }

    /// Number of ones in every column.
    pub fn column_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_features()];
        for row in &self.rows {
            for &k in row {
                counts[k as usize] += 1;
            }
        }
        counts
    }

    /// The first `n` rows, which is again a left-ordered matrix.
    pub fn prefix(&self, n: usize) -> Result<Self, ModelError> {
        if n == 0 || n > self.n() {
            return Err(ModelError::PrefixOutOfRange(n));
        }
        Ok(Self {
            rows: self.rows[..n].to_vec(),
            new_counts: self.new_counts[..n].to_vec(),
            prefix_totals: self.prefix_totals[..n].to_vec(),
        })
    }

    /// True when every row after the first contains all first-row features,
    /// which the model forces when `c = 0`.
    pub fn first_row_universal(&self) -> bool {
        let n1 = self.new_counts[0];
        self.rows[1..]
            .iter()
            .all(|row| row.len() >= n1 && row[..n1].iter().enumerate().all(|(k, &x)| x as usize == k))
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut dense = DenseMatrix::zeros(self.n(), self.num_features());
        for (i, row) in self.rows.iter().enumerate() {
            for &k in row {
                dense.set(i, k as usize);
            }
        }
        dense
    }
}

/// Bitset-row copy of an attribute matrix, handy when `L_n` is small.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseMatrix {
    n: usize,
    num_features: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize, num_features: usize) -> Self {
        let words_per_row = num_features.div_ceil(64);
        Self {
            n,
            num_features,
            words_per_row,
            bits: vec![0; n * words_per_row],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn get(&self, i: usize, k: usize) -> bool {
        self.bits[i * self.words_per_row + k / 64] >> (k % 64) & 1 == 1
    }

    fn set(&mut self, i: usize, k: usize) {
        self.bits[i * self.words_per_row + k / 64] |= 1 << (k % 64);
    }

    /// Number of features rows `i` and `j` share.
    pub fn shared(&self, i: usize, j: usize) -> u32 {
        let a = &self.bits[i * self.words_per_row..(i + 1) * self.words_per_row];
        let b = &self.bits[j * self.words_per_row..(j + 1) * self.words_per_row];
        a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum()
    }

    pub fn to_sparse(&self) -> Result<AttributeMatrix, ModelError> {
        let rows = (0..self.n)
            .map(|i| (0..self.num_features).filter(|&k| self.get(i, k)).map(|k| k as u32).collect())
            .collect();
        AttributeMatrix::from_rows(rows)
    }
}
