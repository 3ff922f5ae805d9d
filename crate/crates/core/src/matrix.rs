//! Partially observed matrices and dense column-side feature matrices.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A partially observed `n x m` matrix, stored row-wise.
///
/// Row `i` holds the observed entries of that row sorted by column index; the
/// indicator `W_i` of the observed set is implied by those column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Borrowed view of the observed entries of one row.
#[derive(Debug, Clone, Copy)]
pub struct Row<'a> {
    pub index: usize,
    pub cols: &'a [usize],
    pub vals: &'a [f64],
}

impl Row<'_> {
    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    pub fn sum_squares(&self) -> f64 {
        self.vals.iter().map(|v| v * v).sum()
    }
}

impl MaskedMatrix {
    /// Builds a matrix from `(row, col, value)` triplets in any order.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        if triplets.is_empty() {
            return Err(Error::NoObservedEntries);
        }
        for &(i, j, v) in &triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({i}, {j}) outside a {n_rows}x{n_cols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({i}, {j}) is not finite"
                )));
            }
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        for w in triplets.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(Error::DuplicateEntry {
                    row: w[0].0,
                    col: w[0].1,
                });
            }
        }
        let mut row_ptr = vec![0usize; n_rows + 1];
        for &(i, _, _) in &triplets {
            row_ptr[i + 1] += 1;
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let cols = triplets.iter().map(|t| t.1).collect();
        let vals = triplets.iter().map(|t| t.2).collect();
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            cols,
            vals,
        })
    }

    /// Builds a matrix from per-row entry lists that are already sorted by
    /// column with no duplicates. An empty result is allowed here.
    pub(crate) fn from_sorted_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n_rows = rows.len();
        let nnz = rows.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows {
            for (j, v) in row {
                debug_assert!(j < n_cols);
                debug_assert!(cols.len() == *row_ptr.last().unwrap() || *cols.last().unwrap() < j);
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Number of observed entries, `|Ω|`.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Observed fraction `|Ω| / (n m)`.
    pub fn density(&self) -> f64 {
        self.nnz() as f64 / (self.n_rows as f64 * self.n_cols as f64)
    }

    pub fn row(&self, i: usize) -> Row<'_> {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        Row {
            index: i,
            cols: &self.cols[lo..hi],
            vals: &self.vals[lo..hi],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = Row<'_>> + '_ {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    /// All observed entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            let r = self.row(i);
            r.cols.iter().zip(r.vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let r = self.row(i);
        r.cols.binary_search(&j).ok().map(|pos| r.vals[pos])
    }

    /// Number of rows without any observed entry.
    pub fn empty_rows(&self) -> usize {
        self.row_ptr.windows(2).filter(|w| w[0] == w[1]).count()
    }

    /// `(1 / nm) Σ_i ||ā_i||²`, the value of the objective with no features.
    pub fn normalized_energy(&self) -> f64 {
        let total: f64 = self.rows().map(|r| r.sum_squares()).sum();
        total / (self.n_rows as f64 * self.n_cols as f64)
    }

    /// Splits the observed entries into a training part and a validation
    /// part holding `round(fraction * |Ω|)` entries drawn uniformly without
    /// replacement. Both parts keep the original shape.
    pub fn split_validation(&self, fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::InvalidConfig(format!(
                "validation fraction must lie in [0, 1), got {fraction}"
            )));
        }
        let nnz = self.nnz();
        let n_val = (fraction * nnz as f64).round() as usize;
        let mut in_val = vec![false; nnz];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for idx in index::sample(&mut rng, nnz, n_val) {
            in_val[idx] = true;
        }
        let mut train = Vec::with_capacity(self.n_rows);
        let mut val = Vec::with_capacity(self.n_rows);
        for i in 0..self.n_rows {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut t = Vec::new();
            let mut v = Vec::new();
            for e in lo..hi {
                let entry = (self.cols[e], self.vals[e]);
                if in_val[e] {
                    v.push(entry);
                } else {
                    t.push(entry);
                }
            }
            train.push(t);
            val.push(v);
        }
        Ok((
            Self::from_sorted_rows(self.n_cols, train),
            Self::from_sorted_rows(self.n_cols, val),
        ))
    }
}

/// Dense `m x p` feature matrix `B`, one row per column of the masked matrix
/// and one column `b^j` per feature. Stored row-major so that gathering the
/// features of an observed column is a contiguous read.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_rows: usize,
    n_features: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_row_major(n_rows: usize, n_features: usize, data: Vec<f64>) -> Result<Self> {
        if n_features == 0 || n_rows == 0 {
            return Err(Error::DimensionMismatch(
                "feature matrix needs at least one row and one feature".into(),
            ));
        }
        if data.len() != n_rows * n_features {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values for a {n_rows}x{n_features} feature matrix, got {}",
                n_rows * n_features,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::DimensionMismatch(format!(
                "feature entry ({}, {}) is not finite",
                pos / n_features,
                pos % n_features
            )));
        }
        Ok(Self {
            n_rows,
            n_features,
            data,
        })
    }

    /// Builds from `p` columns of equal length `m`.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let p = columns.len();
        let m = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != m) {
            return Err(Error::DimensionMismatch("ragged feature columns".into()));
        }
        let mut data = vec![0.0; m * p];
        for (j, col) in columns.iter().enumerate() {
            for (r, &v) in col.iter().enumerate() {
                data[r * p + j] = v;
            }
        }
        Self::from_row_major(m, p, data)
    }

    /// Number of rows, `m`.
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Number of features, `p`.
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n_features..(r + 1) * self.n_features]
    }

    pub fn get(&self, r: usize, j: usize) -> f64 {
        self.data[r * self.n_features + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.get(r, j)).collect()
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }
}
