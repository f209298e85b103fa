//! Compressed sparse row storage.
//!
//! The sparsity structure lives in a shared [`SparsityPattern`] so that a
//! learned adjacency can hand its structure to the autodiff tape while the
//! edge weights flow through it as an ordinary dense value vector.

use std::sync::Arc;

use crate::dense::DenseMatrix;
use crate::error::{contract_err, dim_err, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsityPattern {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
}

impl SparsityPattern {
    /// Builds a pattern after validating the CSR invariants.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(contract_err("SparsityPattern", "row_offsets length"));
        }
        if row_offsets[0] != 0 || *row_offsets.last().unwrap() != col_indices.len() {
            return Err(contract_err("SparsityPattern", "row_offsets bounds"));
        }
        for r in 0..n_rows {
            let (lo, hi) = (row_offsets[r], row_offsets[r + 1]);
            if lo > hi {
                return Err(contract_err("SparsityPattern", "offsets decrease"));
            }
            let cols = &col_indices[lo..hi];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(contract_err(
                    "SparsityPattern",
                    format!("row {r} columns not strictly increasing"),
                ));
            }
            if cols.last().is_some_and(|&c| c >= n_cols) {
                return Err(contract_err(
                    "SparsityPattern",
                    format!("row {r} column out of range"),
                ));
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
        })
    }

    /// Pattern from per-row column lists; each list is sorted and deduplicated.
    pub fn from_row_lists(n_cols: usize, mut rows: Vec<Vec<usize>>) -> Result<Self> {
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        let mut col_indices = Vec::new();
        row_offsets.push(0);
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            col_indices.extend_from_slice(r);
            row_offsets.push(col_indices.len());
        }
        Self::new(rows.len(), n_cols, row_offsets, col_indices)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn row_cols(&self, r: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[r]..self.row_offsets[r + 1]]
    }

    pub fn row_range(&self, r: usize) -> std::ops::Range<usize> {
        self.row_offsets[r]..self.row_offsets[r + 1]
    }

    /// Storage index of entry `(r, c)`, if present.
    pub fn find(&self, r: usize, c: usize) -> Option<usize> {
        let lo = self.row_offsets[r];
        self.row_cols(r).binary_search(&c).ok().map(|p| lo + p)
    }

    /// Row index of every stored entry, in storage order.
    pub fn entry_rows(&self) -> Vec<usize> {
        let mut rows = Vec::with_capacity(self.nnz());
        for r in 0..self.n_rows {
            rows.extend(std::iter::repeat_n(r, self.row_offsets[r + 1] - self.row_offsets[r]));
        }
        rows
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    pattern: Arc<SparsityPattern>,
    values: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn new(pattern: Arc<SparsityPattern>, values: Vec<T>) -> Result<Self> {
        if values.len() != pattern.nnz() {
            return Err(dim_err(
                "SparseMatrix::new",
                format!("{} values for {} entries", values.len(), pattern.nnz()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(contract_err("SparseMatrix::new", "non-finite value"));
        }
        Ok(Self { pattern, values })
    }

    pub fn empty(n_rows: usize, n_cols: usize) -> Self {
        let pattern = SparsityPattern::new(n_rows, n_cols, vec![0; n_rows + 1], Vec::new())
            .expect("empty pattern is valid");
        Self {
            pattern: Arc::new(pattern),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let pattern =
            SparsityPattern::new(n, n, (0..=n).collect(), (0..n).collect()).expect("diagonal");
        Self {
            pattern: Arc::new(pattern),
            values: vec![T::one(); n],
        }
    }

    /// Builds from `(row, col, value)` triplets. Duplicate coordinates are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n_rows];
        for (r, c, v) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(dim_err(
                    "from_triplets",
                    format!("({r}, {c}) outside {n_rows}x{n_cols}"),
                ));
            }
            rows[r].push((c, v));
        }
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                if cols.len() > *row_offsets.last().unwrap() && *cols.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    values.push(v);
                }
            }
            row_offsets.push(cols.len());
        }
        let pattern = SparsityPattern::new(n_rows, n_cols, row_offsets, cols)?;
        Self::new(Arc::new(pattern), values)
    }

    /// Keeps every non-zero entry of a dense matrix.
    pub fn from_dense(d: &DenseMatrix<T>) -> Result<Self> {
        let mut trip = Vec::new();
        for r in 0..d.n_rows() {
            for c in 0..d.n_cols() {
                let v = d.get(r, c);
                if v != T::zero() {
                    trip.push((r, c, v));
                }
            }
        }
        Self::from_triplets(d.n_rows(), d.n_cols(), trip)
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn n_rows(&self) -> usize {
        self.pattern.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.pattern.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.pattern.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.pattern.col_indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows(), self.n_cols())
    }

    pub fn is_square(&self) -> bool {
        self.pattern.is_square()
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.pattern
            .find(r, c)
            .map_or(T::zero(), |i| self.values[i])
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.pattern.row_range(r);
        self.pattern.col_indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// All stored entries as `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n_rows()).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.n_rows(), self.n_cols());
        for (r, c, v) in self.triplets() {
            d.set(r, c, v);
        }
        d
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(
            self.n_cols(),
            self.n_rows(),
            self.triplets().map(|(r, c, v)| (c, r, v)),
        )
        .expect("transpose of a valid matrix is valid")
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        self.is_symmetric_within(T::zero())
    }

    pub fn is_symmetric_within(&self, tol: T) -> bool {
        self.is_square() && self.triplets().all(|(r, c, v)| (self.get(c, r) - v).abs() <= tol)
    }

    /// Drops stored entries whose value is exactly zero.
    pub fn prune_zeros(&self) -> Self {
        Self::from_triplets(
            self.n_rows(),
            self.n_cols(),
            self.triplets().filter(|&(_, _, v)| v != T::zero()),
        )
        .expect("subset of a valid matrix is valid")
    }

    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        Self::new(self.pattern.clone(), values)
    }

    /// Sparse × dense product.
    pub fn spmm(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        spmm_raw(&self.pattern, &self.values, x)
    }

    /// Number of undirected edges of a symmetric matrix, ignoring the diagonal.
    pub fn undirected_edge_count(&self) -> usize {
        self.triplets().filter(|&(r, c, _)| r < c).count()
    }

    pub fn cast<U: Scalar>(&self) -> SparseMatrix<U> {
        SparseMatrix {
            pattern: self.pattern.clone(),
            values: self.values.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}

pub(crate) fn spmm_raw<T: Scalar>(
    pattern: &SparsityPattern,
    values: &[T],
    x: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    if pattern.n_cols != x.n_rows() {
        return Err(dim_err(
            "spmm",
            format!(
                "{}x{} · {:?}",
                pattern.n_rows,
                pattern.n_cols,
                x.shape()
            ),
        ));
    }
    let m = x.n_cols();
    let mut out = DenseMatrix::zeros(pattern.n_rows, m);
    for r in 0..pattern.n_rows {
        let range = pattern.row_range(r);
        let out_row = out.row_mut(r);
        for e in range {
            let w = values[e];
            let x_row = x.row(pattern.col_indices[e]);
            for (o, &xv) in out_row.iter_mut().zip(x_row) {
                *o += w * xv;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_merge_duplicates_and_sort() {
        let m = SparseMatrix::<f64>::from_triplets(2, 3, vec![(0, 2, 1.0), (0, 0, 2.0), (0, 2, 0.5)])
            .unwrap();
        assert_eq!(m.col_indices(), &[0, 2]);
        assert_eq!(m.values(), &[2.0, 1.5]);
        assert_eq!(m.row_offsets(), &[0, 2, 2]);
    }

    #[test]
    fn pattern_rejects_unsorted_columns() {
        assert!(SparsityPattern::new(1, 3, vec![0, 2], vec![2, 1]).is_err());
        assert!(SparsityPattern::new(1, 3, vec![0, 1], vec![3]).is_err());
    }

    #[test]
    fn spmm_matches_dense() {
        let s = SparseMatrix::<f64>::from_triplets(
            3,
            3,
            vec![(0, 1, 2.0), (1, 0, -1.0), (2, 2, 0.5), (2, 0, 3.0)],
        )
        .unwrap();
        let x = DenseMatrix::from_fn(3, 2, |r, c| (r * 2 + c) as f64);
        let sparse = s.spmm(&x).unwrap();
        let dense = s.to_dense().matmul(&x).unwrap();
        assert!(sparse.max_abs_diff(&dense) < 1e-15);
    }

    #[test]
    fn rejects_non_finite() {
        let p = Arc::new(SparsityPattern::new(1, 1, vec![0, 1], vec![0]).unwrap());
        assert!(SparseMatrix::new(p, vec![f64::NAN]).is_err());
    }
}
