//! Similarity construction and the sparsify → symmetrize/activate → normalize
//! chain that every learned adjacency passes through.

use std::cmp::Ordering;
use std::sync::Arc;

use rand::seq::SliceRandom;

use crate::dense::{dot, DenseMatrix};
use crate::error::{contract_err, dim_err, Result};
use crate::rng::seeded_rng;
use crate::scalar::Scalar;
use crate::sparse::{SparseMatrix, SparsityPattern};

/// Re-partition rounds used by [`approx_topk`].
pub const APPROX_ROUNDS: usize = 2;

/// Scales every row to unit L2 norm; zero rows stay zero.
pub fn l2_normalize_rows<T: Scalar>(h: &DenseMatrix<T>) -> DenseMatrix<T> {
    let mut out = h.clone();
    let mut zero_rows = 0usize;
    for r in 0..out.n_rows() {
        let row = out.row_mut(r);
        let norm = dot(row, row).sqrt();
        if norm > T::zero() {
            for v in row.iter_mut() {
                *v /= norm;
            }
        } else {
            zero_rows += 1;
        }
    }
    if zero_rows > 0 {
        log::warn!("{zero_rows} zero-norm rows; their cosine similarities are set to 0");
    }
    out
}

/// Pairwise cosine similarity of the rows of `h`.
pub fn cosine_similarity<T: Scalar>(h: &DenseMatrix<T>) -> DenseMatrix<T> {
    let hn = l2_normalize_rows(h);
    hn.matmul_t(&hn).expect("square by construction")
}

/// Descending by value, ascending by column on ties.
fn rank_desc<T: Scalar>(a: (usize, T), b: (usize, T)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then(a.0.cmp(&b.0))
}

fn topk_of_row<T: Scalar>(entries: &mut Vec<(usize, T)>, k: usize) {
    if entries.len() > k {
        entries.select_nth_unstable_by(k - 1, |&a, &b| rank_desc(a, b));
        entries.truncate(k);
    }
    entries.sort_unstable_by_key(|&(c, _)| c);
}

/// Keeps the `k` largest entries of every row; ties go to the lower column.
pub fn topk_rows<T: Scalar>(s: &DenseMatrix<T>, k: usize) -> SparseMatrix<T> {
    let k = k.max(1).min(s.n_cols().max(1));
    let mut row_offsets = Vec::with_capacity(s.n_rows() + 1);
    let mut cols = Vec::with_capacity(s.n_rows() * k);
    let mut values = Vec::with_capacity(s.n_rows() * k);
    row_offsets.push(0);
    let mut entries = Vec::with_capacity(s.n_cols());
    for r in 0..s.n_rows() {
        entries.clear();
        entries.extend(s.row(r).iter().copied().enumerate());
        topk_of_row(&mut entries, k);
        for &(c, v) in entries.iter() {
            cols.push(c);
            values.push(v);
        }
        row_offsets.push(cols.len());
    }
    let pattern = SparsityPattern::new(s.n_rows(), s.n_cols(), row_offsets, cols)
        .expect("top-k rows are sorted and in range");
    SparseMatrix::new(Arc::new(pattern), values).expect("finite similarity input")
}

/// Approximate cosine kNN: nodes are shuffled into batches of `batch`, exact
/// top-k runs inside each batch, and the neighbour sets of
/// [`APPROX_ROUNDS`] independent partitions are merged.
pub fn approx_topk<T: Scalar>(
    h: &DenseMatrix<T>,
    k: usize,
    batch: usize,
    seed: u64,
) -> Result<SparseMatrix<T>> {
    let n = h.n_rows();
    if batch < k {
        return Err(contract_err("approx_topk", format!("batch {batch} < k {k}")));
    }
    if batch > n {
        log::debug!("approx_topk: batch {batch} > N {n}, using exact search");
        return Ok(topk_rows(&cosine_similarity(h), k));
    }
    let hn = l2_normalize_rows(h);
    let mut rng = seeded_rng(seed);
    let mut merged: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut entries = Vec::with_capacity(batch);
    for _ in 0..APPROX_ROUNDS {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let mut members = chunk.to_vec();
            members.sort_unstable();
            let kk = k.min(members.len()).max(1);
            for &i in &members {
                entries.clear();
                let hi = hn.row(i);
                entries.extend(members.iter().map(|&j| (j, dot(hi, hn.row(j)))));
                topk_of_row(&mut entries, kk);
                merged[i].extend_from_slice(&entries);
            }
        }
    }
    let mut trip = Vec::new();
    for (i, mut row) in merged.into_iter().enumerate() {
        row.sort_unstable_by_key(|&(c, _)| c);
        row.dedup_by_key(|e| e.0);
        trip.extend(row.into_iter().map(|(c, v)| (i, c, v)));
    }
    SparseMatrix::from_triplets(n, n, trip)
}

/// `(relu(a) + relu(a)ᵀ) / 2`, with entries that end up zero removed.
pub fn symmetrize_activate<T: Scalar>(a: &SparseMatrix<T>) -> Result<SparseMatrix<T>> {
    if !a.is_square() {
        return Err(dim_err("symmetrize_activate", format!("{:?}", a.shape())));
    }
    let half = T::half();
    let relu = |v: T| if v > T::zero() { v } else { T::zero() };
    let trip = a.triplets().flat_map(|(r, c, v)| {
        let w = relu(v) * half;
        [(r, c, w), (c, r, w)]
    });
    Ok(SparseMatrix::from_triplets(a.n_rows(), a.n_cols(), trip)?.prune_zeros())
}

/// `D̃^{-1/2} Ã D̃^{-1/2}` with `Ã` the off-diagonal part of `a` plus unit
/// self loops, and `D̃` the degree matrix of `Ã`. For loop-free input this is
/// the usual `A + I`; an existing diagonal (a kNN graph always holds the
/// self-similarity) is replaced rather than doubled.
pub fn normalize_sym<T: Scalar>(a: &SparseMatrix<T>) -> Result<SparseMatrix<T>> {
    if !a.is_square() {
        return Err(dim_err("normalize_sym", format!("{:?}", a.shape())));
    }
    if a.values().iter().any(|&v| v < T::zero()) {
        return Err(contract_err("normalize_sym", "negative edge weight"));
    }
    let n = a.n_rows();
    let with_loops = SparseMatrix::from_triplets(
        n,
        n,
        a.triplets()
            .filter(|&(r, c, v)| r != c && v != T::zero())
            .chain((0..n).map(|i| (i, i, T::one()))),
    )?;
    let inv_sqrt = degree_inv_sqrt(&with_loops);
    let values = with_loops
        .triplets()
        .map(|(r, c, v)| v * (inv_sqrt[r] * inv_sqrt[c]))
        .collect();
    with_loops.with_values(values)
}

/// `1/√d` of every row sum; rows are positive because a self loop is present.
pub(crate) fn degree_inv_sqrt<T: Scalar>(a: &SparseMatrix<T>) -> Vec<T> {
    (0..a.n_rows())
        .map(|r| {
            let d: T = a.row(r).map(|(_, v)| v).sum();
            assert!(d > T::zero(), "row {r} has non-positive degree");
            T::one() / d.sqrt()
        })
        .collect()
}

/// Full chain applied to an already sparsified similarity.
pub fn postprocess_sparse<T: Scalar>(sp: &SparseMatrix<T>) -> Result<SparseMatrix<T>> {
    normalize_sym(&symmetrize_activate(sp)?)
}

/// `normalize_sym(symmetrize_activate(topk_rows(s, k)))`.
pub fn postprocess<T: Scalar>(s: &DenseMatrix<T>, k: usize) -> Result<SparseMatrix<T>> {
    if s.n_rows() != s.n_cols() {
        return Err(dim_err("postprocess", format!("{:?}", s.shape())));
    }
    postprocess_sparse(&topk_rows(s, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(rows: &[&[f64]]) -> DenseMatrix<f64> {
        DenseMatrix::from_f64_rows(rows)
    }

    #[test]
    fn normalize_single_isolated_node() {
        let a = SparseMatrix::<f64>::empty(1, 1);
        assert_eq!(normalize_sym(&a).unwrap().to_dense(), dense(&[&[1.0]]));
    }

    #[test]
    fn normalize_two_node_edge() {
        let a = SparseMatrix::from_dense(&dense(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        let n = normalize_sym(&a).unwrap().to_dense();
        assert!(n.max_abs_diff(&dense(&[&[0.5, 0.5], &[0.5, 0.5]])) < 1e-15);
    }

    #[test]
    fn normalize_path_matches_dense_oracle() {
        let a = dense(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]);
        // dense oracle: D^{-1/2}(A+I)D^{-1/2}
        let n = 3;
        let at = DenseMatrix::from_fn(n, n, |r, c| a.get(r, c) + if r == c { 1.0 } else { 0.0 });
        let d: Vec<f64> = (0..n).map(|r| at.row(r).iter().sum()).collect();
        let oracle = DenseMatrix::from_fn(n, n, |r, c| at.get(r, c) / (d[r] * d[c]).sqrt());
        let got = normalize_sym(&SparseMatrix::from_dense(&a).unwrap()).unwrap().to_dense();
        assert!(got.max_abs_diff(&oracle) < 1e-15);
        assert!((got.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((got.get(1, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert!((got.get(0, 1) - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        assert!((got.get(1, 2) - 1.0 / 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn normalize_rejects_non_square() {
        assert!(normalize_sym(&SparseMatrix::<f64>::empty(2, 3)).is_err());
    }

    #[test]
    fn symmetrize_cases() {
        let a = SparseMatrix::from_dense(&dense(&[&[0.0, -1.0], &[2.0, 0.0]])).unwrap();
        assert_eq!(
            symmetrize_activate(&a).unwrap().to_dense(),
            dense(&[&[0.0, 1.0], &[1.0, 0.0]])
        );
        let b = SparseMatrix::from_dense(&dense(&[&[0.0, 4.0], &[0.0, 0.0]])).unwrap();
        assert_eq!(
            symmetrize_activate(&b).unwrap().to_dense(),
            dense(&[&[0.0, 2.0], &[2.0, 0.0]])
        );
        let s = SparseMatrix::from_dense(&dense(&[&[1.0, 0.3], &[0.3, 0.0]])).unwrap();
        assert_eq!(symmetrize_activate(&s).unwrap(), s);
        assert!(symmetrize_activate(&SparseMatrix::<f64>::empty(1, 2)).is_err());
    }

    #[test]
    fn topk_cases() {
        let s = dense(&[&[0.9, 0.1, 0.5]]);
        assert_eq!(topk_rows(&s, 2).col_indices(), &[0, 2]);
        assert_eq!(topk_rows(&s, 7).col_indices(), &[0, 1, 2]);
        let tie = dense(&[&[0.5, 0.5, 0.5]]);
        assert_eq!(topk_rows(&tie, 1).col_indices(), &[0]);
        let tie2 = dense(&[&[0.1, 0.5, 0.5, 0.5]]);
        assert_eq!(topk_rows(&tie2, 2).col_indices(), &[1, 2]);
    }

    #[test]
    fn cosine_cases() {
        let eye = DenseMatrix::<f64>::identity(3);
        assert_eq!(cosine_similarity(&eye), eye);
        let same = dense(&[&[1.0, 2.0], &[1.0, 2.0]]);
        assert!(cosine_similarity(&same).max_abs_diff(&DenseMatrix::filled(2, 2, 1.0)) < 1e-15);
        let h = dense(&[&[1.0, 0.0], &[1.0, 1.0]]);
        assert!((cosine_similarity(&h).get(0, 1) - 0.5f64.sqrt()).abs() < 1e-15);
        let z = dense(&[&[0.0, 0.0], &[1.0, 1.0]]);
        let s = cosine_similarity(&z);
        assert_eq!(s.get(0, 0), 0.0);
        assert_eq!(s.get(0, 1), 0.0);
    }

    #[test]
    fn postprocess_identity_and_ones() {
        let eye = DenseMatrix::<f64>::identity(4);
        for k in 1..=4 {
            assert_eq!(postprocess(&eye, k).unwrap().to_dense(), eye);
        }
        let ones = DenseMatrix::<f64>::filled(4, 4, 1.0);
        let p = postprocess(&ones, 4).unwrap().to_dense();
        assert!(p.max_abs_diff(&DenseMatrix::filled(4, 4, 0.25)) < 1e-15);
    }

    #[test]
    fn approx_with_full_batch_is_exact() {
        let h = DenseMatrix::<f64>::from_fn(30, 5, |r, c| ((r * 7 + c * 3) as f64).sin());
        let exact = topk_rows(&cosine_similarity(&h), 4);
        let approx = approx_topk(&h, 4, 30, 9).unwrap();
        assert_eq!(exact, approx);
        let fallback = approx_topk(&h, 4, 31, 9).unwrap();
        assert_eq!(exact, fallback);
        assert!(approx_topk(&h, 4, 3, 9).is_err());
    }

    #[test]
    fn approx_twins_find_each_other() {
        // two identical-feature pairs, every batch holds both members of a pair
        let h = dense(&[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]]);
        // self-similarity is part of the search, so k=2 holds {self, twin}
        let g2 = approx_topk(&h, 2, 4, 1).unwrap();
        assert_eq!(g2.row(0).map(|(c, _)| c).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(g2.row(3).map(|(c, _)| c).collect::<Vec<_>>(), vec![2, 3]);
    }
}
