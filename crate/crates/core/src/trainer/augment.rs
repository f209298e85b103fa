use rand::Rng as _;

use crate::dense::DenseMatrix;
use crate::graph::MultiplexGraph;
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::sparse::SparseMatrix;

/// One Bernoulli(1 − ρ) keep mask over feature columns, applied to every row.
pub fn mask_features<T: Scalar>(x: &DenseMatrix<T>, rho: f64, rng: &mut Rng) -> DenseMatrix<T> {
    let keep: Vec<bool> = (0..x.n_cols()).map(|_| !rng.random_bool(rho)).collect();
    DenseMatrix::from_fn(x.n_rows(), x.n_cols(), |r, c| {
        if keep[c] {
            x.get(r, c)
        } else {
            T::zero()
        }
    })
}

/// Keeps every undirected edge independently with probability `1 − ρ_s`.
pub fn drop_edges<T: Scalar>(a: &SparseMatrix<T>, rho_s: f64, rng: &mut Rng) -> SparseMatrix<T> {
    let kept: Vec<(usize, usize)> = MultiplexGraph::edge_list(a)
        .into_iter()
        .filter(|_| !rng.random_bool(rho_s))
        .collect();
    MultiplexGraph::adjacency_from_edges(a.n_rows(), &kept).expect("subset of a valid edge set")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    #[test]
    fn mask_extremes() {
        let x = DenseMatrix::<f64>::from_fn(3, 5, |r, c| (r + c + 1) as f64);
        assert_eq!(mask_features(&x, 0.0, &mut seeded_rng(1)), x);
        assert_eq!(mask_features(&x, 1.0, &mut seeded_rng(1)), DenseMatrix::zeros(3, 5));
    }

    #[test]
    fn mask_is_shared_across_rows() {
        let x = DenseMatrix::<f64>::filled(4, 50, 1.0);
        let m = mask_features(&x, 0.5, &mut seeded_rng(2));
        for r in 1..4 {
            assert_eq!(m.row(r), m.row(0));
        }
    }

    #[test]
    fn drop_extremes_preserve_symmetry() {
        let a = MultiplexGraph::<f64>::adjacency_from_edges(5, &[(0, 1), (1, 2), (2, 4), (3, 4)]).unwrap();
        assert_eq!(drop_edges(&a, 0.0, &mut seeded_rng(3)), a);
        assert_eq!(drop_edges(&a, 1.0, &mut seeded_rng(3)).nnz(), 0);
        let half = drop_edges(&a, 0.5, &mut seeded_rng(3));
        assert!(half.is_symmetric());
        assert!(half.triplets().all(|(r, c, _)| a.get(r, c) == 1.0));
    }
}
