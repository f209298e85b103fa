use crate::dense::DenseMatrix;
use crate::error::{contract_err, dim_err, Result};
use crate::scalar::Scalar;
use crate::sparse::SparseMatrix;

/// Several binary adjacency views over one shared node set.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplexGraph<T> {
    pub views: Vec<SparseMatrix<T>>,
    pub features: DenseMatrix<T>,
    pub labels: Option<Vec<usize>>,
    pub class_count: usize,
}

impl<T: Scalar> MultiplexGraph<T> {
    /// Validates shapes, symmetry and binary edge values.
    pub fn new(
        views: Vec<SparseMatrix<T>>,
        features: DenseMatrix<T>,
        labels: Option<Vec<usize>>,
        class_count: usize,
    ) -> Result<Self> {
        let n = features.n_rows();
        if views.is_empty() {
            return Err(contract_err("MultiplexGraph", "at least one view required"));
        }
        for (i, v) in views.iter().enumerate() {
            if v.n_rows() != n || v.n_cols() != n {
                return Err(dim_err(
                    "MultiplexGraph",
                    format!("view {i} is {:?}, expected {n}x{n}", v.shape()),
                ));
            }
            if !v.is_symmetric() {
                return Err(contract_err("MultiplexGraph", format!("view {i} not symmetric")));
            }
            if v.values().iter().any(|&w| w != T::one() && w != T::zero()) {
                return Err(contract_err("MultiplexGraph", format!("view {i} not binary")));
            }
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(dim_err("MultiplexGraph", "label count differs from node count"));
            }
            if let Some(&bad) = l.iter().find(|&&c| c >= class_count) {
                return Err(contract_err(
                    "MultiplexGraph",
                    format!("label {bad} >= class_count {class_count}"),
                ));
            }
        }
        if !features.is_finite() {
            return Err(contract_err("MultiplexGraph", "non-finite features"));
        }
        Ok(Self {
            views,
            features,
            labels,
            class_count,
        })
    }

    pub fn node_count(&self) -> usize {
        self.features.n_rows()
    }

    pub fn view_count(&self) -> usize {
        self.views.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.n_cols()
    }

    /// Binary symmetric adjacency from undirected `(u, v)` pairs.
    pub fn adjacency_from_edges(n: usize, edges: &[(usize, usize)]) -> Result<SparseMatrix<T>> {
        let mut trip = Vec::with_capacity(edges.len() * 2);
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(dim_err("adjacency_from_edges", format!("edge ({u}, {v}) with n={n}")));
            }
            if u == v {
                return Err(contract_err("adjacency_from_edges", format!("self loop at {u}")));
            }
            trip.push((u, v, T::one()));
            trip.push((v, u, T::one()));
        }
        let m = SparseMatrix::from_triplets(n, n, trip)?;
        // duplicates were summed; clamp back to binary
        let values = m.values().iter().map(|_| T::one()).collect();
        m.with_values(values)
    }

    /// Undirected edge list `(u, v)` with `u < v` for one view.
    pub fn edge_list(view: &SparseMatrix<T>) -> Vec<(usize, usize)> {
        view.triplets()
            .filter(|&(r, c, _)| r < c)
            .map(|(r, c, _)| (r, c))
            .collect()
    }
}
