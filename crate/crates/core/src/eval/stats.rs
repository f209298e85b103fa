use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{contract_err, dim_err, Result};
use crate::graph::MultiplexGraph;
use crate::scalar::Scalar;
use crate::sparse::SparseMatrix;

/// Per view, the share of its same-class edges that no other view contains.
pub fn unique_relevant_ratio<T: Scalar>(g: &MultiplexGraph<T>) -> Result<Vec<f64>> {
    let labels = g
        .labels
        .as_ref()
        .ok_or_else(|| contract_err("unique_relevant_ratio", "graph has no labels"))?;
    let sets: Vec<HashSet<(usize, usize)>> = g
        .views
        .iter()
        .map(|a| MultiplexGraph::edge_list(a).into_iter().collect())
        .collect();
    Ok((0..sets.len())
        .map(|v| {
            let relevant: Vec<&(usize, usize)> = sets[v].iter().filter(|(a, b)| labels[*a] == labels[*b]).collect();
            if relevant.is_empty() {
                return 0.0;
            }
            let unique = relevant
                .iter()
                .filter(|e| sets.iter().enumerate().all(|(w, s)| w == v || !s.contains(e)))
                .count();
            unique as f64 / relevant.len() as f64
        })
        .collect())
}

/// Share of a view's undirected edges whose endpoints share a class.
pub fn homophily<T: Scalar>(g: &MultiplexGraph<T>) -> Result<Vec<f64>> {
    let labels = g
        .labels
        .as_ref()
        .ok_or_else(|| contract_err("homophily", "graph has no labels"))?;
    Ok(g.views
        .iter()
        .map(|a| {
            let edges = MultiplexGraph::edge_list(a);
            let same = edges.iter().filter(|(u, v)| labels[*u] == labels[*v]).count();
            same as f64 / edges.len().max(1) as f64
        })
        .collect())
}

/// Share of off-diagonal edge weight in `a` that joins same-class nodes.
pub fn intra_class_fraction<T: Scalar>(a: &SparseMatrix<T>, labels: &[usize]) -> Result<f64> {
    if labels.len() != a.n_rows() {
        return Err(dim_err(
            "intra_class_fraction",
            format!("{} labels for {} nodes", labels.len(), a.n_rows()),
        ));
    }
    let (mut same, mut total) = (0.0, 0.0);
    for (r, c, v) in a.triplets() {
        if r != c {
            let w = v.to_f64().unwrap_or(0.0);
            total += w;
            if labels[r] == labels[c] {
                same += w;
            }
        }
    }
    Ok(if total > 0.0 { same / total } else { 0.0 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub views: usize,
    pub features: usize,
    pub classes: usize,
    pub edges: Vec<usize>,
    pub homophily: Option<Vec<f64>>,
    pub unique_relevant_ratio: Option<Vec<f64>>,
}

pub fn graph_stats<T: Scalar>(g: &MultiplexGraph<T>) -> GraphStats {
    GraphStats {
        nodes: g.node_count(),
        views: g.view_count(),
        features: g.feature_dim(),
        classes: g.class_count,
        edges: g.views.iter().map(|a| a.undirected_edge_count()).collect(),
        homophily: homophily(g).ok(),
        unique_relevant_ratio: unique_relevant_ratio(g).ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseMatrix;

    fn graph(views: &[&[(usize, usize)]]) -> MultiplexGraph<f64> {
        let vs = views
            .iter()
            .map(|e| MultiplexGraph::adjacency_from_edges(4, e).unwrap())
            .collect();
        MultiplexGraph::new(vs, DenseMatrix::zeros(4, 1), Some(vec![0, 0, 1, 1]), 2).unwrap()
    }

    #[test]
    fn single_view_is_all_unique() {
        assert_eq!(unique_relevant_ratio(&graph(&[&[(0, 1), (2, 3), (1, 2)]])).unwrap(), vec![1.0]);
    }

    #[test]
    fn identical_views_share_everything() {
        let e: &[(usize, usize)] = &[(0, 1), (2, 3)];
        assert_eq!(unique_relevant_ratio(&graph(&[e, e])).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn mixed_case_and_homophily() {
        let g = graph(&[&[(0, 1), (2, 3), (1, 2)], &[(0, 1)]]);
        assert_eq!(unique_relevant_ratio(&g).unwrap(), vec![0.5, 0.0]);
        let h = homophily(&g).unwrap();
        assert!((h[0] - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(h[1], 1.0);
        let s = graph_stats(&g);
        assert_eq!(s.edges, vec![3, 1]);
    }

    #[test]
    fn missing_labels_is_error() {
        let a = MultiplexGraph::<f64>::adjacency_from_edges(2, &[(0, 1)]).unwrap();
        let g = MultiplexGraph::new(vec![a], DenseMatrix::zeros(2, 1), None, 0).unwrap();
        assert!(unique_relevant_ratio(&g).is_err());
        assert!(graph_stats(&g).unique_relevant_ratio.is_none());
    }

    #[test]
    fn intra_fraction_ignores_diagonal() {
        let a = SparseMatrix::from_triplets(3, 3, [(0, 0, 5.0), (0, 1, 1.0), (1, 0, 1.0), (1, 2, 3.0), (2, 1, 3.0)])
            .unwrap();
        assert!((intra_class_fraction(&a, &[0, 0, 1]).unwrap() - 0.25).abs() < 1e-15);
        assert!(intra_class_fraction(&a, &[0, 0]).is_err());
    }
}
