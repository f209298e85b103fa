use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{contract_err, dim_err, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
    pub f1: f64,
    pub assignment: Vec<usize>,
}

struct Contingency {
    n: usize,
    /// `table[p][t]`: nodes in cluster `p` with class `t`.
    table: Vec<Vec<usize>>,
    pred_sizes: Vec<usize>,
    truth_sizes: Vec<usize>,
}

impl Contingency {
    fn new(pred: &[usize], truth: &[usize], classes: usize) -> Self {
        let kp = pred.iter().copied().max().map_or(0, |m| m + 1).max(classes);
        let kt = truth.iter().copied().max().map_or(0, |m| m + 1).max(classes);
        let mut table = vec![vec![0; kt]; kp];
        for (&p, &t) in pred.iter().zip(truth) {
            table[p][t] += 1;
        }
        let pred_sizes = table.iter().map(|r| r.iter().sum()).collect();
        let truth_sizes = (0..kt).map(|t| table.iter().map(|r| r[t]).sum()).collect();
        Self {
            n: pred.len(),
            table,
            pred_sizes,
            truth_sizes,
        }
    }

    /// Cluster → class map maximizing matched nodes, ties broken by the
    /// summed F1 of the matched pairs so that the result does not depend on
    /// label order; unmatched clusters map to `None`.
    fn matching(&self) -> Vec<Option<usize>> {
        const F1_SCALE: i128 = 1 << 40;
        let k = self.table.len().max(self.truth_sizes.len());
        let primary = (k as i128 + 1) * F1_SCALE;
        let w = Matrix::from_fn(k, k, |(p, t)| {
            let hit = self.table.get(p).and_then(|r| r.get(t)).copied().unwrap_or(0);
            if hit == 0 {
                return 0;
            }
            let f1 = 2.0 * hit as f64 / (self.pred_sizes[p] + self.truth_sizes[t]) as f64;
            hit as i128 * primary + (f1 * F1_SCALE as f64).round() as i128
        });
        let (_, assign) = kuhn_munkres(&w);
        (0..self.table.len())
            .map(|p| Some(assign[p]).filter(|&t| t < self.truth_sizes.len()))
            .collect()
    }
}

fn entropy(sizes: &[usize], n: f64) -> f64 {
    sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn comb2(x: usize) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// ACC and macro-F1 under the optimal cluster → class matching, NMI with
/// arithmetic normalization, and ARI.
pub fn clustering_metrics(pred: &[usize], truth: &[usize], classes: usize) -> Result<ClusterReport> {
    if pred.len() != truth.len() {
        return Err(dim_err(
            "clustering_metrics",
            format!("{} predictions, {} labels", pred.len(), truth.len()),
        ));
    }
    if pred.is_empty() {
        return Err(contract_err("clustering_metrics", "no nodes"));
    }
    let c = Contingency::new(pred, truth, classes);
    let n = c.n as f64;

    let h_pred = entropy(&c.pred_sizes, n);
    let h_truth = entropy(&c.truth_sizes, n);
    let mut mi = 0.0;
    for (p, row) in c.table.iter().enumerate() {
        for (t, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let nij = nij as f64;
                mi += nij / n * (n * nij / (c.pred_sizes[p] as f64 * c.truth_sizes[t] as f64)).ln();
            }
        }
    }
    let truth_classes = c.truth_sizes.iter().filter(|&&s| s > 0).count();
    let nmi = if truth_classes < 2 || h_pred + h_truth == 0.0 {
        0.0
    } else {
        (2.0 * mi / (h_pred + h_truth)).clamp(0.0, 1.0)
    };

    let sum_ij: f64 = c.table.iter().flatten().map(|&x| comb2(x)).sum();
    let sum_a: f64 = c.pred_sizes.iter().map(|&x| comb2(x)).sum();
    let sum_b: f64 = c.truth_sizes.iter().map(|&x| comb2(x)).sum();
    let expected = sum_a * sum_b / comb2(c.n).max(1.0);
    let max_index = 0.5 * (sum_a + sum_b);
    let ari = if max_index == expected {
        1.0
    } else {
        (sum_ij - expected) / (max_index - expected)
    };

    let matching = c.matching();
    let matched: usize = matching
        .iter()
        .enumerate()
        .filter_map(|(p, t)| t.map(|t| c.table[p][t]))
        .sum();
    let acc = matched as f64 / n;
    let mut f1_sum = 0.0;
    let mut f1_count = 0;
    for (t, &size) in c.truth_sizes.iter().enumerate() {
        if size == 0 {
            continue;
        }
        f1_count += 1;
        if let Some(p) = matching.iter().position(|&m| m == Some(t)) {
            let hit = c.table[p][t] as f64;
            if hit > 0.0 {
                let precision = hit / c.pred_sizes[p] as f64;
                let recall = hit / size as f64;
                f1_sum += 2.0 * precision * recall / (precision + recall);
            }
        }
    }
    Ok(ClusterReport {
        acc,
        nmi,
        ari,
        f1: f1_sum / f1_count.max(1) as f64,
        assignment: pred.to_vec(),
    })
}

/// NMI alone, for callers that do not need the matching.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    Ok(clustering_metrics(pred, truth, 0)?.nmi)
}

/// Macro and micro F1 of a single-label prediction.
pub fn f1_scores(pred: &[usize], truth: &[usize], classes: usize) -> (f64, f64) {
    let mut tp = vec![0usize; classes];
    let mut pred_count = vec![0usize; classes];
    let mut true_count = vec![0usize; classes];
    for (&p, &t) in pred.iter().zip(truth) {
        pred_count[p] += 1;
        true_count[t] += 1;
        if p == t {
            tp[p] += 1;
        }
    }
    let mut macro_sum = 0.0;
    for c in 0..classes {
        let denom = pred_count[c] + true_count[c];
        if denom > 0 {
            macro_sum += 2.0 * tp[c] as f64 / denom as f64;
        }
    }
    let micro = tp.iter().sum::<usize>() as f64 / pred.len().max(1) as f64;
    (macro_sum / classes.max(1) as f64, micro)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        let t = vec![0, 0, 1, 1, 2, 2];
        let r = clustering_metrics(&t, &t, 3).unwrap();
        assert_eq!((r.acc, r.f1, r.ari), (1.0, 1.0, 1.0));
        assert!((r.nmi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn permutation_is_absorbed() {
        let t = vec![0, 0, 1, 1, 2, 2, 2];
        let p = vec![2, 2, 0, 0, 1, 1, 1];
        let r = clustering_metrics(&p, &t, 3).unwrap();
        assert_eq!(r.acc, 1.0);
        assert_eq!(r.f1, 1.0);
        assert!((r.nmi - 1.0).abs() < 1e-12);
        assert!((r.ari - 1.0).abs() < 1e-12);
    }

    #[test]
    fn independent_split() {
        let r = clustering_metrics(&[0, 0, 1, 1], &[0, 1, 0, 1], 2).unwrap();
        assert!(r.nmi.abs() < 1e-12);
        assert!(r.ari <= 0.0);
        assert_eq!(r.acc, 0.5);
    }

    #[test]
    fn single_truth_class_has_zero_nmi() {
        let r = clustering_metrics(&[0, 1, 0, 1], &[0, 0, 0, 0], 2).unwrap();
        assert_eq!(r.nmi, 0.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(clustering_metrics(&[0, 1], &[0], 2).is_err());
    }

    #[test]
    fn f1_of_classifier() {
        let (ma, mi) = f1_scores(&[0, 0, 1, 1], &[0, 1, 1, 1], 2);
        assert!((mi - 0.75).abs() < 1e-12);
        assert!((ma - (2.0 / 3.0 + 0.8) / 2.0).abs() < 1e-12);
    }
}
