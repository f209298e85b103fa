use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::adam::AdamState;
use crate::dense::DenseMatrix;
use crate::error::{contract_err, dim_err, Result};
use crate::eval::metrics::f1_scores;
use crate::model::xavier;
use crate::rng::substream;
use crate::sparse::SparseMatrix;
use crate::tape::Tape;

const LR: f64 = 0.01;
const PATIENCE: usize = 30;
const MAX_EPOCHS: usize = 500;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        for (name, part) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            if part.is_empty() {
                return Err(contract_err("split", format!("{name} split is empty")));
            }
            if let Some(&bad) = part.iter().find(|&&i| i >= n) {
                return Err(contract_err("split", format!("{name} index {bad} >= {n}")));
            }
        }
        let mut seen = vec![false; n];
        for &i in self.train.iter().chain(&self.val).chain(&self.test) {
            if std::mem::replace(&mut seen[i], true) {
                return Err(contract_err("split", format!("node {i} appears twice")));
            }
        }
        Ok(())
    }

    /// Uniform random split with the given train and validation fractions;
    /// the rest is test.
    pub fn random(n: usize, train_frac: f64, val_frac: f64, seed: u64) -> Self {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut substream(seed, 0, 0, "split"));
        let n_train = (train_frac * n as f64).round() as usize;
        let n_val = (val_frac * n as f64).round() as usize;
        let mut train = idx[..n_train].to_vec();
        let mut val = idx[n_train..n_train + n_val].to_vec();
        let mut test = idx[n_train + n_val..].to_vec();
        train.sort_unstable();
        val.sort_unstable();
        test.sort_unstable();
        Self { train, val, test }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyScores {
    pub macro_f1: f64,
    pub micro_f1: f64,
}

fn argmax_rows(m: &DenseMatrix<f64>, rows: &[usize]) -> Vec<usize> {
    rows.iter()
        .map(|&r| {
            let row = m.row(r);
            (0..row.len()).fold(0, |b, c| if row[c] > row[b] { c } else { b })
        })
        .collect()
}

/// Trains a fresh two-layer GCN on `a` (already normalized) with
/// cross-entropy on the train split and early stopping on validation
/// macro-F1; returns test scores of the best validation epoch.
pub fn classify_on_graph(
    a: &SparseMatrix<f64>,
    x: &DenseMatrix<f64>,
    labels: &[usize],
    split: &SplitSpec,
    hidden: usize,
    seed: u64,
) -> Result<ClassifyScores> {
    let n = x.n_rows();
    if a.shape() != (n, n) || labels.len() != n {
        return Err(dim_err(
            "classify_on_graph",
            format!("graph {:?}, features {:?}, {} labels", a.shape(), x.shape(), labels.len()),
        ));
    }
    split.validate(n)?;
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1).max(2);
    let ax = a.spmm(x)?;
    let mut w1 = xavier::<f64>(x.n_cols(), hidden, seed, "classify.w1");
    let mut w2 = xavier::<f64>(hidden, classes, seed, "classify.w2");
    let train_idx = Arc::new(split.train.clone());
    let mut onehot = DenseMatrix::zeros(split.train.len(), classes);
    for (i, &node) in split.train.iter().enumerate() {
        onehot.set(i, labels[node], 1.0);
    }
    let val_truth: Vec<usize> = split.val.iter().map(|&i| labels[i]).collect();
    let mut opt = AdamState::new(LR);
    let mut best = (f64::NEG_INFINITY, w1.clone(), w2.clone());
    let mut since_best = 0;

    let forward = |tape: &mut Tape<f64>, w1: &DenseMatrix<f64>, w2: &DenseMatrix<f64>, train: bool| {
        let axv = tape.constant(ax.clone());
        let p1 = tape.leaf(w1.clone(), train);
        let p2 = tape.leaf(w2.clone(), train);
        let h = tape.matmul(axv, p1)?;
        let h = tape.relu(h);
        let hw = tape.matmul(h, p2)?;
        let vals = tape.constant(DenseMatrix::from_vec(a.nnz(), 1, a.values().to_vec())?);
        let logits = tape.spmm(vals, a.pattern().clone(), hw)?;
        Ok::<_, crate::error::Error>((p1, p2, logits))
    };

    for _ in 0..MAX_EPOCHS {
        let mut tape = Tape::new();
        let (p1, p2, logits) = forward(&mut tape, &w1, &w2, true)?;
        let pred = argmax_rows(tape.value(logits), &split.val);
        let (val_macro, _) = f1_scores(&pred, &val_truth, classes);
        if val_macro > best.0 {
            best = (val_macro, w1.clone(), w2.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= PATIENCE {
                break;
            }
        }
        let lsm = tape.log_softmax_rows(logits);
        let picked = tape.gather_rows(lsm, train_idx.clone())?;
        let target = tape.constant(onehot.clone());
        let prod = tape.mul(picked, target)?;
        let total = tape.sum(prod);
        let loss = tape.scale(total, -1.0 / split.train.len() as f64);
        let grads = tape.backward(loss)?;
        let g = [grads.wrt(&tape, p1), grads.wrt(&tape, p2)];
        opt.update(&mut [("classify.w1".into(), &mut w1), ("classify.w2".into(), &mut w2)], &g)?;
    }

    let mut tape = Tape::new();
    let (_, _, logits) = forward(&mut tape, &best.1, &best.2, false)?;
    let pred = argmax_rows(tape.value(logits), &split.test);
    let truth: Vec<usize> = split.test.iter().map(|&i| labels[i]).collect();
    let (macro_f1, micro_f1) = f1_scores(&pred, &truth, classes);
    Ok(ClassifyScores { macro_f1, micro_f1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::MultiplexGraph;
    use crate::postprocess::normalize_sym;
    use rand::Rng as _;

    fn blocks(n: usize, classes: usize) -> (SparseMatrix<f64>, Vec<usize>) {
        let labels: Vec<usize> = (0..n).map(|i| i * classes / n).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if labels[i] == labels[j] && (j - i) % 3 == 1 {
                    edges.push((i, j));
                }
            }
        }
        let a = MultiplexGraph::adjacency_from_edges(n, &edges).unwrap();
        (normalize_sym(&a).unwrap(), labels)
    }

    #[test]
    fn separable_graph_is_learned() {
        let (a, labels) = blocks(90, 3);
        let mut rng = crate::rng::seeded_rng(1);
        let x = DenseMatrix::from_fn(90, 6, |r, c| {
            (if c == labels[r] { 1.0 } else { 0.0 }) + rng.random_range(-0.3..0.3)
        });
        let split = SplitSpec::random(90, 0.2, 0.2, 4);
        let s = classify_on_graph(&a, &x, &labels, &split, 16, 0).unwrap();
        assert!(s.micro_f1 >= 0.95, "{s:?}");
        assert_eq!(s, classify_on_graph(&a, &x, &labels, &split, 16, 0).unwrap());
    }

    #[test]
    fn empty_split_is_rejected() {
        let (a, labels) = blocks(12, 2);
        let split = SplitSpec {
            train: vec![0, 1],
            val: vec![],
            test: vec![5],
        };
        let x = DenseMatrix::zeros(12, 2);
        assert!(classify_on_graph(&a, &x, &labels, &split, 4, 0).is_err());
    }

    #[test]
    fn overlapping_split_is_rejected() {
        let s = SplitSpec {
            train: vec![0, 1],
            val: vec![1],
            test: vec![2],
        };
        assert!(s.validate(3).is_err());
        assert!(SplitSpec::random(10, 0.5, 0.2, 0).validate(10).is_ok());
    }
}
