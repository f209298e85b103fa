use std::collections::HashSet;

use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{contract_err, Result};
use crate::graph::MultiplexGraph;
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbMode {
    Add,
    Delete,
}

impl std::str::FromStr for PerturbMode {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "add" => Ok(Self::Add),
            "delete" => Ok(Self::Delete),
            other => Err(crate::error::Error::Config(format!(
                "mode must be \"add\" or \"delete\", got {other:?}"
            ))),
        }
    }
}

/// Removes or inserts `⌊rate · m⌋` uniformly chosen undirected edges in every
/// view, `m` being that view's edge count.
pub fn perturb_edges(
    g: &MultiplexGraph<f64>,
    rate: f64,
    mode: PerturbMode,
    rng: &mut Rng,
) -> Result<MultiplexGraph<f64>> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(contract_err("perturb_edges", format!("rate {rate}")));
    }
    let n = g.node_count();
    let views = g
        .views
        .iter()
        .map(|a| {
            let edges = MultiplexGraph::edge_list(a);
            let m = edges.len();
            let count = (rate * m as f64).floor() as usize;
            let next = match mode {
                PerturbMode::Delete => {
                    let count = count.min(m);
                    let mut drop: Vec<usize> = sample(rng, m, count).into_vec();
                    drop.sort_unstable();
                    let mut drop = drop.into_iter().peekable();
                    edges
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| {
                            if drop.peek() == Some(i) {
                                drop.next();
                                false
                            } else {
                                true
                            }
                        })
                        .map(|(_, &e)| e)
                        .collect()
                }
                PerturbMode::Add => add_non_edges(n, edges, count, rng),
            };
            MultiplexGraph::adjacency_from_edges(n, &next)
        })
        .collect::<Result<Vec<_>>>()?;
    MultiplexGraph::new(views, g.features.clone(), g.labels.clone(), g.class_count)
}

fn add_non_edges(n: usize, mut edges: Vec<(usize, usize)>, count: usize, rng: &mut Rng) -> Vec<(usize, usize)> {
    let pairs = n * n.saturating_sub(1) / 2;
    let available = pairs - edges.len();
    let count = if count > available {
        log::warn!("requested {count} new edges but only {available} non-edges exist; clamping");
        available
    } else {
        count
    };
    let mut present: HashSet<(usize, usize)> = edges.iter().copied().collect();
    if count * 2 <= available {
        let mut added = 0;
        while added < count {
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            let e = (u.min(v), u.max(v));
            if u != v && present.insert(e) {
                edges.push(e);
                added += 1;
            }
        }
    } else {
        let mut candidates = Vec::with_capacity(available);
        for u in 0..n {
            for v in u + 1..n {
                if !present.contains(&(u, v)) {
                    candidates.push((u, v));
                }
            }
        }
        for i in sample(rng, candidates.len(), count) {
            edges.push(candidates[i]);
        }
        present.clear();
    }
    edges
}

/// `x + ε` with i.i.d. `ε ~ Normal(0, std²)`.
pub fn perturb_features(x: &DenseMatrix<f64>, std: f64, rng: &mut Rng) -> Result<DenseMatrix<f64>> {
    if std == 0.0 {
        return Ok(x.clone());
    }
    let dist = Normal::new(0.0, std).map_err(|e| contract_err("perturb_features", e.to_string()))?;
    let mut out = x.clone();
    out.data_mut().iter_mut().for_each(|v| *v += dist.sample(rng));
    Ok(out)
}
