use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Deserializer, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::MultiplexGraph;
use crate::rng::substream;

/// Multiplex stochastic block model with view-shared and view-unique
/// intra-block edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SbmSpec {
    pub n: usize,
    pub blocks: usize,
    pub views: usize,
    pub p_in_shared: f64,
    /// One probability per view; a single number applies to every view.
    #[serde(deserialize_with = "one_or_many")]
    pub p_in_unique: Vec<f64>,
    pub p_out: f64,
    pub feature_dim: usize,
    pub feature_noise: f64,
    pub seed: u64,
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(p) => vec![p],
        OneOrMany::Many(v) => v,
    })
}

impl SbmSpec {
    /// The four-block, two-view instance used throughout the test suite.
    pub fn reference(seed: u64) -> Self {
        Self {
            n: 400,
            blocks: 4,
            views: 2,
            p_in_shared: 0.02,
            p_in_unique: vec![0.02],
            p_out: 0.002,
            feature_dim: 8,
            feature_noise: 0.5,
            seed,
        }
    }

    pub fn p_unique(&self, view: usize) -> f64 {
        if self.p_in_unique.len() == 1 {
            self.p_in_unique[0]
        } else {
            self.p_in_unique[view]
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.views == 0 || self.blocks == 0 || self.n < self.blocks {
            return bad(format!(
                "need views >= 1 and n >= blocks >= 1 (n={}, blocks={}, views={})",
                self.n, self.blocks, self.views
            ));
        }
        if self.feature_dim < self.blocks {
            return bad(format!("feature_dim {} < blocks {}", self.feature_dim, self.blocks));
        }
        if self.p_in_unique.len() != 1 && self.p_in_unique.len() != self.views {
            return bad(format!(
                "p_in_unique has {} entries for {} views",
                self.p_in_unique.len(),
                self.views
            ));
        }
        let probs = [self.p_in_shared, self.p_out].into_iter().chain(self.p_in_unique.iter().copied());
        for p in probs {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("probability {p} outside [0, 1]"));
            }
        }
        for v in 0..self.views {
            if self.p_in_shared + self.p_unique(v) <= self.p_out {
                return bad(format!("view {v}: intra-block probability must exceed p_out"));
            }
        }
        if !(self.feature_noise.is_finite() && self.feature_noise >= 0.0) {
            return bad(format!("feature_noise {}", self.feature_noise));
        }
        Ok(())
    }

    pub fn block_of(&self, node: usize) -> usize {
        node * self.blocks / self.n
    }
}

/// Samples a multiplex graph from `spec`. The shared intra-block edges come
/// from one stream used by every view; unique intra-block and inter-block
/// edges are drawn per view. Features are the one-hot block indicator plus
/// Gaussian noise.
pub fn gen_sbm(spec: &SbmSpec) -> Result<MultiplexGraph<f64>> {
    spec.validate()?;
    let n = spec.n;
    let labels: Vec<usize> = (0..n).map(|i| spec.block_of(i)).collect();
    let mut shared_rng = substream(spec.seed, 0, 0, "sbm.shared");
    let mut shared = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if labels[u] == labels[v] && shared_rng.random_bool(spec.p_in_shared) {
                shared.push((u, v));
            }
        }
    }
    let views = (0..spec.views)
        .map(|view| {
            let mut rng = substream(spec.seed, view as u64, 0, "sbm.view");
            let p_unique = spec.p_unique(view);
            let mut edges = Vec::new();
            let mut s = shared.iter().peekable();
            for u in 0..n {
                for v in u + 1..n {
                    let is_shared = s.peek() == Some(&&(u, v));
                    if is_shared {
                        s.next();
                    }
                    let p = if labels[u] == labels[v] { p_unique } else { spec.p_out };
                    let drawn = rng.random_bool(p);
                    if is_shared || drawn {
                        edges.push((u, v));
                    }
                }
            }
            MultiplexGraph::adjacency_from_edges(n, &edges)
        })
        .collect::<Result<Vec<_>>>()?;
    let noise = Normal::new(0.0, spec.feature_noise).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = substream(spec.seed, 0, 0, "sbm.features");
    let features = DenseMatrix::from_fn(n, spec.feature_dim, |r, c| {
        let base = if c == labels[r] { 1.0 } else { 0.0 };
        base + noise.sample(&mut rng)
    });
    MultiplexGraph::new(views, features, Some(labels), spec.blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::stats::unique_relevant_ratio;

    #[test]
    fn deterministic_and_labelled() {
        let s = SbmSpec::reference(3);
        let a = gen_sbm(&s).unwrap();
        let b = gen_sbm(&s).unwrap();
        assert_eq!(a.views, b.views);
        assert_eq!(a.features, b.features);
        assert_eq!(a.labels.as_ref().unwrap()[399], 3);
    }

    #[test]
    fn shared_only_has_no_unique_edges() {
        let s = SbmSpec {
            p_in_unique: vec![0.0],
            p_out: 0.0,
            ..SbmSpec::reference(1)
        };
        let g = gen_sbm(&s).unwrap();
        assert_eq!(g.views[0], g.views[1]);
        assert_eq!(unique_relevant_ratio(&g).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn no_inter_block_edges_when_p_out_zero() {
        let s = SbmSpec {
            p_out: 0.0,
            ..SbmSpec::reference(2)
        };
        let g = gen_sbm(&s).unwrap();
        let l = g.labels.as_ref().unwrap();
        for a in &g.views {
            assert!(a.triplets().all(|(r, c, _)| l[r] == l[c]));
        }
    }

    #[test]
    fn reference_ratio_near_half() {
        let g = gen_sbm(&SbmSpec::reference(0)).unwrap();
        for r in unique_relevant_ratio(&g).unwrap() {
            assert!((0.4..=0.6).contains(&r), "{r}");
        }
    }

    #[test]
    fn invalid_specs() {
        let mut s = SbmSpec::reference(0);
        s.p_out = 0.5;
        assert!(gen_sbm(&s).is_err());
        let mut s = SbmSpec::reference(0);
        s.feature_dim = 2;
        assert!(s.validate().is_err());
        let json = r#"{"n":8,"blocks":2,"views":2,"p_in_shared":0.5,"p_in_unique":[0.1,0.2],
            "p_out":0.0,"feature_dim":2,"feature_noise":0.1,"seed":0}"#;
        let parsed: SbmSpec = serde_json::from_str(json).unwrap();
        assert_eq!(parsed.p_unique(1), 0.2);
    }
}
