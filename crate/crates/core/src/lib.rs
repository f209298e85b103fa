//! Multiplex graph structure learning by contrastive mutual information.
//!
//! The crate learns one fused adjacency from a multiplex graph (several
//! adjacency views over a shared node set with node features). Each view is
//! refined by a feature-gated kNN graph learner, and all refined views plus a
//! fused graph are encoded by one shared GCN. Training maximizes shared and
//! fused mutual information while minimizing view-unique task-irrelevant
//! information through graph augmentation.
//!
//! Generic code is written against [`Scalar`]; the aliases below fix the
//! precision at `f64`, which the trainer uses.

pub mod adam;
pub mod checkpoint;
pub mod dense;
pub mod error;
pub mod eval;
pub mod features;
pub mod graph;
pub mod model;
pub mod objectives;
pub mod postprocess;
pub mod rng;
pub mod scalar;
pub mod sparse;
pub mod tape;
pub mod trainer;

pub use adam::{adam_step, AdamState};
pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use features::{fusion_input, sgc_features, ViewFeatures};
pub use graph::MultiplexGraph;
pub use postprocess::{
    approx_topk, cosine_similarity, l2_normalize_rows, normalize_sym, postprocess, symmetrize_activate,
    topk_rows,
};
pub use rng::{seeded_rng, substream, Rng};
pub use scalar::Scalar;
pub use sparse::{SparseMatrix, SparsityPattern};

pub type Dense = DenseMatrix<f64>;
pub type Sparse = SparseMatrix<f64>;
pub type Graph = MultiplexGraph<f64>;
