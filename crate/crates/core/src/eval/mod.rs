//! Downstream evaluation, perturbations, dataset statistics and synthetic
//! multiplex graphs.

mod classify;
mod kmeans;
mod metrics;
mod perturb;
mod report;
mod sbm;
mod stats;

pub use classify::{classify_on_graph, ClassifyScores, SplitSpec};
pub use kmeans::{inertia_of, kmeans, kmeans_fit, KMeansFit};
pub use metrics::{clustering_metrics, f1_scores, nmi, ClusterReport};
pub use perturb::{perturb_edges, perturb_features, PerturbMode};
pub use report::{MetricReport, Summary};
pub use sbm::{gen_sbm, SbmSpec};
pub use stats::{graph_stats, homophily, intra_class_fraction, unique_relevant_ratio, GraphStats};

/// Seeds used for every multi-run evaluation.
pub const EVAL_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

/// K-means restarts per clustering run.
pub const KMEANS_RESTARTS: usize = 10;
