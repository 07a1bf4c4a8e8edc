//! Active learning for GCN node classification.
//!
//! The selection method propagates node features K steps through the
//! symmetric normalized adjacency and spends the label budget on K-Medoids
//! centers of the propagated features, so informative nodes can be chosen
//! before any model has been trained. The crate also ships the standard
//! baselines (random, degree, max-entropy uncertainty, greedy K-Center over
//! learned representations), a from-scratch GCN/SGC trainer with analytic
//! gradients, and a benchmark harness that sweeps label budgets over
//! multiple seeds and reports Macro-F1 / Micro-F1 / accuracy.
//!
//! Modules:
//! - [`graph`]: datasets, CSR graphs, the normalized adjacency `S`
//! - [`propagation`]: `S^K X` and distances over it
//! - [`clustering`]: K-Means, approximate K-Medoids, greedy K-Center
//! - [`gcn`]: 2-layer GCN / SGC training and classification metrics
//! - [`strategies`]: the selection strategies behind the benchmark
//! - [`harness`]: experiment sweep, aggregation, CSV/plot output

pub mod clustering;
pub mod gcn;
pub mod graph;
pub mod harness;
pub mod propagation;
pub mod strategies;

pub use graph::{
    generate_sbm, load_dataset, normalized_adjacency, save_dataset_json, spmm, Dataset,
    DatasetFormat, FeatureMatrix, Graph, LabelVector, LoadOptions, NodeId, NodeSet,
    NormalizedAdjacency, SbmConfig,
};
pub use propagation::{min_distances_to_set, pair_distance, propagate, PropagatedFeatures};
