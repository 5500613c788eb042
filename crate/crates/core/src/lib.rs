//! Unsupervised multi-view subspace clustering built on two coupled
//! sparse self-expressive decompositions with nonconvex low-rank/sparse
//! penalties and adaptive graph regularization, solved by ADMM, plus the
//! downstream spectral clustering and a full evaluation-metrics suite.
//!
//! The pipeline: load or synthesize a [`datasets::MultiViewDataset`],
//! run [`solver::run`] with a [`solver::SolverConfig`], fuse the learned
//! coefficient matrices with [`clustering::fuse_affinity`], read labels
//! off the fused affinity with [`clustering::spectral_cluster`], and
//! score them with [`metrics::MetricSet`].

pub mod clustering;
pub mod datasets;
pub mod error;
pub mod graphs;
pub mod metrics;
pub mod operators;
pub mod solver;

pub use clustering::{fuse_affinity, spectral_cluster, AffinityMatrix, ClusterAssignment};
pub use datasets::{load_manifest, synth_multiview, MultiViewDataset, SynthSpec};
pub use error::{Error, Result};
pub use graphs::AffinityGraph;
pub use metrics::MetricSet;
pub use solver::{AdmmEngine, IterationTrace, SolverConfig, SolverState, Variant};
