//! Shared fixtures for the benchmark targets.

use umcev_core::datasets::{synth_multiview, MultiViewDataset, SynthSpec};

/// Synthetic benchmark dataset: `clusters` subspaces, two views.
pub fn bench_dataset(clusters: usize, per_cluster: usize, seed: u64) -> MultiViewDataset {
    synth_multiview(&SynthSpec {
        clusters,
        samples_per_cluster: per_cluster,
        views: 2,
        ambient_dims: vec![20, 30],
        subspace_dim: 3,
        noise_sigma: 0.01,
        seed,
    })
    .expect("valid benchmark spec")
}
