//! Post-solver pipeline: fuse the global and per-view coefficient matrices
//! into one affinity and read cluster labels off it with normalized-cut
//! spectral clustering.

use ndarray::{Array1, Array2, Axis};
use ndarray_linalg::{Eigh, UPLO};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// Fused symmetric nonnegative affinity. Unlike the k-NN graph type this
/// carries no zero-diagonal constraint: the fusion keeps whatever
/// self-similarity the coefficient matrices produced.
#[derive(Debug, Clone)]
pub struct AffinityMatrix {
    a: Array2<f64>,
}

impl AffinityMatrix {
    pub fn new(a: Array2<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "affinity must be square, got {:?}",
                a.dim()
            )));
        }
        if a.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::InvalidInput(
                "affinity entries must be finite and nonnegative".into(),
            ));
        }
        for i in 0..a.nrows() {
            for j in (i + 1)..a.ncols() {
                if (a[[i, j]] - a[[j, i]]).abs() > 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "affinity must be symmetric, A[{i},{j}] != A[{j},{i}]"
                    )));
                }
            }
        }
        Ok(Self { a })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }
}

/// Labels in `[0, clusters)` for every sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    clusters: usize,
}

impl ClusterAssignment {
    pub fn new(labels: Vec<usize>, clusters: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= clusters) {
            return Err(Error::LabelOutOfRange(format!(
                "label {bad} outside [0, {clusters})"
            )));
        }
        Ok(Self { labels, clusters })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }
}

/// `A = (|Z| + |Z^T|)/2 + (1/n_v) sum_v (|U_v| + |U_v^T|)/2`.
///
/// With no view matrices (the graph-only model variant) only the first
/// term is used.
pub fn fuse_affinity(z: &Array2<f64>, us: &[Array2<f64>]) -> Result<AffinityMatrix> {
    if !z.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "fusion needs square matrices, got {:?}",
            z.dim()
        )));
    }
    let n = z.nrows();
    for (v, u) in us.iter().enumerate() {
        if u.dim() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "view matrix {v} has shape {:?}, expected ({n}, {n})",
                u.dim()
            )));
        }
    }
    let mut a: Array2<f64> = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            a[[i, j]] = 0.5 * (z[[i, j]].abs() + z[[j, i]].abs());
        }
    }
    if !us.is_empty() {
        let weight = 1.0 / us.len() as f64;
        for u in us {
            for i in 0..n {
                for j in 0..n {
                    a[[i, j]] += weight * 0.5 * (u[[i, j]].abs() + u[[j, i]].abs());
                }
            }
        }
    }
    AffinityMatrix::new(a)
}

/// Normalized-cut spectral clustering: symmetric-normalized Laplacian,
/// `c` smallest eigenvectors, row normalization, then k-means with
/// k-means++ seeding and 20 restarts. Deterministic for a fixed seed.
pub fn spectral_cluster(a: &AffinityMatrix, c: usize, seed: u64) -> Result<ClusterAssignment> {
    let n = a.n();
    if c == 0 || c > n {
        return Err(Error::InvalidInput(format!(
            "cluster count must satisfy 0 < c <= n, got c={c}, n={n}"
        )));
    }
    let w = a.matrix();
    let sym = 0.5 * (w + &w.t());
    let deg = sym.sum_axis(Axis(1));
    // zero-degree rows are isolated; their embedding rows stay zero
    let dinv_sqrt: Array1<f64> = deg.mapv(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 });
    let mut lsym = Array2::<f64>::eye(n);
    for i in 0..n {
        for j in 0..n {
            lsym[[i, j]] -= dinv_sqrt[i] * sym[[i, j]] * dinv_sqrt[j];
        }
    }
    let (_, vecs) = lsym
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e}")))?;
    let mut embedding = vecs.slice(ndarray::s![.., ..c]).to_owned();
    for mut row in embedding.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row /= norm;
        }
    }
    kmeans(&embedding, c, seed, 20)
}

/// Lloyd's algorithm with k-means++ seeding; the restart with the lowest
/// within-cluster sum of squares wins. Empty clusters are repaired by
/// reseeding to the point farthest from its centroid.
pub fn kmeans(
    points: &Array2<f64>,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusterAssignment> {
    let n = points.nrows();
    if k == 0 {
        return Err(Error::InvalidInput("k must be positive".into()));
    }
    if k > n {
        return Err(Error::InvalidInput(format!(
            "k={k} exceeds the number of points {n}"
        )));
    }
    if restarts == 0 {
        return Err(Error::InvalidInput("need at least one restart".into()));
    }
    let mut best_labels = vec![0usize; n];
    let mut best_wcss = f64::INFINITY;
    for restart in 0..restarts {
        // derived per-restart stream keeps restarts order-independent
        let mut rng = ChaCha12Rng::seed_from_u64(mix(seed, restart as u64));
        let (labels, wcss) = lloyd(points, k, &mut rng);
        if wcss < best_wcss {
            best_wcss = wcss;
            best_labels = labels;
        }
    }
    ClusterAssignment::new(best_labels, k)
}

fn mix(seed: u64, stream: u64) -> u64 {
    // splitmix64 round over the pair
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn sq_dist(a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

fn lloyd(points: &Array2<f64>, k: usize, rng: &mut ChaCha12Rng) -> (Vec<usize>, f64) {
    let (n, d) = points.dim();
    // k-means++ seeding
    let mut centroids = Array2::zeros((k, d));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&points.row(first));
    let mut d2: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i), centroids.row(0)))
        .collect();
    for j in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(j).assign(&points.row(pick));
        for i in 0..n {
            let nd = sq_dist(points.row(i), centroids.row(j));
            if nd < d2[i] {
                d2[i] = nd;
            }
        }
    }

    let mut labels = vec![0usize; n];
    for _ in 0..300 {
        let mut changed = false;
        for i in 0..n {
            let mut best = f64::INFINITY;
            let mut arg = 0;
            for j in 0..k {
                let dist = sq_dist(points.row(i), centroids.row(j));
                if dist < best {
                    best = dist;
                    arg = j;
                }
            }
            if labels[i] != arg {
                labels[i] = arg;
                changed = true;
            }
        }
        // recompute centroids, repairing empties with the farthest point
        let mut counts = vec![0usize; k];
        let mut sums = Array2::<f64>::zeros((k, d));
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            let mut row = sums.row_mut(l);
            row += &points.row(i);
        }
        for j in 0..k {
            if counts[j] > 0 {
                let mut row = sums.row_mut(j);
                row /= counts[j] as f64;
                centroids.row_mut(j).assign(&sums.row(j));
            } else {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = sq_dist(points.row(a), centroids.row(labels[a]));
                        let db = sq_dist(points.row(b), centroids.row(labels[b]));
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap_or(0);
                centroids.row_mut(j).assign(&points.row(far));
                labels[far] = j;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let wcss: f64 = (0..n)
        .map(|i| sq_dist(points.row(i), centroids.row(labels[i])))
        .sum();
    (labels, wcss)
}
