//! Graph construction and graph-side quantities: k-NN affinity
//! initialization, Laplacian assembly, per-row weight matrices, and the
//! spectral embedding used for the cluster-indicator matrices.

use ndarray::{Array2, ArrayView2, Axis};
use ndarray_linalg::{Eigh, UPLO};

use crate::error::{Error, Result};

/// Nonnegative affinity matrix with zero diagonal.
#[derive(Debug, Clone)]
pub struct AffinityGraph {
    w: Array2<f64>,
    symmetric: bool,
}

impl AffinityGraph {
    /// Validates nonnegativity, zero diagonal, and (when flagged) symmetry.
    pub fn new(w: Array2<f64>, symmetric: bool) -> Result<Self> {
        if !w.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "affinity matrix must be square, got {:?}",
                w.dim()
            )));
        }
        if w.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::InvalidInput(
                "affinity entries must be finite and nonnegative".into(),
            ));
        }
        if w.diag().iter().any(|&x| x != 0.0) {
            return Err(Error::InvalidInput("affinity diagonal must be zero".into()));
        }
        if symmetric {
            for i in 0..w.nrows() {
                for j in (i + 1)..w.ncols() {
                    if (w[[i, j]] - w[[j, i]]).abs() > 1e-12 {
                        return Err(Error::InvalidInput(format!(
                            "affinity marked symmetric but W[{i},{j}] != W[{j},{i}]"
                        )));
                    }
                }
            }
        }
        Ok(Self { w, symmetric })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.w
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.w
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }
}

/// Symmetric positive semidefinite graph Laplacian `D - (S + S^T)/2`.
#[derive(Debug, Clone)]
pub struct GraphLaplacian {
    l: Array2<f64>,
}

impl GraphLaplacian {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.l
    }

    pub fn n(&self) -> usize {
        self.l.nrows()
    }
}

/// Exact squared Euclidean distances between columns of `x`, by direct
/// double loop (no Gram shortcut, so the result is permutation-stable to
/// the last bit and never goes negative).
pub fn pairwise_sq_dists(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = x.ncols();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        let xi = x.column(i);
        for j in (i + 1)..n {
            let xj = x.column(j);
            let mut acc = 0.0;
            for (a, b) in xi.iter().zip(xj.iter()) {
                let diff = a - b;
                acc += diff * diff;
            }
            d[[i, j]] = acc;
            d[[j, i]] = acc;
        }
    }
    d
}

/// Gaussian k-nearest-neighbour affinity over the columns of `x`.
///
/// Weights use the median selected-neighbour distance as bandwidth. The
/// result is row-stochastic with zero diagonal and a symmetric sparsity
/// pattern (weights are averaged with their transposes before the final
/// row normalization), which is what the solver initialization needs:
/// `Z >= 0`, `diag(Z) = 0`, rows summing to one.
pub fn knn_affinity(x: &Array2<f64>, k: usize, self_exclude: bool) -> Result<AffinityGraph> {
    let n = x.ncols();
    if k == 0 || k >= n {
        return Err(Error::InvalidInput(format!(
            "knn_affinity requires 0 < k < n, got k={k}, n={n}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("feature matrix must be finite".into()));
    }

    let d2 = pairwise_sq_dists(x.view());
    // neighbour lists, ties broken by index for determinism
    let mut neighbors: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut selected = Vec::new();
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| !(self_exclude && j == i)).collect();
        order.sort_by(|&a, &b| {
            d2[[i, a]]
                .partial_cmp(&d2[[i, b]])
                .unwrap()
                .then(a.cmp(&b))
        });
        let picked: Vec<usize> = order.into_iter().take(k).collect();
        for &j in &picked {
            selected.push(d2[[i, j]].sqrt());
        }
        neighbors.push(picked);
    }
    selected.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = selected.len() / 2;
    let median = if selected.len() % 2 == 1 {
        selected[mid]
    } else {
        0.5 * (selected[mid - 1] + selected[mid])
    };
    let sigma = if median > 0.0 { median } else { 1e-12 };

    let mut w = Array2::zeros((n, n));
    for (i, picked) in neighbors.iter().enumerate() {
        for &j in picked {
            if j != i {
                w[[i, j]] = (-d2[[i, j]] / (2.0 * sigma * sigma)).exp();
            }
        }
    }
    normalize_rows(&mut w, &neighbors);
    w = 0.5 * (&w + &w.t());
    let union: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| w[[i, j]] > 0.0).collect())
        .collect();
    normalize_rows(&mut w, &union);
    AffinityGraph::new(w, false)
}

/// Rows with no positive mass fall back to uniform weight over `support`.
fn normalize_rows(w: &mut Array2<f64>, support: &[Vec<usize>]) {
    for (i, mut row) in w.rows_mut().into_iter().enumerate() {
        let sum: f64 = row.sum();
        if sum > 0.0 {
            row /= sum;
        } else if !support[i].is_empty() {
            let u = 1.0 / support[i].len() as f64;
            for &j in &support[i] {
                row[j] = u;
            }
        }
    }
}

/// `L = D - (S + S^T)/2` with `D_ii = sum_j (s_ij + s_ji)/2`.
pub fn laplacian(s: &Array2<f64>) -> Result<GraphLaplacian> {
    if !s.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "laplacian input must be square, got {:?}",
            s.dim()
        )));
    }
    if s.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::InvalidInput(
            "laplacian input must be finite and nonnegative".into(),
        ));
    }
    let sym = 0.5 * (s + &s.t());
    let deg = sym.sum_axis(Axis(1));
    let mut l = -sym;
    for (i, d) in deg.iter().enumerate() {
        l[[i, i]] += d;
    }
    Ok(GraphLaplacian { l })
}

/// Row-weight matrix `g_ij = ||x_i - x_j||^2 + lambda2 ||f_i - f_j||^2`
/// where samples are columns of `xv` and rows of `fv`.
pub fn row_weights(
    xv: ArrayView2<'_, f64>,
    fv: ArrayView2<'_, f64>,
    lambda2: f64,
) -> Result<Array2<f64>> {
    if xv.ncols() != fv.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "view has {} samples but embedding has {} rows",
            xv.ncols(),
            fv.nrows()
        )));
    }
    if lambda2 < 0.0 {
        return Err(Error::InvalidInput("lambda2 must be nonnegative".into()));
    }
    let mut g = pairwise_sq_dists(xv);
    if lambda2 > 0.0 {
        let df = pairwise_sq_dists(fv.t());
        g.scaled_add(lambda2, &df);
    }
    Ok(g)
}

/// Eigenvectors of the `c` smallest eigenvalues of a symmetric Laplacian,
/// as columns of an orthonormal `n x c` matrix.
pub fn spectral_embedding(l: &GraphLaplacian, c: usize) -> Result<Array2<f64>> {
    let n = l.n();
    if c == 0 || c > n {
        return Err(Error::InvalidInput(format!(
            "embedding dimension must satisfy 0 < c <= n, got c={c}, n={n}"
        )));
    }
    let (_, vecs) = l
        .l
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e}")))?;
    // eigh returns eigenvalues ascending; keep the first c eigenvectors
    Ok(vecs.slice(ndarray::s![.., ..c]).to_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{arr2, Array1, Array2};
    use ndarray_linalg::{Eigh, UPLO};
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn random_matrix(rng: &mut ChaCha12Rng, r: usize, c: usize) -> Array2<f64> {
        Array2::from_shape_fn((r, c), |_| rng.random_range(-1.0..1.0))
    }

    /// Gram-Schmidt columns of a random matrix.
    fn random_orthonormal(rng: &mut ChaCha12Rng, n: usize, c: usize) -> Array2<f64> {
        let mut q = random_matrix(rng, n, c);
        for j in 0..c {
            for i in 0..j {
                let prev = q.column(i).to_owned();
                let proj = q.column(j).dot(&prev);
                let mut col = q.column_mut(j);
                col.scaled_add(-proj, &prev);
            }
            let norm = q.column(j).dot(&q.column(j)).sqrt();
            let mut col = q.column_mut(j);
            col /= norm;
        }
        q
    }

    #[test]
    fn knn_equidistant_triangle() {
        // all mutual distances 1: uniform rows of 0.5, symmetrization keeps
        // them, rows sum to one
        let x = arr2(&[[0.0, 1.0, 0.5], [0.0, 0.0, 0.75f64.sqrt()]]);
        let g = knn_affinity(&x, 2, true).unwrap();
        let w = g.matrix();
        for i in 0..3 {
            assert_eq!(w[[i, i]], 0.0);
            assert_abs_diff_eq!(w.row(i).sum(), 1.0, epsilon = 1e-12);
            for j in 0..3 {
                if i != j {
                    assert_abs_diff_eq!(w[[i, j]], 0.5, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn knn_separated_pairs_block_diagonal() {
        let x = arr2(&[[0.0, 0.1, 100.0, 100.1]]);
        let g = knn_affinity(&x, 1, true).unwrap();
        let w = g.matrix();
        assert!(w[[0, 1]] > 0.0 && w[[1, 0]] > 0.0);
        assert!(w[[2, 3]] > 0.0 && w[[3, 2]] > 0.0);
        assert_eq!(w[[0, 2]], 0.0);
        assert_eq!(w[[0, 3]], 0.0);
        assert_eq!(w[[1, 2]], 0.0);
    }

    #[test]
    fn knn_row_sums_and_sparsity() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let x = random_matrix(&mut rng, 4, 10);
        let k = 3;
        let g = knn_affinity(&x, k, true).unwrap();
        let w = g.matrix();
        // brute-force neighbour lists as oracle
        let d2 = pairwise_sq_dists(x.view());
        for i in 0..10 {
            assert_abs_diff_eq!(w.row(i).sum(), 1.0, epsilon = 1e-12);
            let nnz = w.row(i).iter().filter(|&&v| v > 0.0).count();
            assert!(nnz <= 2 * k, "row {i} has {nnz} nonzeros");
            // every nonzero entry is a k-NN edge of i or of j
            let mut order: Vec<usize> = (0..10).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| d2[[i, a]].partial_cmp(&d2[[i, b]]).unwrap());
            let nbrs: Vec<usize> = order[..k].to_vec();
            for j in 0..10 {
                if w[[i, j]] > 0.0 && !nbrs.contains(&j) {
                    let mut jorder: Vec<usize> = (0..10).filter(|&l| l != j).collect();
                    jorder.sort_by(|&a, &b| d2[[j, a]].partial_cmp(&d2[[j, b]]).unwrap());
                    assert!(jorder[..k].contains(&i), "edge ({i},{j}) is not a k-NN edge");
                }
            }
        }
    }

    #[test]
    fn knn_invalid_k() {
        let x = arr2(&[[0.0, 1.0, 2.0]]);
        assert!(knn_affinity(&x, 0, true).is_err());
        assert!(knn_affinity(&x, 3, true).is_err());
    }

    #[test]
    fn knn_self_inclusion_consumes_a_slot() {
        // with self_exclude=false the zero-distance self edge takes one of
        // the k slots and is then zeroed, leaving k-1 real neighbours
        let x = arr2(&[[0.0, 1.0, 2.5, 4.5]]);
        let w = knn_affinity(&x, 2, false).unwrap().into_matrix();
        for i in 0..4 {
            assert_eq!(w[[i, i]], 0.0);
            assert_abs_diff_eq!(w.row(i).sum(), 1.0, epsilon = 1e-12);
        }
        // sample 0 keeps only its single nearest neighbour before
        // symmetrization, so strictly fewer edges than the k=2 variant
        let w_excl = knn_affinity(&x, 2, true).unwrap().into_matrix();
        let nnz = w.iter().filter(|&&v| v > 0.0).count();
        let nnz_excl = w_excl.iter().filter(|&&v| v > 0.0).count();
        assert!(nnz < nnz_excl);
    }

    #[test]
    fn knn_permutation_invariance() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let x = random_matrix(&mut rng, 3, 8);
        let perm = [3usize, 7, 0, 4, 1, 6, 2, 5];
        let mut xp = Array2::zeros((3, 8));
        for (new, &old) in perm.iter().enumerate() {
            xp.column_mut(new).assign(&x.column(old));
        }
        let w = knn_affinity(&x, 3, true).unwrap().into_matrix();
        let wp = knn_affinity(&xp, 3, true).unwrap().into_matrix();
        for a in 0..8 {
            for b in 0..8 {
                assert_abs_diff_eq!(wp[[a, b]], w[[perm[a], perm[b]]], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn laplacian_trivial_cases() {
        let z = Array2::<f64>::zeros((3, 3));
        let l = laplacian(&z).unwrap();
        assert!(l.matrix().iter().all(|&x| x == 0.0));

        let s = arr2(&[[0.0, 1.0], [1.0, 0.0]]);
        let l = laplacian(&s).unwrap();
        let expect = arr2(&[[1.0, -1.0], [-1.0, 1.0]]);
        for (a, b) in l.matrix().iter().zip(expect.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn laplacian_rejects_negative() {
        let s = arr2(&[[0.0, -1.0], [1.0, 0.0]]);
        assert!(laplacian(&s).is_err());
    }

    #[test]
    fn laplacian_psd_and_zero_row_sums() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let s = Array2::from_shape_fn((6, 6), |_| rng.random_range(0.0..1.0));
        let l = laplacian(&s).unwrap();
        for i in 0..6 {
            assert_abs_diff_eq!(l.matrix().row(i).sum(), 0.0, epsilon = 1e-10);
        }
        let (vals, _) = l.matrix().eigh(UPLO::Lower).unwrap();
        assert!(vals.iter().all(|&v| v >= -1e-10));
    }

    #[test]
    fn row_weights_trivial() {
        // identical columns and lambda2 = 0 give the zero matrix
        let x = arr2(&[[1.0, 1.0], [2.0, 2.0]]);
        let f = Array2::<f64>::zeros((2, 1));
        let g = row_weights(x.view(), f.view(), 0.0).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));

        let x = arr2(&[[0.0, 1.0]]);
        let g = row_weights(x.view(), f.view(), 0.3).unwrap();
        let expect = arr2(&[[0.0, 1.0], [1.0, 0.0]]);
        for (a, b) in g.iter().zip(expect.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn row_weights_matches_double_loop() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let x = random_matrix(&mut rng, 3, 5);
        let f = random_orthonormal(&mut rng, 5, 2);
        let lambda2 = 0.2;
        let g = row_weights(x.view(), f.view(), lambda2).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let dx: f64 = (0..3).map(|r| (x[[r, i]] - x[[r, j]]).powi(2)).sum();
                let df: f64 = (0..2).map(|r| (f[[i, r]] - f[[j, r]]).powi(2)).sum();
                assert_abs_diff_eq!(g[[i, j]], dx + lambda2 * df, epsilon = 1e-12);
            }
        }
        assert!(g.diag().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn row_weights_dimension_mismatch() {
        let x = arr2(&[[0.0, 1.0]]);
        let f = Array2::<f64>::zeros((3, 1));
        assert!(row_weights(x.view(), f.view(), 0.0).is_err());
    }

    #[test]
    fn embedding_zero_objective_on_components() {
        // two disconnected edges: two zero eigenvalues
        let s = arr2(&[
            [0.0, 1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
        ]);
        let l = laplacian(&s).unwrap();
        let f = spectral_embedding(&l, 2).unwrap();
        let obj = f.t().dot(l.matrix()).dot(&f).diag().sum();
        assert_abs_diff_eq!(obj, 0.0, epsilon = 1e-8);
        let gram = f.t().dot(&f);
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(gram[[i, j]], expect, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn embedding_objective_equals_smallest_eigenvalue_sum() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let s = Array2::from_shape_fn((8, 8), |_| rng.random_range(0.0..1.0));
        let l = laplacian(&s).unwrap();
        let f = spectral_embedding(&l, 3).unwrap();
        let obj = f.t().dot(l.matrix()).dot(&f).diag().sum();
        let (vals, _) = l.matrix().eigh(UPLO::Lower).unwrap();
        let expect: f64 = vals.iter().take(3).sum();
        assert_abs_diff_eq!(obj, expect, epsilon = 1e-8);
    }

    #[test]
    fn embedding_minimizes_over_random_orthonormal() {
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        let s = Array2::from_shape_fn((7, 7), |_| rng.random_range(0.0..1.0));
        let l = laplacian(&s).unwrap();
        let f = spectral_embedding(&l, 2).unwrap();
        let best = f.t().dot(l.matrix()).dot(&f).diag().sum();
        for _ in 0..100 {
            let q = random_orthonormal(&mut rng, 7, 2);
            let obj = q.t().dot(l.matrix()).dot(&q).diag().sum();
            assert!(best <= obj + 1e-10);
        }
    }

    #[test]
    fn trace_identity_for_laplacian() {
        // tr(F^T L F) = 1/2 sum_ij w_ij ||f_i - f_j||^2 with w the
        // symmetrized affinity
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let s = Array2::from_shape_fn((6, 6), |_| rng.random_range(0.0..1.0));
        let f = random_orthonormal(&mut rng, 6, 3);
        let l = laplacian(&s).unwrap();
        let lhs = f.t().dot(l.matrix()).dot(&f).diag().sum();
        let w = 0.5 * (&s + &s.t());
        let mut rhs = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                let d: f64 = (0..3).map(|r| (f[[i, r]] - f[[j, r]]).powi(2)).sum();
                rhs += 0.5 * w[[i, j]] * d;
            }
        }
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-8);
    }

    #[test]
    fn embedding_rejects_bad_c() {
        let l = laplacian(&Array2::<f64>::zeros((3, 3))).unwrap();
        assert!(spectral_embedding(&l, 0).is_err());
        assert!(spectral_embedding(&l, 4).is_err());
        let f = spectral_embedding(&l, 2).unwrap();
        let gram = f.t().dot(&f);
        assert_abs_diff_eq!(gram[[0, 0]], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(gram[[0, 1]], 0.0, epsilon = 1e-8);
    }

    #[test]
    fn affinity_graph_validation() {
        let ok = arr2(&[[0.0, 1.0], [1.0, 0.0]]);
        assert!(AffinityGraph::new(ok.clone(), true).is_ok());
        let asym = arr2(&[[0.0, 1.0], [0.5, 0.0]]);
        assert!(AffinityGraph::new(asym.clone(), true).is_err());
        assert!(AffinityGraph::new(asym, false).is_ok());
        let neg = arr2(&[[0.0, -1.0], [1.0, 0.0]]);
        assert!(AffinityGraph::new(neg, false).is_err());
        let diag = arr2(&[[0.5, 1.0], [1.0, 0.0]]);
        assert!(AffinityGraph::new(diag, false).is_err());
        let _ = Array1::<f64>::zeros(1);
    }
}
