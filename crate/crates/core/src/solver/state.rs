//! Solver state and the per-iteration residual/objective trace.

use ndarray::Array2;

use crate::datasets::MultiViewDataset;

/// Every ADMM variable. Matrices are `n x n` except the per-view error
/// matrices (`m_v x n`) and embeddings (`n x c`).
#[derive(Debug, Clone)]
pub struct SolverState {
    /// Global self-expressive/similarity matrix.
    pub z: Array2<f64>,
    /// Adaptive graph (row-stochastic, zero diagonal).
    pub s: Array2<f64>,
    /// Per-view error matrices.
    pub e: Vec<Array2<f64>>,
    /// Per-view self-expressive matrices.
    pub u: Vec<Array2<f64>>,
    /// Low-rank split variables.
    pub u1: Vec<Array2<f64>>,
    /// Sparse split variables (zero diagonal).
    pub u2: Vec<Array2<f64>>,
    /// Lagrange multipliers for U = U1.
    pub c1: Vec<Array2<f64>>,
    /// Lagrange multipliers for U = U2 - diag(U2).
    pub c2: Vec<Array2<f64>>,
    /// Per-view cluster-indicator embeddings.
    pub f: Vec<Array2<f64>>,
    /// Current growing penalties.
    pub mu1: f64,
    pub mu2: f64,
    /// Completed outer iterations.
    pub iter: usize,
}

impl SolverState {
    pub fn n_views(&self) -> usize {
        self.u.len()
    }

    /// Name of the first variable containing a non-finite entry, if any.
    pub fn first_non_finite(&self) -> Option<String> {
        let finite = |m: &Array2<f64>| m.iter().all(|x| x.is_finite());
        if !finite(&self.z) {
            return Some("Z".into());
        }
        if !finite(&self.s) {
            return Some("S".into());
        }
        let groups: [(&str, &Vec<Array2<f64>>); 7] = [
            ("E", &self.e),
            ("U", &self.u),
            ("U1", &self.u1),
            ("U2", &self.u2),
            ("C1", &self.c1),
            ("C2", &self.c2),
            ("F", &self.f),
        ];
        for (name, group) in groups {
            for (v, m) in group.iter().enumerate() {
                if !finite(m) {
                    return Some(format!("{name}({v})"));
                }
            }
        }
        None
    }
}

/// Residuals and monitored objective for one completed iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// `||Z - S||_F / max(1, ||Z||_F)`.
    pub r_zs: f64,
    /// `max_v ||U_v - U1_v||_F / max(1, ||U_v||_F)`.
    pub r_u1: f64,
    /// `max_v ||U_v - (U2_v - diag(U2_v))||_F / max(1, ||U_v||_F)`.
    pub r_u2: f64,
    /// `max_v ||X_v - X_v Z - E_v||_F / ||X_v||_F`.
    pub r_recon: f64,
    pub objective: f64,
}

impl IterationRecord {
    /// Largest residual among the multiplier-enforced couplings, the
    /// quantities the stopping rule watches.
    pub fn max_coupling(&self) -> f64 {
        self.r_u1.max(self.r_u2)
    }

    /// Largest of all four recorded residuals.
    pub fn max_residual(&self) -> f64 {
        self.r_zs.max(self.r_u1).max(self.r_u2).max(self.r_recon)
    }
}

/// One record per completed iteration.
#[derive(Debug, Clone, Default)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }
}

fn fro(m: &Array2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// The four residuals of the current state against `data`.
pub fn residuals(state: &SolverState, data: &MultiViewDataset) -> (f64, f64, f64, f64) {
    let diff_zs = &state.z - &state.s;
    let r_zs = fro(&diff_zs) / fro(&state.z).max(1.0);

    let mut r_u1 = 0.0f64;
    let mut r_u2 = 0.0f64;
    let mut r_recon = 0.0f64;
    for v in 0..state.n_views() {
        let denom = fro(&state.u[v]).max(1.0);
        let d1 = &state.u[v] - &state.u1[v];
        r_u1 = r_u1.max(fro(&d1) / denom);
        let mut u2nd = state.u2[v].clone();
        for i in 0..u2nd.nrows() {
            u2nd[[i, i]] = 0.0;
        }
        let d2 = &state.u[v] - &u2nd;
        r_u2 = r_u2.max(fro(&d2) / denom);

        let x = data.view(v);
        let recon = x - &x.dot(&state.z) - &state.e[v];
        let xnorm = fro(x);
        r_recon = r_recon.max(fro(&recon) / if xnorm > 0.0 { xnorm } else { 1.0 });
    }
    (r_zs, r_u1, r_u2, r_recon)
}
