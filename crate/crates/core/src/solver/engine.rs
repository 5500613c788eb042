//! The ADMM engine: initialization, the eight per-view update steps, the
//! monitored objective, and the outer iteration loop.
//!
//! Update order inside one iteration follows the reference pseudo-code:
//! the view loop is outermost and the globals Z and S are rewritten by
//! every view pass (last view wins within an iteration). The growing
//! penalties advance once per view pass, capped at `mu_max`.
//!
//! The default update formulas are the stationarity solutions of the
//! per-variable subproblems (certified by finite-difference tests); the
//! `printed_updates` switch reproduces the published closed forms, which
//! differ in two weightings, for comparison runs.

use ndarray::{Array1, Array2, ArrayView1};
use ndarray_linalg::{Inverse, JobSvd, SVDDC};

use crate::datasets::{normalize_unit_columns, MultiViewDataset};
use crate::error::{Error, Result};
use crate::graphs::{knn_affinity, laplacian, pairwise_sq_dists, spectral_embedding};
use crate::operators::{firm_svt, firm_threshold, gmc_penalty, project_capped_simplex, svt, FirmParams, GmcScale};
use crate::solver::config::{SolverConfig, Variant};
use crate::solver::state::{residuals, IterationRecord, IterationTrace, SolverState};

/// Steps the coupled decompositions of one dataset. Construction
/// precomputes per-view Gram matrices, pairwise distances and the
/// constant linear-solve inverse; the U-solve inverse is refreshed
/// whenever the penalty pair grows.
pub struct AdmmEngine<'a> {
    data: &'a MultiViewDataset,
    cfg: SolverConfig,
    /// Coupling weight in the Z update; zero for the graph-only variant.
    eta_eff: f64,
    xtx: Vec<Array2<f64>>,
    /// Pairwise squared distances between samples, per view.
    dx: Vec<Array2<f64>>,
    z_inv: Vec<Array2<f64>>,
    u_inv: Vec<Array2<f64>>,
    /// Ridge value the cached U inverses were built for.
    u_inv_ridge: f64,
}

impl<'a> AdmmEngine<'a> {
    pub fn new(data: &'a MultiViewDataset, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let n = data.n_samples();
        let c = data.clusters();
        if c > n {
            return Err(Error::InvalidInput(format!(
                "{c} clusters exceed {n} samples"
            )));
        }
        let k = cfg.knn_k_for(c);
        if k >= n {
            return Err(Error::InvalidInput(format!(
                "knn neighbour count {k} must be below the sample count {n}"
            )));
        }
        let eta_eff = match cfg.variant {
            Variant::MlrrAgr => 0.0,
            _ => cfg.eta,
        };
        let xtx: Vec<Array2<f64>> = data.views().iter().map(|x| x.t().dot(x)).collect();
        let dx: Vec<Array2<f64>> = data
            .views()
            .iter()
            .map(|x| pairwise_sq_dists(x.view()))
            .collect();
        let z_inv = if cfg.variant == Variant::Ml0Lssc {
            Vec::new()
        } else {
            let mut out = Vec::with_capacity(xtx.len());
            for g in &xtx {
                // derived: (mu X^T X + (eta + mu) I)^-1
                // printed: (X^T X + (eta + mu) I)^-1
                let scale = if cfg.printed_updates { 1.0 } else { cfg.mu };
                let mut m = g * scale;
                let ridge = eta_eff + cfg.mu;
                for i in 0..n {
                    m[[i, i]] += ridge;
                }
                out.push(invert(&m)?);
            }
            out
        };
        Ok(Self {
            data,
            cfg,
            eta_eff,
            xtx,
            dx,
            z_inv,
            u_inv: Vec::new(),
            u_inv_ridge: f64::NAN,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn data(&self) -> &MultiViewDataset {
        self.data
    }

    fn n(&self) -> usize {
        self.data.n_samples()
    }

    fn nv(&self) -> usize {
        self.data.n_views()
    }

    /// Graph initialization: Z from a k-NN affinity over the concatenated
    /// unit-normalized views, S = Z, embeddings from the Laplacian of Z,
    /// each U from its update with zeroed splits and multipliers, errors
    /// and multipliers zero.
    pub fn initialize(&mut self) -> Result<SolverState> {
        let n = self.n();
        let c = self.data.clusters();
        let k = self.cfg.knn_k_for(c);

        let total_rows: usize = self.data.views().iter().map(|x| x.nrows()).sum();
        let mut concat = Array2::zeros((total_rows, n));
        let mut row = 0;
        for x in self.data.views() {
            let xn = normalize_unit_columns(x);
            concat
                .slice_mut(ndarray::s![row..row + x.nrows(), ..])
                .assign(&xn);
            row += x.nrows();
        }
        let z = knn_affinity(&concat, k, true)?.into_matrix();
        let s = z.clone();
        let f0 = spectral_embedding(&laplacian(&z)?, c)?;

        let mut state = SolverState {
            z,
            s,
            e: self.data.views().iter().map(|x| Array2::zeros(x.dim())).collect(),
            u: vec![Array2::zeros((n, n)); self.nv()],
            u1: vec![Array2::zeros((n, n)); self.nv()],
            u2: vec![Array2::zeros((n, n)); self.nv()],
            c1: vec![Array2::zeros((n, n)); self.nv()],
            c2: vec![Array2::zeros((n, n)); self.nv()],
            f: vec![f0; self.nv()],
            mu1: self.cfg.mu1,
            mu2: self.cfg.mu2,
            iter: 0,
        };
        for v in 0..self.nv() {
            state.u[v] = self.update_u(&state, v)?;
        }
        Ok(state)
    }

    /// `E_v = svt(X_v - X_v Z, lambda3 / mu)`: the proximal map of the
    /// nuclear norm at the current reconstruction residual.
    pub fn update_e(&self, state: &SolverState, v: usize) -> Result<Array2<f64>> {
        let x = self.data.view(v);
        let residual = x - &x.dot(&state.z);
        svt(&residual, self.cfg.lambda3 / self.cfg.mu)
    }

    /// Stationarity solution of the Z subproblem,
    /// `(mu X^T X + (eta + mu) I)^-1 (mu X^T (X - E) + eta U + mu S)`.
    /// The view-coupling variant replaces this with `Z = U_v`; the printed
    /// form drops the `mu` weight on the Gram matrix.
    pub fn update_z(&self, state: &SolverState, v: usize) -> Result<Array2<f64>> {
        if self.cfg.variant == Variant::Ml0Lssc {
            // with the quadratic penalties dropped only the coupling term
            // survives and the minimizer is the view matrix itself
            return Ok(state.u[v].clone());
        }
        let x = self.data.view(v);
        let e_zero = state.e[v].iter().all(|&t| t == 0.0);
        let xt_res = if e_zero {
            self.xtx[v].clone()
        } else {
            x.t().dot(&(x - &state.e[v]))
        };
        let data_scale = if self.cfg.printed_updates { 1.0 } else { self.cfg.mu };
        let mut rhs = xt_res * data_scale;
        rhs.scaled_add(self.eta_eff, &state.u[v]);
        rhs.scaled_add(self.cfg.mu, &state.s);
        Ok(self.z_inv[v].dot(&rhs))
    }

    /// Row-wise capped-simplex projection of `z_i - g_i / mu` with the
    /// diagonal banned; `g` mixes feature and embedding distances. The
    /// feature part is constant across iterations and comes from the
    /// cache; only the embedding part is recomputed.
    pub fn update_s(&self, state: &SolverState, v: usize) -> Result<Array2<f64>> {
        let n = self.n();
        if state.f[v].nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "embedding has {} rows for {n} samples",
                state.f[v].nrows()
            )));
        }
        let g = if self.cfg.lambda2 > 0.0 {
            let mut g = self.dx[v].clone();
            g.scaled_add(self.cfg.lambda2, &pairwise_sq_dists(state.f[v].t()));
            g
        } else {
            self.dx[v].clone()
        };
        let mut s = Array2::zeros((n, n));
        let inv_mu = 1.0 / self.cfg.mu;
        for i in 0..n {
            let target: Array1<f64> = (0..n)
                .map(|j| state.z[[i, j]] - g[[i, j]] * inv_mu)
                .collect();
            let row = project_capped_simplex(target.view(), i)?;
            s.row_mut(i).assign(&row);
        }
        Ok(s)
    }

    /// Embedding of the `c` smallest Laplacian eigenvectors of S.
    pub fn update_f(&self, state: &SolverState, _v: usize) -> Result<Array2<f64>> {
        spectral_embedding(&laplacian(&state.s)?, self.data.clusters())
    }

    /// Stationarity solution of the U subproblem,
    /// `(X^T X + (eta + mu1 + mu2) I)^-1
    ///  (X^T X + eta Z + mu1 U1 - C1 + mu2 (U2 - diag U2) - C2)`.
    /// The printed form uses ridge `mu1 + mu2 - eta` and subtracts the
    /// coupling attractor wholesale.
    pub fn update_u(&mut self, state: &SolverState, v: usize) -> Result<Array2<f64>> {
        self.refresh_u_inv(state)?;
        let mut rhs = self.xtx[v].clone();
        let mut u2nd = state.u2[v].clone();
        let n = self.n();
        for i in 0..n {
            u2nd[[i, i]] = 0.0;
        }
        if self.cfg.printed_updates {
            rhs.scaled_add(state.mu1, &state.u1[v]);
            rhs.scaled_add(state.mu2, &state.u2[v]);
            rhs.scaled_add(-self.cfg.eta, &state.z);
            rhs -= &state.c1[v];
            rhs -= &state.c2[v];
        } else {
            rhs.scaled_add(self.cfg.eta, &state.z);
            rhs.scaled_add(state.mu1, &state.u1[v]);
            rhs -= &state.c1[v];
            rhs.scaled_add(state.mu2, &u2nd);
            rhs -= &state.c2[v];
        }
        Ok(self.u_inv[v].dot(&rhs))
    }

    fn refresh_u_inv(&mut self, state: &SolverState) -> Result<()> {
        let ridge = if self.cfg.printed_updates {
            state.mu1 + state.mu2 - self.cfg.eta
        } else {
            self.cfg.eta + state.mu1 + state.mu2
        };
        if self.u_inv_ridge == ridge && !self.u_inv.is_empty() {
            return Ok(());
        }
        let n = self.n();
        let mut out = Vec::with_capacity(self.nv());
        for g in &self.xtx {
            let mut m = g.clone();
            for i in 0..n {
                m[[i, i]] += ridge;
            }
            out.push(invert(&m)?);
        }
        self.u_inv = out;
        self.u_inv_ridge = ridge;
        Ok(())
    }

    /// Firm-thresholded SVD of `C1/mu1 + U` with knees
    /// `(lambda1/mu1, lambda1/(gamma mu1))`.
    pub fn update_u1(&self, state: &SolverState, v: usize) -> Result<Array2<f64>> {
        let target = &state.c1[v] / state.mu1 + &state.u[v];
        let p = FirmParams::new(
            self.cfg.lambda1 / state.mu1,
            self.cfg.lambda1 / (self.cfg.gamma * state.mu1),
        )?;
        firm_svt(&target, &p)
    }

    /// Elementwise firm threshold of `C2/mu2 + U`, diagonal zeroed.
    pub fn update_u2(&self, state: &SolverState, v: usize) -> Result<Array2<f64>> {
        let p = FirmParams::new(
            self.cfg.lambda1 / state.mu2,
            self.cfg.lambda1 / (self.cfg.gamma * state.mu2),
        )?;
        let mut out = &state.c2[v] / state.mu2 + &state.u[v];
        out.mapv_inplace(|t| firm_threshold(t, &p));
        let n = self.n();
        for i in 0..n {
            out[[i, i]] = 0.0;
        }
        Ok(out)
    }

    /// Dual ascent for view `v` plus one growth step of both penalties.
    pub fn update_multipliers(&self, state: &mut SolverState, v: usize) {
        let n = self.n();
        let mut r1 = &state.u[v] - &state.u1[v];
        let mut r2 = &state.u[v] - &state.u2[v];
        for i in 0..n {
            r2[[i, i]] -= state.u2[v][[i, i]];
        }
        r1 *= state.mu1;
        state.c1[v] += &r1;
        r2 *= state.mu2;
        state.c2[v] += &r2;
        state.mu1 = (self.cfg.rho1 * state.mu1).min(self.cfg.mu_max);
        state.mu2 = (self.cfg.rho1 * state.mu2).min(self.cfg.mu_max);
    }

    /// Monitored objective. Terms whose update steps are disabled by the
    /// running variant are excluded so per-variant traces stay meaningful.
    pub fn objective(&self, state: &SolverState) -> Result<f64> {
        let graph_terms = self.cfg.variant != Variant::Ml0Lssc;
        let view_terms = self.cfg.variant != Variant::MlrrAgr;
        let mut total = 0.0;
        let ls = if graph_terms {
            Some(laplacian(&state.s)?)
        } else {
            None
        };
        let scale = if self.cfg.lambda1 > 0.0 {
            Some(GmcScale::new((self.cfg.gamma / self.cfg.lambda1).sqrt())?)
        } else {
            None
        };
        for v in 0..self.nv() {
            if graph_terms {
                total += (&self.dx[v] * &state.s).sum();
                total += self.cfg.lambda3 * nuclear_norm(&state.e[v])?;
                let l = ls.as_ref().expect("laplacian computed above");
                let flf = state.f[v].t().dot(l.matrix()).dot(&state.f[v]);
                total += 2.0 * self.cfg.lambda2 * flf.diag().sum();
            }
            if view_terms {
                if let Some(ref sc) = scale {
                    let (_, sv, _) = state.u[v]
                        .svddc(JobSvd::None)
                        .map_err(|e| Error::Numerical(format!("SVD failed: {e}")))?;
                    let phi = gmc_penalty(sv.view(), sc) + gmc_penalty(flat_view(&state.u[v]), sc);
                    total += self.cfg.lambda1 * phi;
                }
                let diff = &state.z - &state.u[v];
                total += self.cfg.eta * diff.iter().map(|x| x * x).sum::<f64>();
            }
        }
        Ok(total)
    }

    /// The outer loop. Runs at most `max_iter` iterations and stops early
    /// once the multiplier-coupling residuals fall below `tol` (the fixed
    /// mu penalties on Z = S and the reconstruction are soft trade-offs
    /// and do not converge to feasibility, so they do not gate
    /// termination). The graph-only variant has no multiplier couplings
    /// and always runs to `max_iter`.
    pub fn run(&mut self) -> Result<(SolverState, IterationTrace)> {
        let mut state = self.initialize()?;
        let mut trace = IterationTrace::default();
        for iter in 1..=self.cfg.max_iter {
            for v in 0..self.nv() {
                match self.cfg.variant {
                    Variant::UmcCev => {
                        state.e[v] = self.update_e(&state, v)?;
                        state.z = self.update_z(&state, v)?;
                        state.s = self.update_s(&state, v)?;
                        state.f[v] = self.update_f(&state, v)?;
                        state.u[v] = self.update_u(&state, v)?;
                        state.u1[v] = self.update_u1(&state, v)?;
                        state.u2[v] = self.update_u2(&state, v)?;
                        self.update_multipliers(&mut state, v);
                    }
                    Variant::Ml0Lssc => {
                        state.z = self.update_z(&state, v)?;
                        state.u[v] = self.update_u(&state, v)?;
                        state.u1[v] = self.update_u1(&state, v)?;
                        state.u2[v] = self.update_u2(&state, v)?;
                        self.update_multipliers(&mut state, v);
                    }
                    Variant::MlrrAgr => {
                        state.e[v] = self.update_e(&state, v)?;
                        state.z = self.update_z(&state, v)?;
                        state.s = self.update_s(&state, v)?;
                        state.f[v] = self.update_f(&state, v)?;
                    }
                }
            }
            state.iter = iter;
            if let Some(variable) = state.first_non_finite() {
                return Err(Error::Diverged { variable, iter });
            }
            let (r_zs, r_u1, r_u2, r_recon) = residuals(&state, self.data);
            let objective = self.objective(&state)?;
            trace.records.push(IterationRecord {
                iter,
                r_zs,
                r_u1,
                r_u2,
                r_recon,
                objective,
            });
            let has_couplings = self.cfg.variant != Variant::MlrrAgr;
            if has_couplings && r_u1.max(r_u2) < self.cfg.tol {
                break;
            }
        }
        Ok((state, trace))
    }

    /// Matrices entering the affinity fusion for the running variant: the
    /// graph-only model contributes no per-view coefficient matrices.
    pub fn fusion_inputs<'s>(&self, state: &'s SolverState) -> (&'s Array2<f64>, &'s [Array2<f64>]) {
        match self.cfg.variant {
            Variant::MlrrAgr => (&state.z, &[]),
            _ => (&state.z, &state.u),
        }
    }
}

fn invert(m: &Array2<f64>) -> Result<Array2<f64>> {
    m.inv()
        .map_err(|e| Error::Numerical(format!("linear solve failed: {e}")))
}

fn nuclear_norm(m: &Array2<f64>) -> Result<f64> {
    if m.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let (_, s, _) = m
        .svddc(JobSvd::None)
        .map_err(|e| Error::Numerical(format!("SVD failed: {e}")))?;
    Ok(s.sum())
}

fn flat_view(m: &Array2<f64>) -> ArrayView1<'_, f64> {
    ArrayView1::from(m.as_slice().expect("state matrices are standard layout"))
}

/// Builds an engine and produces the initial state.
pub fn initialize(data: &MultiViewDataset, cfg: &SolverConfig) -> Result<SolverState> {
    AdmmEngine::new(data, cfg.clone())?.initialize()
}

/// Builds an engine and runs the full iteration.
pub fn run(data: &MultiViewDataset, cfg: &SolverConfig) -> Result<(SolverState, IterationTrace)> {
    AdmmEngine::new(data, cfg.clone())?.run()
}
