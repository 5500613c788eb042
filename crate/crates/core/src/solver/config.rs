//! Solver configuration: trade-off weights, penalty schedule, and the
//! model-variant selector.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Which of the three coupled models the engine runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// The full unified model: both decompositions plus adaptive graph.
    UmcCev,
    /// Per-view sparse/low-rank decomposition only; the global matrix is
    /// driven purely by the view coupling (no error/graph/embedding steps).
    Ml0Lssc,
    /// Adaptive-graph low-rank model only; no per-view coefficient
    /// matrices, no multiplier couplings.
    MlrrAgr,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Variant::UmcCev => "umc-cev",
            Variant::Ml0Lssc => "ml0-lssc",
            Variant::MlrrAgr => "mlrr-agr",
        };
        f.write_str(s)
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "umc-cev" => Ok(Variant::UmcCev),
            "ml0-lssc" => Ok(Variant::Ml0Lssc),
            "mlrr-agr" => Ok(Variant::MlrrAgr),
            other => Err(Error::InvalidInput(format!(
                "unknown variant {other:?} (expected umc-cev, ml0-lssc or mlrr-agr)"
            ))),
        }
    }
}

/// All solver parameters. `Default` carries the published settings:
/// trade-offs lambda1 = 2e-5, lambda2 = 2e-1, lambda3 = 2, and the
/// penalty schedule mu = 0.01, mu1 = 1, mu2 = 0.1, rho1 = 1.2 capped at
/// 1e6.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Weight of the low-rank + sparse penalty on each view matrix.
    pub lambda1: f64,
    /// Weight of the embedding/graph discrimination term.
    pub lambda2: f64,
    /// Weight of the nuclear norm on the per-view error matrices.
    pub lambda3: f64,
    /// Coupling weight between the global matrix and each view matrix.
    pub eta: f64,
    /// Fixed quadratic penalty for the reconstruction and Z = S couplings.
    pub mu: f64,
    /// Initial penalty for the U = U1 coupling.
    pub mu1: f64,
    /// Initial penalty for the U = U2 coupling.
    pub mu2: f64,
    /// Multiplicative penalty growth per view pass; must exceed 1.
    pub rho1: f64,
    /// Cap for the growing penalties.
    pub mu_max: f64,
    /// Firm-threshold shape in (0, 1]; 1 degenerates to hard thresholding.
    pub gamma: f64,
    pub max_iter: usize,
    /// Convergence threshold on the multiplier-coupling residuals.
    pub tol: f64,
    pub variant: Variant,
    /// Neighbour count for graph initialization; `None` selects
    /// `max(5, clusters + 1)`.
    pub knn_k: Option<usize>,
    /// Seed forwarded to the seeded stages of the pipeline. The ADMM
    /// iteration itself is deterministic and does not consume it.
    pub seed: u64,
    /// Reproduce the published update formulas verbatim instead of the
    /// re-derived stationarity solutions (comparison runs only).
    pub printed_updates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda1: 2e-5,
            lambda2: 2e-1,
            lambda3: 2.0,
            eta: 1.0,
            mu: 0.01,
            mu1: 1.0,
            mu2: 0.1,
            rho1: 1.2,
            mu_max: 1e6,
            gamma: 0.6,
            max_iter: 100,
            tol: 1e-6,
            variant: Variant::UmcCev,
            knn_k: None,
            seed: 0,
            printed_updates: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eta", self.eta),
            ("mu", self.mu),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("mu_max", self.mu_max),
            ("tol", self.tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        let nonneg = [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{name} must be nonnegative and finite, got {v}"
                )));
            }
        }
        if !(self.rho1 > 1.0) || !self.rho1.is_finite() {
            return Err(Error::InvalidInput(format!(
                "rho1 must exceed 1, got {}",
                self.rho1
            )));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "gamma must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        if self.knn_k == Some(0) {
            return Err(Error::InvalidInput("knn_k must be positive".into()));
        }
        Ok(())
    }

    /// Neighbour count used at initialization for `clusters` clusters.
    pub fn knn_k_for(&self, clusters: usize) -> usize {
        self.knn_k.unwrap_or_else(|| 5.max(clusters + 1))
    }
}
