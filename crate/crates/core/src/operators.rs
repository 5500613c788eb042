//! Scalar and matrix proximal/penalty operators used by the ADMM updates.
//!
//! The shrinkage family implemented here: plain soft thresholding (the
//! proximal map of the l1 norm / nuclear norm when applied to singular
//! values), the firm threshold (proximal map of a minimax-concave penalty,
//! zero below a lower knee, identity above an upper knee), and the GMC
//! penalty value together with its generalized Huber component, used only
//! for objective monitoring.

use ndarray::{Array1, Array2, ArrayView1};
use ndarray_linalg::{JobSvd, SVDDC};

use crate::error::{Error, Result};

/// Knee pair (lambda, a) of the firm threshold, with `a >= lambda >= 0`.
///
/// When `a == lambda` the middle ramp of the threshold collapses and the
/// operator degenerates to hard thresholding; construction accepts this
/// and the evaluation routes to the hard-threshold branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirmParams {
    lambda: f64,
    a: f64,
}

impl FirmParams {
    pub fn new(lambda: f64, a: f64) -> Result<Self> {
        if !lambda.is_finite() || !a.is_finite() || lambda < 0.0 || a < lambda {
            return Err(Error::InvalidInput(format!(
                "firm threshold requires a >= lambda >= 0, got lambda={lambda}, a={a}"
            )));
        }
        Ok(Self { lambda, a })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// True when the knees coincide and the operator is a hard threshold.
    pub fn is_hard(&self) -> bool {
        self.a == self.lambda
    }
}

/// Scalar instance `B = b * I` of the generalized Huber scale matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmcScale {
    b: f64,
}

impl GmcScale {
    pub fn new(b: f64) -> Result<Self> {
        if !b.is_finite() || b <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "GMC scale must be positive and finite, got {b}"
            )));
        }
        Ok(Self { b })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Convexity condition of the induced subproblem with weight `theta`:
    /// `b^2 <= gamma / theta`. Checked, never enforced.
    pub fn satisfies_convexity(&self, theta: f64, gamma: f64) -> bool {
        theta > 0.0 && self.b * self.b <= gamma / theta
    }
}

/// `sign(x) * max(|x| - tau, 0)`.
pub fn soft_threshold(x: f64, tau: f64) -> f64 {
    debug_assert!(tau >= 0.0);
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Firm threshold: 0 below `lambda`, linear ramp on (lambda, a], identity
/// above `a`. For coinciding knees this is a hard threshold.
pub fn firm_threshold(x: f64, p: &FirmParams) -> f64 {
    let ax = x.abs();
    if ax <= p.lambda {
        0.0
    } else if p.is_hard() || ax > p.a {
        x
    } else {
        p.a * (ax - p.lambda) / (p.a - p.lambda) * x.signum()
    }
}

/// Singular value thresholding: soft-threshold the spectrum of `m` at `tau`.
pub fn svt(m: &Array2<f64>, tau: f64) -> Result<Array2<f64>> {
    apply_to_spectrum(m, |s| soft_threshold(s, tau))
}

/// Firm-threshold the spectrum of `m`.
pub fn firm_svt(m: &Array2<f64>, p: &FirmParams) -> Result<Array2<f64>> {
    apply_to_spectrum(m, |s| firm_threshold(s, p))
}

/// Reconstruct `U f(S) V^T` from the SVD of `m`.
fn apply_to_spectrum(m: &Array2<f64>, f: impl Fn(f64) -> f64) -> Result<Array2<f64>> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical(
            "cannot decompose a matrix with non-finite entries".into(),
        ));
    }
    let (u, s, vt) = m
        .svddc(JobSvd::Some)
        .map_err(|e| Error::Numerical(format!("SVD failed: {e}")))?;
    let u = u.ok_or_else(|| Error::Numerical("SVD returned no left factor".into()))?;
    let vt = vt.ok_or_else(|| Error::Numerical("SVD returned no right factor".into()))?;
    let shrunk = s.mapv(f);
    // u * diag(shrunk) * vt without materializing the diagonal
    let mut scaled = u;
    for (mut col, &sv) in scaled.columns_mut().into_iter().zip(shrunk.iter()) {
        col *= sv;
    }
    Ok(scaled.dot(&vt))
}

/// Generalized Huber value for `B = b * I`: per coordinate,
/// `b^2 t^2 / 2` for `|t| <= 1/b^2` and `|t| - 1/(2 b^2)` beyond.
pub fn generalized_huber(u: ArrayView1<'_, f64>, s: &GmcScale) -> f64 {
    let b2 = s.b * s.b;
    let knee = 1.0 / b2;
    u.iter()
        .map(|&t| {
            let at = t.abs();
            if at <= knee {
                0.5 * b2 * t * t
            } else {
                at - 0.5 * knee
            }
        })
        .sum()
}

/// GMC penalty `||u||_1 - S_B(u)`; nonnegative and at most `||u||_1`.
pub fn gmc_penalty(u: ArrayView1<'_, f64>, s: &GmcScale) -> f64 {
    let l1: f64 = u.iter().map(|t| t.abs()).sum();
    (l1 - generalized_huber(u, s)).max(0.0)
}

/// Euclidean projection onto `{ o >= 0, sum(o) = 1, o[banned] = 0 }`.
///
/// Sort-then-shift over the non-banned coordinates; exact for this QP.
pub fn project_capped_simplex(v: ArrayView1<'_, f64>, banned: usize) -> Result<Array1<f64>> {
    let n = v.len();
    if n < 2 {
        return Err(Error::InvalidInput(
            "capped-simplex projection needs at least 2 coordinates".into(),
        ));
    }
    if banned >= n {
        return Err(Error::InvalidInput(format!(
            "banned index {banned} out of range for length {n}"
        )));
    }
    let mut free: Vec<f64> = v
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != banned)
        .map(|(_, &x)| x)
        .collect();
    free.sort_by(|a, b| b.partial_cmp(a).expect("non-finite input to projection"));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in free.iter().enumerate() {
        cumsum += uj;
        let cand = (1.0 - cumsum) / (j + 1) as f64;
        if uj + cand > 0.0 {
            theta = cand;
        } else {
            break;
        }
    }
    let mut out = Array1::zeros(n);
    for (j, &x) in v.iter().enumerate() {
        if j != banned {
            out[j] = (x + theta).max(0.0);
        }
    }
    Ok(out)
}
