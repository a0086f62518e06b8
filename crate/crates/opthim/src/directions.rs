//! Search-direction strategies for the line-search family: steepest descent,
//! Newton with identity damping, BFGS, DFP, and limited-memory BFGS.

use crate::linalg::{cholesky, cholesky_solve};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DirectionError {
    #[error("Hessian could not be made positive definite (damping exceeded {cap:e})")]
    SingularHessian { cap: f64 },
}

/// p = −g.
pub fn steepest_descent(g: &ArrayView1<f64>) -> Array1<f64> {
    -g.to_owned()
}

/// Adds multiples of the identity until the matrix admits a Cholesky
/// factorization: tau = 0 if `a` already factors, otherwise tau starts at
/// 1e-3·(1 + max|a_ii|) and doubles per failure. Errors once tau passes
/// 1e10·(1 + max|a_ii|).
pub fn damp_to_spd(a: &ArrayView2<f64>) -> Result<(Array2<f64>, f64), DirectionError> {
    let (_, tau) = damped_cholesky(a)?;
    let mut damped = a.to_owned();
    for i in 0..a.nrows() {
        damped[[i, i]] += tau;
    }
    Ok((damped, tau))
}

fn damped_cholesky(a: &ArrayView2<f64>) -> Result<(Array2<f64>, f64), DirectionError> {
    if let Some(l) = cholesky(a) {
        return Ok((l, 0.0));
    }
    let n = a.nrows();
    let dmax = 1.0 + (0..n).map(|i| a[[i, i]].abs()).fold(0.0, f64::max);
    let cap = 1e10 * dmax;
    let mut tau = 1e-3 * dmax;
    loop {
        if tau > cap {
            return Err(DirectionError::SingularHessian { cap });
        }
        let mut damped = a.to_owned();
        for i in 0..n {
            damped[[i, i]] += tau;
        }
        if let Some(l) = cholesky(&damped.view()) {
            return Ok((l, tau));
        }
        tau *= 2.0;
    }
}

/// Solves (hess + tau·I) p = −g with tau from the damping schedule.
pub fn newton_direction(
    hess: &ArrayView2<f64>,
    g: &ArrayView1<f64>,
) -> Result<Array1<f64>, DirectionError> {
    let (l, _tau) = damped_cholesky(hess)?;
    let rhs = -g.to_owned();
    Ok(cholesky_solve(&l.view(), &rhs.view()))
}

/// Skip guard: true when |yᵀs| ≤ eps_sy·‖y‖·‖s‖, i.e. the pair is too
/// degenerate to apply safely.
pub fn curvature_skip(s: &ArrayView1<f64>, y: &ArrayView1<f64>, eps_sy: f64) -> bool {
    let ys = y.dot(s);
    ys.abs() <= eps_sy * norm(y) * norm(s)
}

#[inline]
fn norm(v: &ArrayView1<f64>) -> f64 {
    v.dot(v).sqrt()
}

/// Inverse-Hessian BFGS update,
/// H⁺ = (I − syᵀ/yᵀs) H (I − ysᵀ/yᵀs) + ssᵀ/yᵀs,
/// evaluated in rank-two form so the result is entrywise symmetric.
/// Caller guarantees the skip guard was checked.
pub fn bfgs_update(h: &ArrayView2<f64>, s: &ArrayView1<f64>, y: &ArrayView1<f64>) -> Array2<f64> {
    let n = h.nrows();
    let rho = 1.0 / y.dot(s);
    let hy = h.dot(y);
    let coef = rho * rho * y.dot(&hy) + rho;
    let mut out = h.to_owned();
    for i in 0..n {
        for j in 0..n {
            out[[i, j]] += coef * s[i] * s[j] - rho * (s[i] * hy[j] + hy[i] * s[j]);
        }
    }
    out
}

/// Inverse-Hessian DFP update, H⁺ = H + ssᵀ/sᵀy − Hyyᵀ H/(yᵀHy).
pub fn dfp_update(h: &ArrayView2<f64>, s: &ArrayView1<f64>, y: &ArrayView1<f64>) -> Array2<f64> {
    let n = h.nrows();
    let inv_sy = 1.0 / s.dot(y);
    let hy = h.dot(y);
    let yhy = y.dot(&hy);
    debug_assert!(yhy > 0.0, "DFP needs positive curvature through H");
    let mut out = h.to_owned();
    for i in 0..n {
        for j in 0..n {
            out[[i, j]] += inv_sy * s[i] * s[j] - hy[i] * hy[j] / yhy;
        }
    }
    out
}

/// Dense inverse-Hessian approximation with the update skip guard.
#[derive(Debug, Clone)]
pub struct InverseHessianState {
    h: Array2<f64>,
    pub eps_sy: f64,
    pub skipped_updates: u64,
}

impl InverseHessianState {
    pub fn new(n: usize) -> Self {
        Self {
            h: Array2::eye(n),
            eps_sy: 1e-6,
            skipped_updates: 0,
        }
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.h
    }

    /// p = −H g.
    pub fn direction(&self, g: &ArrayView1<f64>) -> Array1<f64> {
        -self.h.dot(g)
    }

    /// Applies the BFGS update unless the pair is guarded; requires positive
    /// curvature (yᵀs > 0) so H stays positive definite. Returns whether the
    /// update was applied.
    pub fn update_bfgs(&mut self, s: &ArrayView1<f64>, y: &ArrayView1<f64>) -> bool {
        if self.guarded(s, y) {
            return false;
        }
        self.h = bfgs_update(&self.h.view(), s, y);
        true
    }

    /// DFP counterpart of [`Self::update_bfgs`].
    pub fn update_dfp(&mut self, s: &ArrayView1<f64>, y: &ArrayView1<f64>) -> bool {
        if self.guarded(s, y) {
            return false;
        }
        self.h = dfp_update(&self.h.view(), s, y);
        true
    }

    fn guarded(&mut self, s: &ArrayView1<f64>, y: &ArrayView1<f64>) -> bool {
        if y.dot(s) <= self.eps_sy * norm(y) * norm(s) {
            self.skipped_updates += 1;
            return true;
        }
        false
    }
}

/// Initial-matrix scaling for the limited-memory two-loop recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    /// H₀ = γI with γ = sᵀy/yᵀy from the most recent pair.
    #[default]
    Gamma,
    /// H₀ = I.
    Identity,
}

#[derive(Debug, Clone)]
struct LbfgsPair {
    s: Array1<f64>,
    y: Array1<f64>,
    rho: f64,
}

/// Ring buffer of the m most recent (s, y) pairs.
#[derive(Debug, Clone)]
pub struct LbfgsMemory {
    m: usize,
    pairs: VecDeque<LbfgsPair>,
    pub eps_sy: f64,
    pub skipped_updates: u64,
    pub scaling: Scaling,
}

impl LbfgsMemory {
    pub fn new(m: usize, scaling: Scaling) -> Self {
        assert!(m >= 1, "memory capacity must be positive");
        Self {
            m,
            pairs: VecDeque::with_capacity(m + 1),
            eps_sy: 1e-6,
            skipped_updates: 0,
            scaling,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Appends a pair unless it is guarded; evicts the oldest pair past capacity.
/// Requires positive curvature for the same reason as the dense updates.
pub fn lbfgs_push(mem: &mut LbfgsMemory, s: Array1<f64>, y: Array1<f64>) {
    let ys = y.dot(&s);
    if ys <= mem.eps_sy * norm(&y.view()) * norm(&s.view()) {
        mem.skipped_updates += 1;
        return;
    }
    mem.pairs.push_back(LbfgsPair {
        s,
        y,
        rho: 1.0 / ys,
    });
    if mem.pairs.len() > mem.m {
        mem.pairs.pop_front();
    }
}

/// Two-loop recursion: returns −H g where H is the implicit inverse-Hessian
/// approximation built from the stored pairs on top of the scaled initial
/// matrix.
pub fn lbfgs_direction(mem: &LbfgsMemory, g: &ArrayView1<f64>) -> Array1<f64> {
    let mut q = g.to_owned();
    let mut alphas = Vec::with_capacity(mem.pairs.len());
    for pair in mem.pairs.iter().rev() {
        let a = pair.rho * pair.s.dot(&q);
        q.scaled_add(-a, &pair.y);
        alphas.push(a);
    }
    let gamma = match (mem.scaling, mem.pairs.back()) {
        (Scaling::Gamma, Some(last)) => last.s.dot(&last.y) / last.y.dot(&last.y),
        _ => 1.0,
    };
    let mut r = gamma * q;
    for (pair, &a) in mem.pairs.iter().zip(alphas.iter().rev()) {
        let beta = pair.rho * pair.y.dot(&r);
        r.scaled_add(a - beta, &pair.s);
    }
    -r
}
