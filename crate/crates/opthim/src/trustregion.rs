//! Trust-region machinery: the quadratic model, SR1/BFGS/DFP/exact-Hessian
//! model updates, Cauchy and truncated-CG subproblem solvers, and the
//! ratio-based radius control.

use crate::directions::curvature_skip;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrustRegionError {
    #[error("gradient is zero; nothing to solve")]
    ZeroGradient,
    #[error("model predicts no decrease (predicted {predicted:e})")]
    DegenerateModel { predicted: f64 },
    #[error("curvature through the model broke down (sᵀBs = {curvature:e})")]
    NumericalBreakdown { curvature: f64 },
}

/// Radius-control and subproblem constants; defaults follow the standard
/// trust-region parameter table.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustRegionParams {
    pub delta0: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    /// Shrink threshold on the reduction ratio.
    pub c1: f64,
    /// Expand threshold on the reduction ratio.
    pub c2: f64,
    /// SR1 skip threshold.
    pub c3: f64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    /// Acceptance threshold: a step is taken when the ratio exceeds this.
    pub eta: f64,
}

impl Default for TrustRegionParams {
    fn default() -> Self {
        Self {
            delta0: 1.0,
            delta_min: 1e-6,
            delta_max: 1e2,
            c1: 0.25,
            c2: 0.75,
            c3: 1e-6,
            cg_tol: 1e-6,
            cg_max_iter: 10,
            eta: 1e-4,
        }
    }
}

impl TrustRegionParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.delta_min > 0.0 && self.delta_min <= self.delta0 && self.delta0 <= self.delta_max)
        {
            return Err(format!(
                "need 0 < delta_min <= delta0 <= delta_max, got {} / {} / {}",
                self.delta_min, self.delta0, self.delta_max
            ));
        }
        if !(self.eta >= 0.0 && self.eta < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(format!(
                "need 0 <= eta < c1 < c2 < 1, got eta={} c1={} c2={}",
                self.eta, self.c1, self.c2
            ));
        }
        if self.cg_max_iter == 0 {
            return Err("cg_max_iter must be positive".to_string());
        }
        if !self.cg_tol.is_finite() || self.cg_tol <= 0.0 {
            return Err(format!("cg_tol must be positive, got {}", self.cg_tol));
        }
        Ok(())
    }
}

/// Which Hessian approximation backs the quadratic model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrModelKind {
    /// Exact Hessian, refreshed at every accepted iterate.
    Newton,
    Sr1,
    Bfgs,
    Dfp,
}

/// The model Hessian B plus skip bookkeeping.
#[derive(Debug, Clone)]
pub struct ModelState {
    pub kind: TrModelKind,
    b: Array2<f64>,
    pub eps_sy: f64,
    pub skipped_updates: u64,
}

impl ModelState {
    /// Quasi-Newton kinds start from the identity; the exact kind is filled
    /// in by [`Self::refresh_exact`].
    pub fn new(kind: TrModelKind, n: usize) -> Self {
        Self {
            kind,
            b: Array2::eye(n),
            eps_sy: 1e-6,
            skipped_updates: 0,
        }
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.b
    }

    pub fn refresh_exact(&mut self, hess: Array2<f64>) {
        debug_assert_eq!(self.kind, TrModelKind::Newton);
        self.b = hess;
    }

    /// Applies this model's secant update for an accepted step. BFGS and DFP
    /// additionally require positive curvature (yᵀs > 0) so B stays positive
    /// definite; SR1 may go indefinite by design. Returns whether an update
    /// was applied.
    pub fn update(
        &mut self,
        s: &ArrayView1<f64>,
        y: &ArrayView1<f64>,
        c3: f64,
    ) -> Result<bool, TrustRegionError> {
        match self.kind {
            TrModelKind::Newton => Ok(false),
            TrModelKind::Sr1 => match sr1_update(&self.b.view(), s, y, c3) {
                Some(b) => {
                    self.b = b;
                    Ok(true)
                }
                None => {
                    self.skipped_updates += 1;
                    Ok(false)
                }
            },
            TrModelKind::Bfgs | TrModelKind::Dfp => {
                let norms = y.dot(y).sqrt() * s.dot(s).sqrt();
                if y.dot(s) <= self.eps_sy * norms {
                    self.skipped_updates += 1;
                    return Ok(false);
                }
                self.b = match self.kind {
                    TrModelKind::Bfgs => bfgs_update_direct(&self.b.view(), s, y, self.eps_sy)?,
                    _ => dfp_update_direct(&self.b.view(), s, y, self.eps_sy)?,
                }
                .expect("guard already checked");
                Ok(true)
            }
        }
    }
}

/// Quadratic model value m(p) = f0 + gᵀp + ½pᵀBp.
pub fn model_value(f0: f64, g: &ArrayView1<f64>, b: &ArrayView2<f64>, p: &ArrayView1<f64>) -> f64 {
    f0 + g.dot(p) + 0.5 * p.dot(&b.dot(p))
}

/// Minimizer of the model along −g inside the ball:
/// p = −α_C g with α_C = min(‖g‖²/gᵀBg, δ/‖g‖), falling back to the boundary
/// when the curvature along g is not positive.
pub fn cauchy_step(
    g: &ArrayView1<f64>,
    b: &ArrayView2<f64>,
    delta: f64,
) -> Result<Array1<f64>, TrustRegionError> {
    debug_assert!(delta > 0.0);
    let gnorm = g.dot(g).sqrt();
    if gnorm == 0.0 {
        return Err(TrustRegionError::ZeroGradient);
    }
    let gbg = g.dot(&b.dot(g));
    let alpha = if gbg > 0.0 {
        (g.dot(g) / gbg).min(delta / gnorm)
    } else {
        delta / gnorm
    };
    Ok(-alpha * &g.to_owned())
}

/// Outcome of the truncated-CG subproblem solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgStatus {
    /// Residual dropped below the tolerance.
    Converged,
    /// An iterate would have left the ball; returned the boundary point.
    Boundary,
    /// Negative curvature along a search direction; returned the boundary point.
    NegCurvature,
    /// Iteration budget exhausted; returned the current interior iterate.
    MaxIter,
}

/// Truncated conjugate gradient on B p = −g, stopped at the ball boundary,
/// on negative curvature, when the residual falls below `tol`, or after
/// `max_iter` steps.
///
/// The returned point is safeguarded to decrease the model at least as much
/// as the Cauchy step for the same (g, B, δ). The safeguard only bites when
/// `tol` sits below the residual CG can attain in double precision, where
/// further iterations walk on rounding noise.
pub fn steihaug_cg(
    g: &ArrayView1<f64>,
    b: &ArrayView2<f64>,
    delta: f64,
    tol: f64,
    max_iter: usize,
) -> (Array1<f64>, CgStatus) {
    debug_assert!(delta > 0.0);
    let (candidate, status) = steihaug_cg_raw(g, b, delta, tol, max_iter);
    if status == CgStatus::Converged && candidate.iter().all(|v| v.is_finite()) {
        return (candidate, status);
    }
    let gnorm2 = g.dot(g);
    if gnorm2 == 0.0 {
        return (candidate, status);
    }
    let bg = b.dot(g);
    let gbg = g.dot(&bg);
    let alpha_c = if gbg > 0.0 {
        (gnorm2 / gbg).min(delta / gnorm2.sqrt())
    } else {
        delta / gnorm2.sqrt()
    };
    let m_cauchy = -alpha_c * gnorm2 + 0.5 * alpha_c * alpha_c * gbg;
    let m_candidate = g.dot(&candidate) + 0.5 * candidate.dot(&b.dot(&candidate));
    if m_candidate.is_nan() || m_candidate > m_cauchy {
        (-alpha_c * &g.to_owned(), status)
    } else {
        (candidate, status)
    }
}

fn steihaug_cg_raw(
    g: &ArrayView1<f64>,
    b: &ArrayView2<f64>,
    delta: f64,
    tol: f64,
    max_iter: usize,
) -> (Array1<f64>, CgStatus) {
    let n = g.len();
    let mut p = Array1::<f64>::zeros(n);
    let mut r = g.to_owned();
    let mut rr = r.dot(&r);
    if rr.sqrt() <= tol {
        return (p, CgStatus::Converged);
    }
    let mut d = -r.clone();
    for _ in 0..max_iter {
        let bd = b.dot(&d);
        let dbd = d.dot(&bd);
        if dbd <= 0.0 {
            let sigma = boundary_intersection(&p.view(), &d.view(), delta);
            return (p + sigma * &d, CgStatus::NegCurvature);
        }
        let alpha = rr / dbd;
        let p_next = &p + &(alpha * &d);
        if p_next.dot(&p_next).sqrt() >= delta {
            let sigma = boundary_intersection(&p.view(), &d.view(), delta);
            return (p + sigma * &d, CgStatus::Boundary);
        }
        let r_next = &r + &(alpha * &bd);
        let rr_next = r_next.dot(&r_next);
        if rr_next.sqrt() <= tol {
            return (p_next, CgStatus::Converged);
        }
        let beta = rr_next / rr;
        d = -&r_next + &(beta * &d);
        p = p_next;
        r = r_next;
        rr = rr_next;
    }
    (p, CgStatus::MaxIter)
}

/// Larger root σ ≥ 0 of ‖p + σd‖ = δ.
fn boundary_intersection(p: &ArrayView1<f64>, d: &ArrayView1<f64>, delta: f64) -> f64 {
    let a = d.dot(d);
    let b = 2.0 * p.dot(d);
    let c = p.dot(p) - delta * delta;
    let disc = (b * b - 4.0 * a * c).max(0.0);
    (-b + disc.sqrt()) / (2.0 * a)
}

/// ρ = (f0 − f_trial) / (m(0) − m(p)). The caller owns what to do when the
/// model predicts no decrease; that case is reported as an error.
pub fn reduction_ratio(
    f0: f64,
    f_trial: f64,
    model_at_zero: f64,
    model_at_p: f64,
) -> Result<f64, TrustRegionError> {
    let predicted = model_at_zero - model_at_p;
    if predicted <= 0.0 {
        return Err(TrustRegionError::DegenerateModel { predicted });
    }
    Ok((f0 - f_trial) / predicted)
}

/// Halve below the shrink threshold, double above the expand threshold,
/// then clamp into [delta_min, delta_max].
pub fn update_radius(delta: f64, rho: f64, params: &TrustRegionParams) -> f64 {
    let next = if rho < params.c1 {
        0.5 * delta
    } else if rho > params.c2 {
        2.0 * delta
    } else {
        delta
    };
    next.clamp(params.delta_min, params.delta_max)
}

/// A step is taken iff the ratio strictly exceeds the acceptance threshold.
pub fn accept_step(rho: f64, eta: f64) -> bool {
    rho > eta
}

/// SR1 update B⁺ = B + vvᵀ/(vᵀs) with v = y − Bs; `None` when the skip rule
/// |vᵀs| < c3·‖v‖·‖s‖ (or a vanishing pair) applies.
pub fn sr1_update(
    b: &ArrayView2<f64>,
    s: &ArrayView1<f64>,
    y: &ArrayView1<f64>,
    c3: f64,
) -> Option<Array2<f64>> {
    let v = y.to_owned() - b.dot(s);
    let vs = v.dot(s);
    let scale = v.dot(&v).sqrt() * s.dot(s).sqrt();
    if scale == 0.0 || vs.abs() < c3 * scale {
        return None;
    }
    let n = b.nrows();
    let mut out = b.to_owned();
    let inv = 1.0 / vs;
    for i in 0..n {
        for j in 0..n {
            out[[i, j]] += inv * v[i] * v[j];
        }
    }
    Some(out)
}

/// Direct-form BFGS update B⁺ = B − BssᵀB/(sᵀBs) + yyᵀ/(yᵀs); `None` when the
/// pair is guarded by [`curvature_skip`], error when sᵀBs is not positive.
pub fn bfgs_update_direct(
    b: &ArrayView2<f64>,
    s: &ArrayView1<f64>,
    y: &ArrayView1<f64>,
    eps_sy: f64,
) -> Result<Option<Array2<f64>>, TrustRegionError> {
    if curvature_skip(s, y, eps_sy) {
        return Ok(None);
    }
    let bs = b.dot(s);
    let sbs = s.dot(&bs);
    if sbs <= 0.0 {
        return Err(TrustRegionError::NumericalBreakdown { curvature: sbs });
    }
    let n = b.nrows();
    let inv_sy = 1.0 / y.dot(s);
    let mut out = b.to_owned();
    for i in 0..n {
        for j in 0..n {
            out[[i, j]] += inv_sy * y[i] * y[j] - bs[i] * bs[j] / sbs;
        }
    }
    Ok(Some(out))
}

/// Direct-form DFP update B⁺ = (I − ysᵀ/yᵀs) B (I − syᵀ/yᵀs) + yyᵀ/(yᵀs),
/// evaluated in rank-two form.
pub fn dfp_update_direct(
    b: &ArrayView2<f64>,
    s: &ArrayView1<f64>,
    y: &ArrayView1<f64>,
    eps_sy: f64,
) -> Result<Option<Array2<f64>>, TrustRegionError> {
    if curvature_skip(s, y, eps_sy) {
        return Ok(None);
    }
    let bs = b.dot(s);
    let sbs = s.dot(&bs);
    if sbs <= 0.0 {
        return Err(TrustRegionError::NumericalBreakdown { curvature: sbs });
    }
    let n = b.nrows();
    let rho = 1.0 / y.dot(s);
    let coef = rho * rho * sbs + rho;
    let mut out = b.to_owned();
    for i in 0..n {
        for j in 0..n {
            out[[i, j]] += coef * y[i] * y[j] - rho * (y[i] * bs[j] + bs[i] * y[j]);
        }
    }
    Ok(Some(out))
}
