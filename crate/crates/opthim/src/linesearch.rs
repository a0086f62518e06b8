//! Backtracking step-size selection: sufficient decrease (Armijo), optionally
//! strengthened with the curvature condition (Wolfe).

use crate::objective::{evaluate, EvalCounters, Objective, Want};
use ndarray::{Array1, ArrayView1};
use thiserror::Error;

/// Step-size control constants; defaults follow the standard table of
/// backtracking parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchParams {
    pub alpha_init: f64,
    pub alpha_low: f64,
    pub alpha_high: f64,
    /// Backtracking shrink factor.
    pub tau: f64,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    /// Bracket-splitting fraction used by the Wolfe search.
    pub c: f64,
    pub max_trials: u32,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self {
            alpha_init: 1.0,
            alpha_low: 0.0,
            alpha_high: 1000.0,
            tau: 0.5,
            c1: 1e-4,
            c2: 0.9,
            c: 0.5,
            max_trials: 60,
        }
    }
}

impl LineSearchParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.c1 > 0.0 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(format!(
                "need 0 < c1 < c2 < 1, got c1={} c2={}",
                self.c1, self.c2
            ));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(format!("need 0 < tau < 1, got tau={}", self.tau));
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(format!("need 0 < c < 1, got c={}", self.c));
        }
        if !(self.alpha_low < self.alpha_init && self.alpha_init <= self.alpha_high) {
            return Err(format!(
                "need alpha_low < alpha_init <= alpha_high, got {} / {} / {}",
                self.alpha_low, self.alpha_init, self.alpha_high
            ));
        }
        if self.max_trials == 0 {
            return Err("max_trials must be positive".to_string());
        }
        Ok(())
    }
}

/// An accepted step.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub alpha: f64,
    pub x_new: Array1<f64>,
    pub f_new: f64,
    /// Gradient at `x_new`; present for Wolfe searches, which evaluate it at
    /// every trial anyway.
    pub grad_new: Option<Array1<f64>>,
    /// Number of candidate step sizes tested.
    pub trials: u32,
    pub armijo: bool,
    pub curvature: bool,
}

#[derive(Debug, Error)]
pub enum LineSearchError {
    #[error("search direction is not a descent direction (slope {slope:e})")]
    NonDescent { slope: f64 },
    #[error("no acceptable step after {trials} trials")]
    MaxTrials {
        trials: u32,
        /// Best trial seen, when any trial satisfied the sufficient-decrease
        /// test (Wolfe) or had the lowest value (Armijo).
        best: Option<Box<StepResult>>,
    },
}

/// Sufficient decrease: f_trial ≤ f0 + c1·α·slope0. Caller guarantees
/// slope0 < 0.
#[inline]
pub fn armijo_holds(f0: f64, slope0: f64, f_trial: f64, alpha: f64, c1: f64) -> bool {
    debug_assert!(slope0 < 0.0);
    f_trial <= f0 + c1 * alpha * slope0
}

/// Curvature condition: slope at the trial point ≥ c2·slope0.
#[inline]
pub fn curvature_holds(slope_trial: f64, slope0: f64, c2: f64) -> bool {
    debug_assert!(slope0 < 0.0);
    slope_trial >= c2 * slope0
}

/// Backtracking with the sufficient-decrease test only: α = alpha_init·τʲ for
/// the smallest j that passes. One function evaluation per trial.
pub fn backtrack_armijo(
    obj: &Objective,
    x: &ArrayView1<f64>,
    p: &ArrayView1<f64>,
    f0: f64,
    g0: &ArrayView1<f64>,
    params: &LineSearchParams,
    counters: &mut EvalCounters,
) -> Result<StepResult, LineSearchError> {
    let slope0 = g0.dot(p);
    if slope0 >= 0.0 {
        return Err(LineSearchError::NonDescent { slope: slope0 });
    }
    let mut alpha = params.alpha_init;
    let mut best: Option<Box<StepResult>> = None;
    for trial in 1..=params.max_trials {
        let x_new = x + &(alpha * p);
        let f_new = evaluate(obj, &x_new.view(), counters, Want::VALUE)
            .expect("dimensions are consistent")
            .value
            .unwrap();
        if armijo_holds(f0, slope0, f_new, alpha, params.c1) {
            return Ok(StepResult {
                alpha,
                x_new,
                f_new,
                grad_new: None,
                trials: trial,
                armijo: true,
                curvature: false,
            });
        }
        if best.as_ref().is_none_or(|b| f_new < b.f_new) {
            best = Some(Box::new(StepResult {
                alpha,
                x_new,
                f_new,
                grad_new: None,
                trials: trial,
                armijo: false,
                curvature: false,
            }));
        }
        alpha *= params.tau;
    }
    Err(LineSearchError::MaxTrials {
        trials: params.max_trials,
        best,
    })
}

/// Backtracking for both conditions, with bracketing: on sufficient-decrease
/// failure the upper bound moves to α, on curvature failure the lower bound
/// does; the next trial splits the bracket at lo + c·(hi − lo). If a bound
/// is infinite the step instead shrinks by τ (decrease failed) or doubles up
/// to alpha_high (curvature failed). One function and one gradient
/// evaluation per trial.
pub fn backtrack_wolfe(
    obj: &Objective,
    x: &ArrayView1<f64>,
    p: &ArrayView1<f64>,
    f0: f64,
    g0: &ArrayView1<f64>,
    params: &LineSearchParams,
    counters: &mut EvalCounters,
) -> Result<StepResult, LineSearchError> {
    let slope0 = g0.dot(p);
    if slope0 >= 0.0 {
        return Err(LineSearchError::NonDescent { slope: slope0 });
    }
    let mut lo = params.alpha_low;
    let mut hi = params.alpha_high;
    let mut alpha = params.alpha_init;
    let mut best: Option<Box<StepResult>> = None;
    for trial in 1..=params.max_trials {
        let x_new = x + &(alpha * p);
        let ev = evaluate(obj, &x_new.view(), counters, Want::VALUE_GRAD)
            .expect("dimensions are consistent");
        let f_new = ev.value.unwrap();
        let g_new = ev.grad.unwrap();
        let armijo = armijo_holds(f0, slope0, f_new, alpha, params.c1);
        if armijo {
            let slope_new = g_new.dot(p);
            if curvature_holds(slope_new, slope0, params.c2) {
                return Ok(StepResult {
                    alpha,
                    x_new,
                    f_new,
                    grad_new: Some(g_new),
                    trials: trial,
                    armijo: true,
                    curvature: true,
                });
            }
            if best.as_ref().is_none_or(|b| f_new < b.f_new) {
                best = Some(Box::new(StepResult {
                    alpha,
                    x_new,
                    f_new,
                    grad_new: Some(g_new),
                    trials: trial,
                    armijo: true,
                    curvature: false,
                }));
            }
            lo = alpha;
        } else {
            hi = alpha;
        }
        alpha = if lo.is_finite() && hi.is_finite() {
            lo + params.c * (hi - lo)
        } else if !armijo {
            alpha * params.tau
        } else {
            (2.0 * alpha).min(params.alpha_high)
        };
    }
    Err(LineSearchError::MaxTrials {
        trials: params.max_trials,
        best,
    })
}
