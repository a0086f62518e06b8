//! The run driver: iterates a configured method on a problem until the
//! gradient-norm tolerance or the iteration cap is reached, recording
//! per-iteration history and summary metrics.

use super::config::{LineSearchKind, Method, SolverConfig, TrSolver};
use crate::benchmarks::{registry, BenchmarkError};
use crate::directions::{
    lbfgs_direction, lbfgs_push, newton_direction, steepest_descent, DirectionError,
    InverseHessianState, LbfgsMemory,
};
use crate::linesearch::{backtrack_armijo, backtrack_wolfe, LineSearchError, StepResult};
use crate::objective::{evaluate, EvalCounters, Objective, Want};
use crate::trustregion::{
    accept_step, cauchy_step, model_value, reduction_ratio, steihaug_cg, update_radius, ModelState,
    TrModelKind, TrustRegionError,
};
use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Benchmark(#[from] BenchmarkError),
    #[error(transparent)]
    Config(#[from] super::config::ConfigError),
    #[error("method requires a Hessian but objective `{0}` does not provide one")]
    HessianRequired(String),
    #[error("starting point has dimension {got}, objective `{name}` expects {expected}")]
    DimensionMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
}

/// One iterate's worth of diagnostics. `step_param` is the accepted step size
/// for line-search runs and the iteration's trust radius for trust-region
/// runs; both are absent on the initial row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub k: u64,
    pub f: f64,
    pub grad_norm: f64,
    pub step_param: Option<f64>,
    pub step_norm: Option<f64>,
    pub fev: u64,
    pub gev: u64,
    pub hev: u64,
    pub time_s: f64,
    pub accepted: Option<bool>,
}

/// Everything a finished run reports.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config: SolverConfig,
    pub history: Vec<HistoryRow>,
    pub iterations: usize,
    pub func_evals: u64,
    pub grad_evals: u64,
    pub hess_evals: u64,
    /// Seconds spent in the solve loop (monotonic clock; excludes config
    /// parsing and file I/O).
    pub wall_time: f64,
    pub converged: bool,
    pub final_point: Array1<f64>,
    pub final_f: f64,
    pub final_grad_norm: f64,
    /// Iterate sequence, recorded when n ≤ 3 or requested by the config.
    pub trajectory: Option<Vec<Array1<f64>>>,
    /// Per-iteration reduction ratios (trust-region runs only).
    pub rho_history: Option<Vec<f64>>,
    /// Soft failure noted when the run terminated before the stopping rule
    /// (line-search failure, non-descent direction, singular Hessian).
    pub error: Option<String>,
}

/// Runs the configured method on the configured registry problem.
pub fn run(config: &SolverConfig) -> Result<RunRecord, RunError> {
    config.validate()?;
    let spec = registry(&config.problem)?;
    let x0 = spec.start_point(config.seed);
    run_objective(config, &spec.objective, x0)
}

/// Runs the configured method on an explicit objective and starting point;
/// `config.problem` is only echoed into the record.
pub fn run_objective(
    config: &SolverConfig,
    obj: &Objective,
    x0: Array1<f64>,
) -> Result<RunRecord, RunError> {
    config.validate()?;
    if x0.len() != obj.dim() {
        return Err(RunError::DimensionMismatch {
            name: obj.name().to_string(),
            expected: obj.dim(),
            got: x0.len(),
        });
    }
    let needs_hessian = matches!(config.method, Method::Newton)
        || (config.method == Method::Tr && config.tr_model == Some(TrModelKind::Newton));
    if needs_hessian && !obj.has_hessian() {
        return Err(RunError::HessianRequired(obj.name().to_string()));
    }
    match config.method {
        Method::Tr => Ok(trust_region_loop(config, obj, x0)),
        _ => Ok(line_search_loop(config, obj, x0)),
    }
}

struct Recorder {
    history: Vec<HistoryRow>,
    trajectory: Option<Vec<Array1<f64>>>,
    start: Instant,
}

impl Recorder {
    fn new(record_trajectory: bool) -> Self {
        Self {
            history: Vec::new(),
            trajectory: record_trajectory.then(Vec::new),
            start: Instant::now(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        k: u64,
        f: f64,
        grad_norm: f64,
        step_param: Option<f64>,
        step_norm: Option<f64>,
        counters: &EvalCounters,
        accepted: Option<bool>,
        x: &ArrayView1<f64>,
    ) {
        self.history.push(HistoryRow {
            k,
            f,
            grad_norm,
            step_param,
            step_norm,
            fev: counters.func_evals,
            gev: counters.grad_evals,
            hev: counters.hess_evals,
            time_s: self.start.elapsed().as_secs_f64(),
            accepted,
        });
        if let Some(traj) = &mut self.trajectory {
            traj.push(x.to_owned());
        }
    }
}

fn norm(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

fn line_search_loop(config: &SolverConfig, obj: &Objective, x0: Array1<f64>) -> RunRecord {
    let record_traj = config.record_trajectory.unwrap_or(obj.dim() <= 3);
    let kind = config.line_search.expect("validated");
    let mut counters = EvalCounters::default();
    let mut recorder = Recorder::new(record_traj);

    let first = evaluate(obj, &x0.view(), &mut counters, Want::VALUE_GRAD)
        .expect("dimensions checked above");
    let mut x = x0;
    let mut f = first.value.unwrap();
    let mut g = first.grad.unwrap();
    recorder.push(0, f, norm(&g), None, None, &counters, None, &x.view());

    let mut quasi = match config.method {
        Method::Bfgs | Method::Dfp => Some(InverseHessianState::new(obj.dim())),
        _ => None,
    };
    let mut memory = match config.method {
        Method::Lbfgs => Some(LbfgsMemory::new(config.lbfgs_m, config.scaling)),
        _ => None,
    };

    let mut k = 0usize;
    let mut soft_error: Option<String> = None;
    loop {
        let gnorm = norm(&g);
        if gnorm <= config.grad_tol || k >= config.max_iters {
            break;
        }

        let p = match config.method {
            Method::Gd => steepest_descent(&g.view()),
            Method::Newton => {
                let hess = evaluate(obj, &x.view(), &mut counters, Want::HESS)
                    .expect("hessian checked above")
                    .hess
                    .unwrap();
                match newton_direction(&hess.view(), &g.view()) {
                    Ok(p) => p,
                    Err(DirectionError::SingularHessian { .. }) => {
                        soft_error = Some("singular Hessian: damping schedule exhausted".into());
                        break;
                    }
                }
            }
            Method::Bfgs | Method::Dfp => quasi.as_ref().unwrap().direction(&g.view()),
            Method::Lbfgs => lbfgs_direction(memory.as_ref().unwrap(), &g.view()),
            Method::Tr => unreachable!(),
        };

        let step = match kind {
            LineSearchKind::Armijo => backtrack_armijo(
                obj,
                &x.view(),
                &p.view(),
                f,
                &g.view(),
                &config.ls_params,
                &mut counters,
            ),
            LineSearchKind::Wolfe => backtrack_wolfe(
                obj,
                &x.view(),
                &p.view(),
                f,
                &g.view(),
                &config.ls_params,
                &mut counters,
            ),
        };
        let step: StepResult = match step {
            Ok(s) => s,
            Err(e @ LineSearchError::NonDescent { .. }) => {
                soft_error = Some(e.to_string());
                break;
            }
            Err(e @ LineSearchError::MaxTrials { .. }) => {
                soft_error = Some(format!("line search failed: {e}"));
                break;
            }
        };

        let g_new = match step.grad_new {
            Some(ref gn) => gn.clone(),
            None => evaluate(obj, &step.x_new.view(), &mut counters, Want::GRAD)
                .expect("dimensions are consistent")
                .grad
                .unwrap(),
        };

        let s = &step.x_new - &x;
        let y = &g_new - &g;
        match config.method {
            Method::Bfgs => {
                quasi.as_mut().unwrap().update_bfgs(&s.view(), &y.view());
            }
            Method::Dfp => {
                quasi.as_mut().unwrap().update_dfp(&s.view(), &y.view());
            }
            Method::Lbfgs => lbfgs_push(memory.as_mut().unwrap(), s.clone(), y),
            _ => {}
        }

        x = step.x_new;
        f = step.f_new;
        g = g_new;
        k += 1;
        recorder.push(
            k as u64,
            f,
            norm(&g),
            Some(step.alpha),
            Some(norm(&s)),
            &counters,
            None,
            &x.view(),
        );
    }

    finish(config, recorder, counters, k, x, f, &g, soft_error, None)
}

fn trust_region_loop(config: &SolverConfig, obj: &Objective, x0: Array1<f64>) -> RunRecord {
    let record_traj = config.record_trajectory.unwrap_or(obj.dim() <= 3);
    let model_kind = config.tr_model.expect("validated");
    let solver = config.tr_solver.expect("validated");
    let params = &config.tr_params;
    let mut counters = EvalCounters::default();
    let mut recorder = Recorder::new(record_traj);

    let first = evaluate(obj, &x0.view(), &mut counters, Want::VALUE_GRAD)
        .expect("dimensions checked above");
    let mut x = x0;
    let mut f = first.value.unwrap();
    let mut g = first.grad.unwrap();

    let mut model = ModelState::new(model_kind, obj.dim());
    if model_kind == TrModelKind::Newton {
        let hess = evaluate(obj, &x.view(), &mut counters, Want::HESS)
            .expect("hessian checked above")
            .hess
            .unwrap();
        model.refresh_exact(hess);
    }
    recorder.push(0, f, norm(&g), None, None, &counters, None, &x.view());

    let mut delta = params.delta0;
    let mut rhos: Vec<f64> = Vec::new();
    let mut k = 0usize;
    let mut soft_error: Option<String> = None;
    loop {
        let gnorm = norm(&g);
        if gnorm <= config.grad_tol || k >= config.max_iters {
            break;
        }

        let p = match solver {
            TrSolver::Cauchy => match cauchy_step(&g.view(), &model.matrix().view(), delta) {
                Ok(p) => p,
                Err(TrustRegionError::ZeroGradient) => break,
                Err(e) => {
                    soft_error = Some(e.to_string());
                    break;
                }
            },
            TrSolver::Cg => {
                steihaug_cg(
                    &g.view(),
                    &model.matrix().view(),
                    delta,
                    params.cg_tol,
                    params.cg_max_iter,
                )
                .0
            }
        };

        let x_trial = &x + &p;
        let f_trial = evaluate(obj, &x_trial.view(), &mut counters, Want::VALUE)
            .expect("dimensions are consistent")
            .value
            .unwrap();
        let m_zero = f;
        let m_p = model_value(f, &g.view(), &model.matrix().view(), &p.view());
        let predicted = m_zero - m_p;

        // Predictions this small are below the rounding noise that the
        // numerator f0 - f_trial carries, so the quotient is meaningless;
        // fall back to the sign of the (still exact) f comparison.
        let noise_floor = 1e-5 * f.abs().max(f_trial.abs()).max(1.0);
        let rho = if predicted <= 0.0 {
            f64::NEG_INFINITY
        } else if predicted > noise_floor {
            reduction_ratio(f, f_trial, m_zero, m_p).expect("predicted > 0 checked")
        } else if f_trial <= f {
            1.0
        } else {
            f64::NEG_INFINITY
        };
        rhos.push(rho);

        let accepted = accept_step(rho, params.eta);
        let step_norm = if accepted { norm(&p) } else { 0.0 };
        if accepted {
            let g_new = evaluate(obj, &x_trial.view(), &mut counters, Want::GRAD)
                .expect("dimensions are consistent")
                .grad
                .unwrap();
            match model_kind {
                TrModelKind::Newton => {
                    let hess = evaluate(obj, &x_trial.view(), &mut counters, Want::HESS)
                        .expect("hessian checked above")
                        .hess
                        .unwrap();
                    model.refresh_exact(hess);
                }
                _ => {
                    let y = &g_new - &g;
                    if let Err(e) = model.update(&p.view(), &y.view(), params.c3) {
                        // treat breakdown like a guarded skip
                        model.skipped_updates += 1;
                        let _ = e;
                    }
                }
            }
            x = x_trial;
            f = f_trial;
            g = g_new;
        }
        let delta_used = delta;
        delta = update_radius(delta, rho, params);
        k += 1;
        recorder.push(
            k as u64,
            f,
            norm(&g),
            Some(delta_used),
            Some(step_norm),
            &counters,
            Some(accepted),
            &x.view(),
        );
    }

    finish(
        config,
        recorder,
        counters,
        k,
        x,
        f,
        &g,
        soft_error,
        Some(rhos),
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    config: &SolverConfig,
    recorder: Recorder,
    counters: EvalCounters,
    iterations: usize,
    x: Array1<f64>,
    f: f64,
    g: &Array1<f64>,
    error: Option<String>,
    rho_history: Option<Vec<f64>>,
) -> RunRecord {
    let wall_time = recorder.start.elapsed().as_secs_f64();
    let final_grad_norm = norm(g);
    RunRecord {
        config: config.clone(),
        history: recorder.history,
        iterations,
        func_evals: counters.func_evals,
        grad_evals: counters.grad_evals,
        hess_evals: counters.hess_evals,
        wall_time,
        converged: final_grad_norm <= config.grad_tol,
        final_point: x,
        final_f: f,
        final_grad_norm,
        trajectory: recorder.trajectory,
        rho_history,
        error,
    }
}
