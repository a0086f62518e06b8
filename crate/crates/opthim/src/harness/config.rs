//! Declarative run configuration: a strict YAML schema over the solver
//! families, the problem name, stopping criteria, and the line-search /
//! trust-region parameter tables.

use crate::directions::Scaling;
use crate::linesearch::LineSearchParams;
use crate::trustregion::{TrModelKind, TrustRegionParams};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

/// Environment variable that overrides the configured seed when set.
pub const SEED_ENV_VAR: &str = "OPTHIM_SEED";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] serde_yaml::Error),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("invalid {SEED_ENV_VAR} value `{0}`: expected an unsigned integer")]
    BadSeedEnv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gd,
    Newton,
    Bfgs,
    Dfp,
    Lbfgs,
    Tr,
}

impl Method {
    pub fn is_line_search(self) -> bool {
        !matches!(self, Method::Tr)
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::Gd => "gd",
            Method::Newton => "newton",
            Method::Bfgs => "bfgs",
            Method::Dfp => "dfp",
            Method::Lbfgs => "lbfgs",
            Method::Tr => "tr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineSearchKind {
    Armijo,
    Wolfe,
}

impl LineSearchKind {
    pub fn label(self) -> &'static str {
        match self {
            LineSearchKind::Armijo => "armijo",
            LineSearchKind::Wolfe => "wolfe",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrSolver {
    Cg,
    Cauchy,
}

impl TrSolver {
    pub fn label(self) -> &'static str {
        match self {
            TrSolver::Cg => "cg",
            TrSolver::Cauchy => "cauchy",
        }
    }
}

/// A fully resolved run configuration. Exactly one algorithm family is
/// specified: line-search methods carry a [`LineSearchKind`], the trust
/// region carries a model and a subproblem solver.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub method: Method,
    pub line_search: Option<LineSearchKind>,
    pub tr_model: Option<TrModelKind>,
    pub tr_solver: Option<TrSolver>,
    pub problem: String,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub ls_params: LineSearchParams,
    pub tr_params: TrustRegionParams,
    pub lbfgs_m: usize,
    pub scaling: Scaling,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    /// `None` means the default policy: record iterates when n ≤ 3.
    pub record_trajectory: Option<bool>,
}

impl SolverConfig {
    pub fn line_search(method: Method, kind: LineSearchKind, problem: &str) -> Self {
        assert!(
            method.is_line_search(),
            "use SolverConfig::trust_region for tr"
        );
        Self {
            method,
            line_search: Some(kind),
            tr_model: None,
            tr_solver: None,
            problem: problem.to_string(),
            grad_tol: 1e-6,
            max_iters: 1000,
            ls_params: LineSearchParams::default(),
            tr_params: TrustRegionParams::default(),
            lbfgs_m: 10,
            scaling: Scaling::Gamma,
            seed: 0,
            out_dir: None,
            record_trajectory: None,
        }
    }

    pub fn trust_region(model: TrModelKind, solver: TrSolver, problem: &str) -> Self {
        Self {
            method: Method::Tr,
            line_search: None,
            tr_model: Some(model),
            tr_solver: Some(solver),
            problem: problem.to_string(),
            grad_tol: 1e-6,
            max_iters: 1000,
            ls_params: LineSearchParams::default(),
            tr_params: TrustRegionParams::default(),
            lbfgs_m: 10,
            scaling: Scaling::Gamma,
            seed: 0,
            out_dir: None,
            record_trajectory: None,
        }
    }

    pub fn method_label(&self) -> &'static str {
        self.method.label()
    }

    /// Short variant tag: the line-search kind, or `<model>-<solver>` for
    /// trust-region runs.
    pub fn variant_label(&self) -> String {
        match self.method {
            Method::Tr => {
                let model = match self.tr_model.expect("validated") {
                    TrModelKind::Newton => "newton",
                    TrModelKind::Sr1 => "sr1",
                    TrModelKind::Bfgs => "bfgs",
                    TrModelKind::Dfp => "dfp",
                };
                format!("{model}-{}", self.tr_solver.expect("validated").label())
            }
            _ => self.line_search.expect("validated").label().to_string(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, message: String| ConfigError::Invalid {
            key: key.to_string(),
            message,
        };
        match self.method {
            Method::Tr => {
                if self.tr_model.is_none() {
                    return Err(invalid("tr_model", "required when method is tr".into()));
                }
                if self.tr_solver.is_none() {
                    return Err(invalid("tr_solver", "required when method is tr".into()));
                }
                if self.line_search.is_some() {
                    return Err(invalid(
                        "line_search",
                        "not applicable to trust-region runs".into(),
                    ));
                }
            }
            _ => {
                if self.line_search.is_none() {
                    return Err(invalid(
                        "line_search",
                        "required for line-search methods (armijo or wolfe)".into(),
                    ));
                }
                if self.tr_model.is_some() || self.tr_solver.is_some() {
                    return Err(invalid(
                        "tr_model",
                        "tr_model/tr_solver only apply when method is tr".into(),
                    ));
                }
            }
        }
        if !self.grad_tol.is_finite() || self.grad_tol <= 0.0 {
            return Err(invalid(
                "grad_tol",
                format!("must be positive, got {}", self.grad_tol),
            ));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters", "must be at least 1".into()));
        }
        if self.lbfgs_m == 0 {
            return Err(invalid("lbfgs_m", "must be at least 1".into()));
        }
        self.ls_params
            .validate()
            .map_err(|message| invalid("line-search parameters", message))?;
        self.tr_params
            .validate()
            .map_err(|message| invalid("trust-region parameters", message))?;
        Ok(())
    }
}

/// The YAML document shape; unspecified fields take the table defaults and
/// unknown keys are rejected.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    method: Method,
    line_search: Option<LineSearchKind>,
    tr_model: Option<TrModelKind>,
    tr_solver: Option<TrSolver>,
    problem: String,
    grad_tol: Option<f64>,
    max_iters: Option<usize>,
    // line-search parameter table
    alpha_init: Option<f64>,
    alpha_low: Option<f64>,
    alpha_high: Option<f64>,
    tau: Option<f64>,
    c1: Option<f64>,
    c2: Option<f64>,
    c: Option<f64>,
    max_trials: Option<u32>,
    // trust-region parameter table; c1/c2 double as the shrink/expand
    // thresholds when method is tr
    delta0: Option<f64>,
    delta_min: Option<f64>,
    delta_max: Option<f64>,
    c3: Option<f64>,
    cg_tol: Option<f64>,
    cg_max_iter: Option<usize>,
    eta: Option<f64>,
    lbfgs_m: Option<usize>,
    scaling: Option<Scaling>,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    record_trajectory: Option<bool>,
}

/// Parses a YAML config. Fields left unspecified take the parameter-table
/// defaults; the `OPTHIM_SEED` environment variable, when set, overrides the
/// configured seed.
pub fn load_config(text: &str) -> Result<SolverConfig, ConfigError> {
    let raw: RawConfig = serde_yaml::from_str(text)?;

    let mut ls_params = LineSearchParams::default();
    if let Some(v) = raw.alpha_init {
        ls_params.alpha_init = v;
    }
    if let Some(v) = raw.alpha_low {
        ls_params.alpha_low = v;
    }
    if let Some(v) = raw.alpha_high {
        ls_params.alpha_high = v;
    }
    if let Some(v) = raw.tau {
        ls_params.tau = v;
    }
    if let Some(v) = raw.c {
        ls_params.c = v;
    }
    if let Some(v) = raw.max_trials {
        ls_params.max_trials = v;
    }

    let mut tr_params = TrustRegionParams::default();
    if let Some(v) = raw.delta0 {
        tr_params.delta0 = v;
    }
    if let Some(v) = raw.delta_min {
        tr_params.delta_min = v;
    }
    if let Some(v) = raw.delta_max {
        tr_params.delta_max = v;
    }
    if let Some(v) = raw.c3 {
        tr_params.c3 = v;
    }
    if let Some(v) = raw.cg_tol {
        tr_params.cg_tol = v;
    }
    if let Some(v) = raw.cg_max_iter {
        tr_params.cg_max_iter = v;
    }
    if let Some(v) = raw.eta {
        tr_params.eta = v;
    }

    // c1/c2 mean Armijo/curvature constants for line-search runs and
    // shrink/expand thresholds for trust-region runs
    match raw.method {
        Method::Tr => {
            if let Some(v) = raw.c1 {
                tr_params.c1 = v;
            }
            if let Some(v) = raw.c2 {
                tr_params.c2 = v;
            }
        }
        _ => {
            if let Some(v) = raw.c1 {
                ls_params.c1 = v;
            }
            if let Some(v) = raw.c2 {
                ls_params.c2 = v;
            }
        }
    }

    let mut seed = raw.seed.unwrap_or(0);
    if let Ok(env_seed) = std::env::var(SEED_ENV_VAR) {
        seed = env_seed
            .trim()
            .parse::<u64>()
            .map_err(|_| ConfigError::BadSeedEnv(env_seed.clone()))?;
    }

    let config = SolverConfig {
        method: raw.method,
        line_search: raw.line_search,
        tr_model: raw.tr_model,
        tr_solver: raw.tr_solver,
        problem: raw.problem,
        grad_tol: raw.grad_tol.unwrap_or(1e-6),
        max_iters: raw.max_iters.unwrap_or(1000),
        ls_params,
        tr_params,
        lbfgs_m: raw.lbfgs_m.unwrap_or(10),
        scaling: raw.scaling.unwrap_or_default(),
        seed,
        out_dir: raw.out_dir,
        record_trajectory: raw.record_trajectory,
    };
    config.validate()?;
    Ok(config)
}
