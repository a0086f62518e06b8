//! Objective-function contract and evaluation counting.
//!
//! An [`Objective`] bundles a value function, an analytic gradient, and an
//! optional analytic Hessian. All access during a solver run goes through
//! [`evaluate`], which increments the run's [`EvalCounters`] once per piece
//! requested; the raw accessors exist for oracles and post-hoc verification,
//! which must not disturb a run's accounting.

use ndarray::{Array1, Array2, ArrayView1};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

type ValueFn = dyn Fn(&ArrayView1<f64>) -> f64 + Send + Sync;
type GradFn = dyn Fn(&ArrayView1<f64>) -> Array1<f64> + Send + Sync;
type HessFn = dyn Fn(&ArrayView1<f64>) -> Array2<f64> + Send + Sync;

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("dimension mismatch: objective `{name}` has dimension {expected}, point has {got}")]
    DimensionMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("objective `{0}` does not provide a Hessian")]
    MissingHessian(String),
}

/// A smooth function f: ℝⁿ → ℝ with analytic derivatives.
///
/// Value, gradient and Hessian are deterministic functions of the point and
/// safe to call concurrently.
#[derive(Clone)]
pub struct Objective {
    name: String,
    dim: usize,
    value: Arc<ValueFn>,
    gradient: Arc<GradFn>,
    hessian: Option<Arc<HessFn>>,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("hessian", &self.hessian.is_some())
            .finish()
    }
}

impl Objective {
    pub fn new<V, G>(name: impl Into<String>, dim: usize, value: V, gradient: G) -> Self
    where
        V: Fn(&ArrayView1<f64>) -> f64 + Send + Sync + 'static,
        G: Fn(&ArrayView1<f64>) -> Array1<f64> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            hessian: None,
        }
    }

    pub fn with_hessian<H>(mut self, hessian: H) -> Self
    where
        H: Fn(&ArrayView1<f64>) -> Array2<f64> + Send + Sync + 'static,
    {
        self.hessian = Some(Arc::new(hessian));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    /// Raw value evaluation; does not touch any counters.
    pub fn value(&self, x: &ArrayView1<f64>) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        (self.value)(x)
    }

    /// Raw gradient evaluation; does not touch any counters.
    pub fn gradient(&self, x: &ArrayView1<f64>) -> Array1<f64> {
        debug_assert_eq!(x.len(), self.dim);
        (self.gradient)(x)
    }

    /// Raw Hessian evaluation; `None` if the objective has no Hessian.
    pub fn hessian(&self, x: &ArrayView1<f64>) -> Option<Array2<f64>> {
        debug_assert_eq!(x.len(), self.dim);
        self.hessian.as_ref().map(|h| h(x))
    }
}

/// Cumulative evaluation counts for one run. Monotonically non-decreasing;
/// incremented exactly once per evaluation made through [`evaluate`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounters {
    pub func_evals: u64,
    pub grad_evals: u64,
    pub hess_evals: u64,
}

/// Which pieces an [`evaluate`] call should produce.
#[derive(Debug, Clone, Copy, Default)]
pub struct Want {
    pub value: bool,
    pub grad: bool,
    pub hess: bool,
}

impl Want {
    pub const VALUE: Want = Want {
        value: true,
        grad: false,
        hess: false,
    };
    pub const GRAD: Want = Want {
        value: false,
        grad: true,
        hess: false,
    };
    pub const HESS: Want = Want {
        value: false,
        grad: false,
        hess: true,
    };
    pub const VALUE_GRAD: Want = Want {
        value: true,
        grad: true,
        hess: false,
    };
}

/// The pieces produced by one [`evaluate`] call.
#[derive(Debug, Clone, Default)]
pub struct Evaluation {
    pub value: Option<f64>,
    pub grad: Option<Array1<f64>>,
    pub hess: Option<Array2<f64>>,
}

/// Evaluates exactly the requested pieces of `obj` at `x`, incrementing the
/// matching counters by one per piece.
pub fn evaluate(
    obj: &Objective,
    x: &ArrayView1<f64>,
    counters: &mut EvalCounters,
    want: Want,
) -> Result<Evaluation, ObjectiveError> {
    if x.len() != obj.dim {
        return Err(ObjectiveError::DimensionMismatch {
            name: obj.name.clone(),
            expected: obj.dim,
            got: x.len(),
        });
    }
    if want.hess && obj.hessian.is_none() {
        return Err(ObjectiveError::MissingHessian(obj.name.clone()));
    }
    let mut out = Evaluation::default();
    if want.value {
        out.value = Some((obj.value)(x));
        counters.func_evals += 1;
    }
    if want.grad {
        out.grad = Some((obj.gradient)(x));
        counters.grad_evals += 1;
    }
    if want.hess {
        out.hess = obj.hessian.as_ref().map(|h| h(x));
        counters.hess_evals += 1;
    }
    Ok(out)
}
