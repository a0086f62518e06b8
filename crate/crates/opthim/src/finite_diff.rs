//! Central-difference derivative oracles.
//!
//! These are validation tools, independent of the analytic derivative paths
//! they check. They call the raw [`Objective`] accessors and therefore never
//! touch a run's [`EvalCounters`](crate::objective::EvalCounters).

use crate::objective::{Objective, ObjectiveError};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

/// Central-difference gradient: component i is (f(x+h eᵢ) − f(x−h eᵢ)) / 2h.
pub fn fd_gradient(
    obj: &Objective,
    x: &ArrayView1<f64>,
    h: f64,
) -> Result<Array1<f64>, ObjectiveError> {
    check_dims(obj, x)?;
    assert!(h > 0.0, "step must be positive");
    let n = x.len();
    let g: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut xp = x.to_owned();
            let mut xm = x.to_owned();
            xp[i] += h;
            xm[i] -= h;
            (obj.value(&xp.view()) - obj.value(&xm.view())) / (2.0 * h)
        })
        .collect();
    Ok(Array1::from(g))
}

/// Central second differences applied to the analytic gradient, symmetrized
/// as (M + Mᵀ)/2.
pub fn fd_hessian(
    obj: &Objective,
    x: &ArrayView1<f64>,
    h: f64,
) -> Result<Array2<f64>, ObjectiveError> {
    check_dims(obj, x)?;
    assert!(h > 0.0, "step must be positive");
    let n = x.len();
    let cols: Vec<Array1<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut xp = x.to_owned();
            let mut xm = x.to_owned();
            xp[i] += h;
            xm[i] -= h;
            (obj.gradient(&xp.view()) - obj.gradient(&xm.view())) / (2.0 * h)
        })
        .collect();
    let mut m = Array2::<f64>::zeros((n, n));
    for (i, col) in cols.iter().enumerate() {
        for j in 0..n {
            m[[j, i]] = col[j];
        }
    }
    let sym = 0.5 * (&m + &m.t());
    Ok(sym)
}

fn check_dims(obj: &Objective, x: &ArrayView1<f64>) -> Result<(), ObjectiveError> {
    if x.len() != obj.dim() {
        return Err(ObjectiveError::DimensionMismatch {
            name: obj.name().to_string(),
            expected: obj.dim(),
            got: x.len(),
        });
    }
    Ok(())
}

/// Relative error ‖a−b‖ / max(1, ‖b‖) between vectors.
pub fn relative_error_vec(a: &ArrayView1<f64>, b: &ArrayView1<f64>) -> f64 {
    let diff = (a - b).mapv(|v| v * v).sum().sqrt();
    let scale = b.mapv(|v| v * v).sum().sqrt().max(1.0);
    diff / scale
}

/// Relative error ‖A−B‖_F / max(1, ‖B‖_F) between matrices.
pub fn relative_error_mat(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> f64 {
    let diff = (a - b).mapv(|v| v * v).sum().sqrt();
    let scale = b.mapv(|v| v * v).sum().sqrt().max(1.0);
    diff / scale
}
