//! The eleven-problem evaluation suite: seeded quadratics, quartics,
//! chained Rosenbrock, an exponential-quartic hybrid, and Genhumps.
//!
//! Every problem carries analytic gradient and Hessian closures; the
//! finite-difference oracles in [`crate::finite_diff`] are the independent
//! cross-check. Generators are deterministic: equal `(n, kappa, seed)`
//! regenerate bit-identical instances.

use crate::finite_diff::{fd_gradient, fd_hessian, relative_error_mat, relative_error_vec};
use crate::objective::Objective;
use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::sync::Arc;
use thiserror::Error;

/// Canonical suite names, in table order.
pub const SUITE: [&str; 11] = [
    "Quad_A",
    "Quad_B",
    "Quad_C",
    "Quad_D",
    "Quartic_A",
    "Quartic_B",
    "Rosen_A",
    "Rosen_B",
    "Exp_A",
    "Exp_B",
    "Genhumps",
];

// Generator seeds for the four canonical quadratic instances.
const QUAD_SEEDS: [u64; 4] = [101, 102, 103, 104];

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("unknown benchmark `{name}`; valid names: {}", SUITE.join(", "))]
    UnknownName { name: String },
}

/// A benchmark instance: objective plus its registered default start.
#[derive(Debug, Clone)]
pub struct BenchmarkSpec {
    pub name: String,
    pub dim: usize,
    pub objective: Objective,
    /// Default starting point.
    pub start: Array1<f64>,
    /// ℓ∞ radius of the seeded uniform perturbation applied to `start`
    /// (only Rosen_A uses this).
    pub start_perturbation: Option<f64>,
    /// Generator seed for random instances; 0 for fixed problems.
    pub seed: u64,
}

impl BenchmarkSpec {
    /// Starting point for a run: the default start, perturbed uniformly in
    /// the ℓ∞ ball when a perturbation radius is registered.
    pub fn start_point(&self, run_seed: u64) -> Array1<f64> {
        match self.start_perturbation {
            None => self.start.clone(),
            Some(r) => {
                let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
                let u = Uniform::new_inclusive(-r, r);
                &self.start + &Array1::from_iter((0..self.dim).map(|_| u.sample(&mut rng)))
            }
        }
    }
}

/// Generates the (Q, b) pair for a random convex quadratic: Q = Uᵀ diag(λ) U
/// with λ log-spaced on [1, kappa] and U drawn from seeded standard normals
/// and orthonormalized; b is seeded standard normal.
pub fn quadratic_instance(n: usize, kappa: f64, seed: u64) -> (Array2<f64>, Array1<f64>) {
    assert!(n >= 2, "quadratic needs n >= 2");
    assert!(kappa >= 1.0, "condition number must be >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let mut u = Array2::<f64>::zeros((n, n));
    for v in u.iter_mut() {
        *v = normal.sample(&mut rng);
    }
    orthonormalize_rows(&mut u);
    let log_k = kappa.log10();
    let lambda: Array1<f64> = (0..n)
        .map(|i| 10f64.powf(log_k * i as f64 / (n - 1) as f64))
        .collect();
    // Q = Uᵀ (Λ U) with the rows of U as the eigenbasis
    let mut scaled = u.clone();
    for (mut row, &l) in scaled.axis_iter_mut(Axis(0)).zip(lambda.iter()) {
        row *= l;
    }
    let q = u.t().dot(&scaled);
    let q = 0.5 * (&q + &q.t());
    let b: Array1<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
    (q, b)
}

/// Modified Gram-Schmidt on the rows.
fn orthonormalize_rows(a: &mut Array2<f64>) {
    let n = a.nrows();
    for i in 0..n {
        let (done, mut rest) = a.view_mut().split_at(Axis(0), i);
        let mut row = rest.row_mut(0);
        let row = row.as_slice_mut().unwrap();
        for j in 0..i {
            let prev = done.row(j);
            let prev = prev.as_slice().unwrap();
            let r: f64 = row.iter().zip(prev).map(|(x, y)| x * y).sum();
            for (x, y) in row.iter_mut().zip(prev) {
                *x -= r * y;
            }
        }
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        for x in row.iter_mut() {
            *x /= norm;
        }
    }
}

/// f(x) = ½xᵀQx + bᵀx with eigenvalues log-spaced on [1, kappa].
pub fn make_quadratic(n: usize, kappa: f64, seed: u64) -> BenchmarkSpec {
    let (q, b) = quadratic_instance(n, kappa, seed);
    let q = Arc::new(q);
    let b = Arc::new(b);
    let (qv, bv) = (q.clone(), b.clone());
    let (qg, bg) = (q.clone(), b.clone());
    let qh = q.clone();
    let objective = Objective::new(
        format!("quadratic(n={n},kappa={kappa:e})"),
        n,
        move |x: &ArrayView1<f64>| 0.5 * x.dot(&qv.dot(x)) + bv.dot(x),
        move |x: &ArrayView1<f64>| qg.dot(x) + &*bg,
    )
    .with_hessian(move |_x: &ArrayView1<f64>| (*qh).clone());
    BenchmarkSpec {
        name: format!("Quad(n={n},kappa={kappa:e})"),
        dim: n,
        objective,
        start: Array1::ones(n),
        start_perturbation: None,
        seed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuarticVariant {
    A,
    B,
}

// Fixed SPD matrix for the quartic family.
const QUARTIC_A_MAT: [[f64; 4]; 4] = [
    [5.0, 1.0, 0.0, 0.5],
    [1.0, 4.0, 0.5, 0.0],
    [0.0, 0.5, 3.0, 0.0],
    [0.5, 0.0, 0.0, 2.0],
];

/// f(x) = ½xᵀx + (σ/4)(xᵀAx)² on n=4; σ = 1e-4 (A) or 1e4 (B).
pub fn make_quartic(variant: QuarticVariant) -> BenchmarkSpec {
    let sigma = match variant {
        QuarticVariant::A => 1e-4,
        QuarticVariant::B => 1e4,
    };
    let a = Arc::new(Array2::from(QUARTIC_A_MAT.to_vec()));
    let (av, ag, ah) = (a.clone(), a.clone(), a.clone());
    let objective = Objective::new(
        format!("quartic(sigma={sigma:e})"),
        4,
        move |x: &ArrayView1<f64>| {
            let u = x.dot(&av.dot(x));
            0.5 * x.dot(x) + 0.25 * sigma * u * u
        },
        move |x: &ArrayView1<f64>| {
            let v = ag.dot(x);
            let u = x.dot(&v);
            x.to_owned() + sigma * u * &v
        },
    )
    .with_hessian(move |x: &ArrayView1<f64>| {
        let v = ah.dot(x);
        let u = x.dot(&v);
        let mut h = Array2::<f64>::eye(4);
        for i in 0..4 {
            for j in 0..4 {
                h[[i, j]] += sigma * (2.0 * v[i] * v[j] + u * ah[[i, j]]);
            }
        }
        h
    });
    let ang = (70.0f64).cos();
    let sin = (70.0f64).sin();
    BenchmarkSpec {
        name: format!("Quartic_{variant:?}"),
        dim: 4,
        objective,
        start: ndarray::array![ang, sin, ang, sin],
        start_perturbation: None,
        seed: 0,
    }
}

/// Chained Rosenbrock, f(x) = Σ 100(x_{i+1} − x_i²)² + (1 − x_i)².
pub fn make_rosenbrock(n: usize) -> BenchmarkSpec {
    assert!(n >= 2, "rosenbrock needs n >= 2");
    let objective = Objective::new(format!("rosenbrock(n={n})"), n, rosen_value, rosen_grad)
        .with_hessian(rosen_hess);
    let mut start = Array1::ones(n);
    start[0] = -1.0;
    BenchmarkSpec {
        name: format!("Rosen(n={n})"),
        dim: n,
        objective,
        start,
        // the 3-d instance starts in a seeded neighborhood of (-1, 1, 1)
        start_perturbation: if n == 3 { Some(0.25) } else { None },
        seed: 0,
    }
}

fn rosen_value(x: &ArrayView1<f64>) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() - 1 {
        let t = x[i + 1] - x[i] * x[i];
        let o = 1.0 - x[i];
        s += 100.0 * t * t + o * o;
    }
    s
}

fn rosen_grad(x: &ArrayView1<f64>) -> Array1<f64> {
    let n = x.len();
    let mut g = Array1::<f64>::zeros(n);
    for i in 0..n - 1 {
        let t = x[i + 1] - x[i] * x[i];
        g[i] += -400.0 * x[i] * t - 2.0 * (1.0 - x[i]);
        g[i + 1] += 200.0 * t;
    }
    g
}

fn rosen_hess(x: &ArrayView1<f64>) -> Array2<f64> {
    let n = x.len();
    let mut h = Array2::<f64>::zeros((n, n));
    for i in 0..n - 1 {
        h[[i, i]] += 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
        h[[i + 1, i + 1]] += 200.0;
        h[[i, i + 1]] += -400.0 * x[i];
        h[[i + 1, i]] += -400.0 * x[i];
    }
    h
}

/// Exponential-quartic hybrid: (e^{x₀}−1)/(e^{x₀}+1) + 0.1e^{−x₀} + Σ(x_i−1)⁴.
///
/// The first term is evaluated as tanh(x₀/2) so large x₀ cannot overflow it.
pub fn make_exponential(n: usize) -> BenchmarkSpec {
    assert!(n >= 2, "exponential needs n >= 2");
    let objective = Objective::new(
        format!("exponential(n={n})"),
        n,
        |x: &ArrayView1<f64>| {
            let mut s = (0.5 * x[0]).tanh() + 0.1 * (-x[0]).exp();
            for i in 1..x.len() {
                let d = x[i] - 1.0;
                s += d * d * d * d;
            }
            s
        },
        |x: &ArrayView1<f64>| {
            let mut g = Array1::<f64>::zeros(x.len());
            let c = (0.5 * x[0]).cosh();
            g[0] = 0.5 / (c * c) - 0.1 * (-x[0]).exp();
            for i in 1..x.len() {
                let d = x[i] - 1.0;
                g[i] = 4.0 * d * d * d;
            }
            g
        },
    )
    .with_hessian(|x: &ArrayView1<f64>| {
        let n = x.len();
        let mut h = Array2::<f64>::zeros((n, n));
        let c = (0.5 * x[0]).cosh();
        let t = (0.5 * x[0]).tanh();
        h[[0, 0]] = -0.5 * t / (c * c) + 0.1 * (-x[0]).exp();
        for i in 1..n {
            let d = x[i] - 1.0;
            h[[i, i]] = 12.0 * d * d;
        }
        h
    });
    BenchmarkSpec {
        name: format!("Exp(n={n})"),
        dim: n,
        objective,
        start: Array1::zeros(n),
        start_perturbation: None,
        seed: 0,
    }
}

/// Five-dimensional generalized humps: Σ sin²(2x_{i−1})sin²(2x_i) + 0.05(x_{i−1}²+x_i²).
pub fn make_genhumps() -> BenchmarkSpec {
    let objective = Objective::new(
        "genhumps",
        5,
        |x: &ArrayView1<f64>| {
            let mut s = 0.0;
            for i in 1..5 {
                let (a, b) = (x[i - 1], x[i]);
                let sa = (2.0 * a).sin();
                let sb = (2.0 * b).sin();
                s += sa * sa * sb * sb + 0.05 * (a * a + b * b);
            }
            s
        },
        |x: &ArrayView1<f64>| {
            let mut g = Array1::<f64>::zeros(5);
            for i in 1..5 {
                let (a, b) = (x[i - 1], x[i]);
                let s2a = (2.0 * a).sin();
                let s2b = (2.0 * b).sin();
                g[i - 1] += 2.0 * (4.0 * a).sin() * s2b * s2b + 0.1 * a;
                g[i] += 2.0 * s2a * s2a * (4.0 * b).sin() + 0.1 * b;
            }
            g
        },
    )
    .with_hessian(|x: &ArrayView1<f64>| {
        let mut h = Array2::<f64>::zeros((5, 5));
        for i in 1..5 {
            let (a, b) = (x[i - 1], x[i]);
            let s2a = (2.0 * a).sin();
            let s2b = (2.0 * b).sin();
            h[[i - 1, i - 1]] += 8.0 * (4.0 * a).cos() * s2b * s2b + 0.1;
            h[[i, i]] += 8.0 * s2a * s2a * (4.0 * b).cos() + 0.1;
            let cross = 4.0 * (4.0 * a).sin() * (4.0 * b).sin();
            h[[i - 1, i]] += cross;
            h[[i, i - 1]] += cross;
        }
        h
    });
    BenchmarkSpec {
        name: "Genhumps".to_string(),
        dim: 5,
        objective,
        start: ndarray::array![-506.2, 506.2, 506.2, 506.2, 506.2],
        start_perturbation: None,
        seed: 0,
    }
}

/// Looks up a canonical suite instance by name.
pub fn registry(name: &str) -> Result<BenchmarkSpec, BenchmarkError> {
    let mut spec = match name {
        "Quad_A" => make_quadratic(10, 1e2, QUAD_SEEDS[0]),
        "Quad_B" => make_quadratic(100, 1e4, QUAD_SEEDS[1]),
        "Quad_C" => make_quadratic(1000, 1e2, QUAD_SEEDS[2]),
        "Quad_D" => make_quadratic(1000, 1e4, QUAD_SEEDS[3]),
        "Quartic_A" => make_quartic(QuarticVariant::A),
        "Quartic_B" => make_quartic(QuarticVariant::B),
        "Rosen_A" => make_rosenbrock(3),
        "Rosen_B" => make_rosenbrock(100),
        "Exp_A" => make_exponential(10),
        "Exp_B" => make_exponential(100),
        "Genhumps" => make_genhumps(),
        _ => {
            return Err(BenchmarkError::UnknownName {
                name: name.to_string(),
            })
        }
    };
    spec.name = name.to_string();
    Ok(spec)
}

/// Result of checking a problem's analytic derivatives against the
/// finite-difference oracles at seeded points.
#[derive(Debug, Clone)]
pub struct DerivativeReport {
    pub name: String,
    pub max_grad_err: f64,
    pub max_hess_err: Option<f64>,
}

impl DerivativeReport {
    pub fn passes(&self, grad_tol: f64, hess_tol: f64) -> bool {
        self.max_grad_err <= grad_tol && self.max_hess_err.is_none_or(|e| e <= hess_tol)
    }
}

/// Compares analytic derivatives against [`fd_gradient`]/[`fd_hessian`] at
/// seeded points drawn uniformly from [-2, 2]ⁿ.
pub fn derivative_report(
    spec: &BenchmarkSpec,
    grad_points: usize,
    hess_points: usize,
    h: f64,
) -> DerivativeReport {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x00DE_C0DE);
    let u = Uniform::new_inclusive(-2.0, 2.0);
    let point =
        |rng: &mut ChaCha8Rng| -> Array1<f64> { (0..spec.dim).map(|_| u.sample(rng)).collect() };
    let obj = &spec.objective;
    let mut max_grad_err: f64 = 0.0;
    for _ in 0..grad_points {
        let x = point(&mut rng);
        let fd = fd_gradient(obj, &x.view(), h).expect("dimension is consistent");
        let an = obj.gradient(&x.view());
        max_grad_err = max_grad_err.max(relative_error_vec(&an.view(), &fd.view()));
    }
    let max_hess_err = if obj.has_hessian() {
        let mut worst: f64 = 0.0;
        for _ in 0..hess_points {
            let x = point(&mut rng);
            let fd = fd_hessian(obj, &x.view(), h).expect("dimension is consistent");
            let an = obj.hessian(&x.view()).expect("objective has a Hessian");
            worst = worst.max(relative_error_mat(&an.view(), &fd.view()));
        }
        Some(worst)
    } else {
        None
    };
    DerivativeReport {
        name: spec.name.clone(),
        max_grad_err,
        max_hess_err,
    }
}
