//! Line-search and trust-region methods for smooth unconstrained minimization.
//!
//! The crate is organized around a small set of building blocks:
//!
//! - [`objective`]: the objective-function contract ([`Objective`]) plus
//!   evaluation counting ([`EvalCounters`]).
//! - [`finite_diff`]: central-difference gradient/Hessian oracles used to
//!   validate analytic derivatives.
//! - [`linesearch`]: Armijo and Wolfe backtracking step-size selection.
//! - [`directions`]: steepest descent, damped Newton, BFGS, DFP and L-BFGS
//!   search directions.
//! - [`trustregion`]: quadratic-model trust region with exact-Hessian, SR1,
//!   BFGS and DFP models solved by Cauchy or truncated-CG steps.
//! - [`benchmarks`]: the eleven-problem evaluation suite with seeded
//!   generators and analytic derivatives.
//! - [`harness`]: run driver, YAML configuration, and CSV/JSON reporting.

pub mod benchmarks;
pub mod directions;
pub mod finite_diff;
pub mod harness;
pub mod linalg;
pub mod linesearch;
pub mod objective;
pub mod trustregion;

pub use benchmarks::{registry, BenchmarkSpec};
pub use harness::{load_config, run, RunRecord, SolverConfig};
pub use objective::{evaluate, EvalCounters, Objective, Want};
