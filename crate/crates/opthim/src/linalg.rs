//! Dense symmetric linear algebra helpers: Cholesky factorization and solves,
//! plus a Jacobi eigenvalue routine for small matrices.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

/// Lower-triangular Cholesky factor of a symmetric matrix, or `None` if the
/// matrix is not positive definite (a non-positive or non-finite pivot shows up).
pub fn cholesky(a: &ArrayView2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    debug_assert_eq!(a.ncols(), n);
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        // Split so row i can be dotted against earlier rows without aliasing.
        let (done, mut rest) = l.view_mut().split_at(ndarray::Axis(0), i);
        let mut row_i = rest.row_mut(0);
        let row_i = row_i.as_slice_mut().unwrap();
        for j in 0..i {
            let rj = done.row(j);
            let rj = rj.as_slice().unwrap();
            let sum = a[[i, j]] - dot(&row_i[..j], &rj[..j]);
            row_i[j] = sum / rj[j];
        }
        let diag = a[[i, i]] - dot(&row_i[..i], &row_i[..i]);
        if !diag.is_finite() || diag <= 0.0 {
            return None;
        }
        row_i[i] = diag.sqrt();
    }
    Some(l)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `L Lᵀ x = b` given the lower Cholesky factor.
pub fn cholesky_solve(l: &ArrayView2<f64>, b: &ArrayView1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = Array1::<f64>::zeros(n);
    for i in 0..n {
        let row = l.row(i);
        let row = row.as_slice().unwrap();
        let mut sum = b[i];
        sum -= dot(&row[..i], &y.as_slice().unwrap()[..i]);
        y[i] = sum / l[[i, i]];
    }
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[[k, i]] * x[k];
        }
        x[i] = sum / l[[i, i]];
    }
    x
}

/// Solves `A x = b` for symmetric positive-definite `A`; `None` if the
/// factorization fails.
pub fn solve_spd(a: &ArrayView2<f64>, b: &ArrayView1<f64>) -> Option<Array1<f64>> {
    let l = cholesky(a)?;
    Some(cholesky_solve(&l.view(), b))
}

/// Positive definiteness probe via Cholesky.
pub fn is_positive_definite(a: &ArrayView2<f64>) -> bool {
    cholesky(a).is_some()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
///
/// Intended for small matrices (tests and generator checks); cost is O(n³)
/// per sweep.
pub fn sym_eigenvalues(a: &ArrayView2<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut m = a.to_owned();
    let max_sweeps = 50;
    for _ in 0..max_sweeps {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[[i, j]] * m[[i, j]];
            }
        }
        if off.sqrt() <= 1e-14 * (1.0 + frobenius(&m.view())) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[[i, i]]).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eig
}

fn frobenius(a: &ArrayView2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn cholesky_identity() {
        let a = Array2::<f64>::eye(3);
        let l = cholesky(&a.view()).unwrap();
        assert_abs_diff_eq!(l[[0, 0]], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l[[2, 1]], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = array![[1.0, 0.0], [0.0, -1.0]];
        assert!(cholesky(&a.view()).is_none());
        assert!(!is_positive_definite(&a.view()));
    }

    #[test]
    fn solve_recovers_known_solution() {
        let a = array![[4.0, 1.0, 0.0], [1.0, 3.0, 0.5], [0.0, 0.5, 2.0]];
        let x_true = array![1.0, -2.0, 0.5];
        let b = a.dot(&x_true);
        let x = solve_spd(&a.view(), &b.view()).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(x[i], x_true[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn jacobi_eigenvalues_diag() {
        let a = array![[3.0, 0.0], [0.0, 1.0]];
        let eig = sym_eigenvalues(&a.view());
        assert_abs_diff_eq!(eig[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn jacobi_eigenvalues_rotated() {
        // eigenvalues of [[2,1],[1,2]] are 1 and 3
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let eig = sym_eigenvalues(&a.view());
        assert_abs_diff_eq!(eig[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig[1], 3.0, epsilon = 1e-12);
    }
}
