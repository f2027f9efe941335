//! Textbook dense routines: Cholesky factorization, triangular solves, and
//! log-determinants.
//!
//! These back the from-scratch reference algorithms and validation checks.
//! They deliberately share no code with the incremental factor updates in
//! [`crate::chol`], so the two paths can cross-check each other.

use ndarray::Array2;

/// Dense lower-triangular Cholesky factor of a symmetric matrix.
///
/// Returns `None` when a pivot is not strictly positive, which for symmetric
/// input means the matrix is not positive definite. The strictly upper part
/// of the result is zero.
pub fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[(i, j)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Some(l)
}

/// Index (0-based) of the first non-positive pivot, or `None` if the
/// factorization succeeds. Used to report the offending leading minor.
pub fn first_bad_pivot(a: &Array2<f64>) -> Option<usize> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Some(i);
                }
                l[(i, j)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    None
}

/// log det(A) for symmetric positive definite A, via Cholesky.
/// Returns `None` when A is not positive definite.
pub fn log_det(a: &Array2<f64>) -> Option<f64> {
    let l = cholesky(a)?;
    Some(2.0 * (0..a.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>())
}

/// Solve L x = b for lower-triangular L by forward substitution.
pub fn solve_lower(l: &Array2<f64>, b: &[f64]) -> Vec<f64> {
    let n = l.nrows();
    debug_assert_eq!(b.len(), n);
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[(i, k)] * x[k];
        }
        x[i] = sum / l[(i, i)];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cholesky_two_by_two() {
        let a = array![[4.0, 2.0], [2.0, 3.0]];
        let l = cholesky(&a).unwrap();
        assert_eq!(l[(0, 0)], 2.0);
        assert_eq!(l[(1, 0)], 1.0);
        assert!((l[(1, 1)] - 2.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(l[(0, 1)], 0.0);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(cholesky(&a).is_none());
        assert_eq!(first_bad_pivot(&a), Some(1));
    }

    #[test]
    fn log_det_matches_product_of_pivots() {
        let a = array![[4.0, 2.0], [2.0, 3.0]];
        // det = 4*3 - 4 = 8
        assert!((log_det(&a).unwrap() - 8.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn solve_lower_roundtrip() {
        let a = array![[4.0, 2.0, 0.4], [2.0, 3.0, 0.1], [0.4, 0.1, 5.0]];
        let l = cholesky(&a).unwrap();
        let b = vec![1.0, -2.0, 0.5];
        let x = solve_lower(&l, &b);
        for i in 0..3 {
            let lx: f64 = (0..=i).map(|k| l[(i, k)] * x[k]).sum();
            assert!((lx - b[i]).abs() < 1e-12);
        }
    }
}
