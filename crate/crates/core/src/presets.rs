//! Matrices and vectors from the worked examples, for one-command
//! reproduction.

use crate::linalg::Matrix;
use crate::scalar::{vec_from_f64, Real};

/// A matrix with positive definite symmetric part whose `l_M` is not
/// quasiconvex.
pub fn conjecture_matrix<T: Real>() -> Matrix<T> {
    Matrix::from_f64_rows(&[&[11.0, 10.0, 1.0], &[1.0, 11.0, 10.0], &[10.0, 10.0, 10.0]])
}

/// `(M, x₁, x₂, α)` exhibiting `l_M(αx₁ + (1 − α)x₂) > max(l_M(x₁), l_M(x₂))`.
pub fn conjecture_instance<T: Real>() -> (Matrix<T>, Vec<T>, Vec<T>, T) {
    (
        conjecture_matrix(),
        vec_from_f64(&[0.5, 0.1, 1.0]),
        vec_from_f64(&[0.5, 0.5, 0.5]),
        T::lit(0.9),
    )
}

/// Two users with strong interference that is still an inverse Z-matrix
/// (determinant one).
pub fn remark_matrix<T: Real>() -> Matrix<T> {
    Matrix::from_f64_rows(&[&[2.0, 10.0], &[0.1, 1.0]])
}

/// Three-user cell-less interference matrix where users 1 and 3 fail the 2×2
/// screen.
pub fn scenario_matrix<T: Real>() -> Matrix<T> {
    Matrix::from_f64_rows(&[
        &[0.34, 1.4e-4, 9.4e-2],
        &[5.8e-2, 0.44, 4.3e-2],
        &[3.4, 7.4e-4, 0.5],
    ])
}

/// Per-user power limit used with [`scenario_matrix`], in watts.
pub const SCENARIO_P_MAX: f64 = 0.2;
