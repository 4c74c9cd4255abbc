//! Convexity certificates based on inverse Z-matrices.
//!
//! A nonnegative matrix is an inverse Z-matrix when its inverse exists and has
//! nonpositive off-diagonal entries. If the interference matrix `M` (or every
//! `M + u a_kᵗ` under a polyhedral budget) passes, the SINR and rate regions
//! are convex.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{symmetric_eigenvalues, Lu, Matrix};
use crate::mappings::{AffineInterferenceModel, PolyhedralMonotoneNorm};
use crate::scalar::Real;
use crate::spectral::spectral_radius_linear;

/// Default relative tolerance for the Z-matrix sign test.
pub const DEFAULT_Z_TOL: f64 = 1e-9;
/// Default relative tolerance of the self-interference shift search.
pub const DEFAULT_SHIFT_TOL: f64 = 1e-6;
/// Largest shift tried before the search gives up.
pub const SHIFT_CAP: f64 = 1e12;
/// Threshold on the smallest eigenvalue of `(M + Mᵗ)/2` for the PSD test.
pub const PSD_TOL: f64 = 1e-9;

/// True iff every off-diagonal entry is at most `tol` times the largest
/// magnitude entry.
pub fn is_z_matrix<T: Real>(a: &Matrix<T>, tol: T) -> bool {
    a.is_square() && off_diag_max(a) <= tol * a.max_abs()
}

fn off_diag_max<T: Real>(a: &Matrix<T>) -> T {
    let n = a.nrows();
    let mut best = T::neg_infinity();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                best = best.max(a[(i, j)]);
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InverseZReason {
    /// The inverse exists and is a Z-matrix.
    Certified,
    NotSquare,
    NegativeEntry,
    /// A zero diagonal entry rules out an inverse Z-matrix.
    ZeroDiagonal,
    Singular,
    /// Condition number above `1/tol`.
    IllConditioned,
    /// The inverse has a positive off-diagonal entry.
    PositiveOffDiagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseZCheck<T> {
    pub inverse_z: bool,
    pub reason: InverseZReason,
    /// Largest off-diagonal entry of the inverse divided by its largest
    /// magnitude entry; absent when no inverse was computed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub off_diag_max: Option<T>,
}

impl<T> InverseZCheck<T> {
    fn rejected(reason: InverseZReason) -> Self {
        Self {
            inverse_z: false,
            reason,
            off_diag_max: None,
        }
    }
}

/// Inverse Z-matrix test with a reason code.
pub fn inverse_z_check<T: Real>(a: &Matrix<T>, tol: T) -> InverseZCheck<T> {
    if !a.is_square() || a.nrows() == 0 {
        return InverseZCheck::rejected(InverseZReason::NotSquare);
    }
    if !a.is_nonnegative() || !a.all_finite() {
        return InverseZCheck::rejected(InverseZReason::NegativeEntry);
    }
    if (0..a.nrows()).any(|i| a[(i, i)] == T::zero()) {
        return InverseZCheck::rejected(InverseZReason::ZeroDiagonal);
    }
    let Ok(lu) = Lu::factor(a) else {
        return InverseZCheck::rejected(InverseZReason::Singular);
    };
    let inv = lu.inverse();
    let cond = a.norm_one() * inv.norm_one();
    if !(cond * tol <= T::one()) {
        return InverseZCheck::rejected(InverseZReason::IllConditioned);
    }
    let scale = inv.max_abs();
    let rel = if a.nrows() == 1 { T::zero() } else { off_diag_max(&inv) / scale };
    let inverse_z = rel <= tol;
    InverseZCheck {
        inverse_z,
        reason: if inverse_z {
            InverseZReason::Certified
        } else {
            InverseZReason::PositiveOffDiagonal
        },
        off_diag_max: Some(rel),
    }
}

pub fn is_inverse_z<T: Real>(a: &Matrix<T>, tol: T) -> bool {
    inverse_z_check(a, tol).inverse_z
}

/// Pairs `(i, j)`, `i < j`, 0-based, whose 2×2 principal minor is not
/// positive. Any such pair rules out an inverse Z-matrix.
pub fn det2_screen<T: Real>(m: &Matrix<T>) -> Vec<(usize, usize)> {
    let n = m.nrows();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let det = m[(i, i)] * m[(j, j)] - m[(i, j)] * m[(j, i)];
            if !(det > T::zero()) {
                out.push((i, j));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Overall {
    /// Every `M + u a_kᵗ` is inverse-Z: the budget-constrained regions are
    /// convex.
    ZCompatibleConstrained,
    /// `M` is inverse-Z: the unconstrained regions are convex.
    ZCompatibleUnconstrained,
    NotCertified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixVerdict<T> {
    pub label: String,
    pub inverse_z: bool,
    pub reason: InverseZReason,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub off_diag_max: Option<T>,
    /// 1-based user pairs failing the 2×2 screen on this matrix.
    pub failing_pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport<T> {
    pub matrices_tested: Vec<String>,
    pub verdicts: Vec<MatrixVerdict<T>>,
    /// 1-based user pairs failing the 2×2 screen on any tested matrix.
    pub failing_pairs: Vec<(usize, usize)>,
    pub overall: Overall,
}

impl<T> CertificateReport<T> {
    /// True when the report certifies convexity of the regions it was asked
    /// about: the constrained ones when a norm was supplied, else the
    /// unconstrained ones.
    pub fn certifies(&self, constrained: bool) -> bool {
        match self.overall {
            Overall::ZCompatibleConstrained => true,
            Overall::ZCompatibleUnconstrained => !constrained,
            Overall::NotCertified => false,
        }
    }
}

fn verdict<T: Real>(label: String, a: &Matrix<T>, tol: T) -> MatrixVerdict<T> {
    let check = inverse_z_check(a, tol);
    MatrixVerdict {
        label,
        inverse_z: check.inverse_z,
        reason: check.reason,
        off_diag_max: check.off_diag_max,
        failing_pairs: det2_screen(a).into_iter().map(|(i, j)| (i + 1, j + 1)).collect(),
    }
}

/// Tests `M` and, with a norm, every `M + u a_kᵗ`.
pub fn zcompat_certificate<T: Real>(
    model: &AffineInterferenceModel<T>,
    norm: Option<&PolyhedralMonotoneNorm<T>>,
    tol: T,
) -> Result<CertificateReport<T>> {
    let mut verdicts = vec![verdict("M".to_string(), model.matrix(), tol)];
    if let Some(norm) = norm {
        for (k, g) in model.constrained_matrices(norm)?.iter().enumerate() {
            verdicts.push(verdict(format!("M+u·a{}ᵗ", k + 1), g, tol));
        }
    }
    let unconstrained_ok = verdicts[0].inverse_z;
    let constrained_ok = norm.is_some() && verdicts[1..].iter().all(|v| v.inverse_z);
    let overall = if constrained_ok {
        Overall::ZCompatibleConstrained
    } else if unconstrained_ok {
        Overall::ZCompatibleUnconstrained
    } else {
        Overall::NotCertified
    };
    let mut failing_pairs: Vec<(usize, usize)> = verdicts.iter().flat_map(|v| v.failing_pairs.iter().copied()).collect();
    failing_pairs.sort_unstable();
    failing_pairs.dedup();
    Ok(CertificateReport {
        matrices_tested: verdicts.iter().map(|v| v.label.clone()).collect(),
        verdicts,
        failing_pairs,
        overall,
    })
}

fn shifted_certified<T: Real>(
    model: &AffineInterferenceModel<T>,
    norm: Option<&PolyhedralMonotoneNorm<T>>,
    alpha: T,
    z_tol: T,
) -> Result<bool> {
    let shifted = model.with_self_interference(alpha)?;
    if !is_inverse_z(shifted.matrix(), z_tol) {
        return Ok(false);
    }
    Ok(match norm {
        Some(norm) => shifted
            .constrained_matrices(norm)?
            .iter()
            .all(|g| is_inverse_z(g, z_tol)),
        None => true,
    })
}

/// True iff `αI + M` and, with a norm, every `αI + M + u a_kᵗ` is inverse-Z.
pub fn certified_with_shift<T: Real>(
    model: &AffineInterferenceModel<T>,
    norm: Option<&PolyhedralMonotoneNorm<T>>,
    alpha: T,
) -> Result<bool> {
    shifted_certified(model, norm, alpha, T::lit(DEFAULT_Z_TOL))
}

/// Smallest self-interference `α ≥ 0` that makes the shifted model pass the
/// certificate, found by bisection to relative accuracy `tol`. The returned
/// value always passes.
///
/// Requires every off-diagonal entry of `M` to be positive.
pub fn min_self_interference_shift<T: Real>(
    model: &AffineInterferenceModel<T>,
    norm: Option<&PolyhedralMonotoneNorm<T>>,
    tol: T,
) -> Result<T> {
    if !(tol > T::zero()) {
        return invalid("tolerance must be positive");
    }
    let m = model.matrix();
    let n = m.nrows();
    for i in 0..n {
        for j in 0..n {
            if i != j && !(m[(i, j)] > T::zero()) {
                return invalid(format!(
                    "off-diagonal entry ({}, {}) of M is not positive",
                    i + 1,
                    j + 1
                ));
            }
        }
    }
    let z_tol = T::lit(DEFAULT_Z_TOL);
    if shifted_certified(model, norm, T::zero(), z_tol)? {
        return Ok(T::zero());
    }
    let cap = T::lit(SHIFT_CAP);
    let mut lo = T::zero();
    let mut hi = m.max_abs().max(T::min_positive_value());
    while !shifted_certified(model, norm, hi, z_tol)? {
        lo = hi;
        hi = hi * T::two();
        if hi > cap {
            return Err(Error::NonConvergence {
                iterations: 0,
                residual: hi.to_f64_lossy(),
                last_iterate: vec![lo.to_f64_lossy()],
            });
        }
    }
    while hi - lo > tol * hi {
        let mid = (lo + hi) * T::half();
        if mid <= lo || mid >= hi {
            break;
        }
        if shifted_certified(model, norm, mid, z_tol)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureReport<T> {
    /// `M + Mᵗ` is positive semidefinite.
    pub sym_psd: bool,
    pub min_sym_eigenvalue: T,
    /// `l_M(αx₁ + (1 − α)x₂)`.
    pub lhs: T,
    /// `max(l_M(x₁), l_M(x₂))`.
    pub rhs: T,
    pub margin: T,
    pub quasiconvexity_violated: bool,
}

/// `l_M(v) = ρ(diag(v) M)`.
pub fn l_m<T: Real>(m: &Matrix<T>, v: &[T]) -> Result<T> {
    if v.len() != m.nrows() {
        return invalid("vector dimension does not match the matrix");
    }
    spectral_radius_linear(&m.scale_rows(v))
}

/// Checks quasiconvexity of `l_M` along the segment from `x₂` to `x₁` at
/// weight `α` on `x₁`, and whether `M + Mᵗ` is positive semidefinite.
pub fn conjecture_check<T: Real>(m: &Matrix<T>, x1: &[T], x2: &[T], alpha: T, tol: T) -> Result<ConjectureReport<T>> {
    if !m.is_square() {
        return invalid("matrix must be square");
    }
    if x1.iter().chain(x2).any(|&v| !(v >= T::zero())) {
        return invalid("x1 and x2 must be nonnegative");
    }
    if !(alpha > T::zero() && alpha < T::one()) {
        return invalid("alpha must lie in (0, 1)");
    }
    let sym = {
        let mt = m.transpose();
        let mut s = m.clone();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                s[(i, j)] = (m[(i, j)] + mt[(i, j)]) * T::half();
            }
        }
        s
    };
    let min_sym_eigenvalue = symmetric_eigenvalues(&sym)?
        .first()
        .copied()
        .unwrap_or(T::zero());
    let mix: Vec<T> = x1
        .iter()
        .zip(x2)
        .map(|(&a, &b)| alpha * a + (T::one() - alpha) * b)
        .collect();
    let lhs = l_m(m, &mix)?;
    let rhs = l_m(m, x1)?.max(l_m(m, x2)?);
    let margin = lhs - rhs;
    Ok(ConjectureReport {
        sym_psd: min_sym_eigenvalue >= -T::lit(PSD_TOL),
        min_sym_eigenvalue,
        lhs,
        rhs,
        margin,
        quasiconvexity_violated: margin > tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn mat(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_f64_rows(rows)
    }

    #[test]
    fn z_matrix_examples() {
        assert!(is_z_matrix(&Matrix::<f64>::identity(3), 1e-9));
        assert!(is_z_matrix(&mat(&[&[1.0, -2.0], &[-3.0, 4.0]]), 1e-9));
        assert!(!is_z_matrix(&mat(&[&[1.0, 0.5], &[-1.0, 1.0]]), 1e-9));
    }

    #[test]
    fn inverse_z_examples() {
        assert!(is_inverse_z(&presets::remark_matrix::<f64>(), 1e-9));
        let c = inverse_z_check(&presets::conjecture_matrix::<f64>(), 1e-9);
        assert!(!c.inverse_z);
        assert_eq!(c.reason, InverseZReason::PositiveOffDiagonal);
        // Largest off-diagonal inverse entry 9/91 over largest magnitude 111/910.
        assert!((c.off_diag_max.unwrap() - 90.0 / 111.0).abs() < 1e-12);
        let z = inverse_z_check(&mat(&[&[0.0, 1.0], &[1.0, 1.0]]), 1e-9);
        assert_eq!(z.reason, InverseZReason::ZeroDiagonal);
        let s = inverse_z_check(&mat(&[&[1.0, 2.0], &[2.0, 4.0]]), 1e-9);
        assert_eq!(s.reason, InverseZReason::Singular);
        let ill = inverse_z_check(&mat(&[&[1.0, 1.0], &[1.0, 1.0 + 1e-12]]), 1e-9);
        assert_eq!(ill.reason, InverseZReason::IllConditioned);
        assert!(is_inverse_z(&mat(&[&[3.0]]), 1e-9));
    }

    #[test]
    fn det2_examples() {
        assert_eq!(det2_screen(&presets::scenario_matrix::<f64>()), vec![(0, 2)]);
        assert!(det2_screen(&Matrix::<f64>::identity(4)).is_empty());
    }

    #[test]
    fn certificate_overall() {
        let scalar = AffineInterferenceModel::<f64>::from_f64(&[&[0.3]], &[0.1]).unwrap();
        let norm = PolyhedralMonotoneNorm::scaled_linf(1, 1.0).unwrap();
        let rep = zcompat_certificate(&scalar, Some(&norm), 1e-9).unwrap();
        assert_eq!(rep.overall, Overall::ZCompatibleConstrained);
        assert_eq!(rep.matrices_tested, vec!["M".to_string(), "M+u·a1ᵗ".to_string()]);

        let remark = AffineInterferenceModel::new(presets::remark_matrix(), vec![1e-3, 1e-3]).unwrap();
        let small = PolyhedralMonotoneNorm::new(vec![vec![1e-3, 0.0], vec![0.0, 1e-3]]).unwrap();
        let rep = zcompat_certificate(&remark, Some(&small), 1e-9).unwrap();
        assert_eq!(rep.overall, Overall::ZCompatibleConstrained);
        assert!(rep.certifies(true));

        let vi = AffineInterferenceModel::new(presets::scenario_matrix(), vec![0.01; 3]).unwrap();
        let rep = zcompat_certificate(&vi, Some(&PolyhedralMonotoneNorm::scaled_linf(3, 0.2).unwrap()), 1e-9).unwrap();
        assert_eq!(rep.overall, Overall::NotCertified);
        assert!(rep.failing_pairs.contains(&(1, 3)));
        assert!(rep.verdicts.iter().all(|v| !v.inverse_z));
    }

    #[test]
    fn shift_of_permutation_matrix() {
        // det(αI + P) = α² − 1, so the tiny-noise model needs α ≈ 1.
        let model = AffineInterferenceModel::<f64>::from_f64(&[&[0.0, 1.0], &[1.0, 0.0]], &[1e-300, 1e-300]).unwrap();
        let alpha = min_self_interference_shift(&model, None, 1e-9).unwrap();
        assert!((alpha - 1.0).abs() < 1e-8, "{alpha}");
        for extra in [0.1, 1.0, 10.0] {
            assert!(certified_with_shift(&model, None, alpha + extra).unwrap());
        }
        assert!(!certified_with_shift(&model, None, alpha - 1e-3).unwrap());
        let certified = AffineInterferenceModel::<f64>::from_f64(&[&[2.0, 0.1], &[0.1, 2.0]], &[0.1, 0.1]).unwrap();
        assert_eq!(min_self_interference_shift(&certified, None, 1e-6).unwrap(), 0.0);
        let zero_off = AffineInterferenceModel::<f64>::from_f64(&[&[1.0, 0.0], &[1.0, 1.0]], &[0.1, 0.1]).unwrap();
        assert!(matches!(min_self_interference_shift(&zero_off, None, 1e-6), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn conjecture_counterexample() {
        let (m, x1, x2, alpha) = presets::conjecture_instance::<f64>();
        let rep = conjecture_check(&m, &x1, &x2, alpha, 0.0).unwrap();
        assert!(rep.sym_psd);
        assert!(rep.quasiconvexity_violated);
        assert!((rep.min_sym_eigenvalue - 0.482_474_86).abs() < 1e-7);
        assert!((rep.lhs - 12.355_430_962_846_839).abs() < 1e-10);
        assert!((rep.margin - 0.050_712_679_754_591_15).abs() < 1e-10);
    }

    #[test]
    fn conjecture_trivial_cases() {
        let d = mat(&[&[2.0, 0.0, 0.0], &[0.0, 3.0, 0.0], &[0.0, 0.0, 1.0]]);
        let rep = conjecture_check(&d, &[0.5, 0.1, 1.0], &[0.2, 0.9, 0.4], 0.3, 1e-12).unwrap();
        assert!(!rep.quasiconvexity_violated);
        let (m, x1, _, _) = presets::conjecture_instance::<f64>();
        let rep = conjecture_check(&m, &x1, &x1, 0.5, 0.0).unwrap();
        assert_eq!(rep.lhs, rep.rhs);
        assert!(conjecture_check(&m, &x1, &x1, 1.0, 0.0).is_err());
    }
}
