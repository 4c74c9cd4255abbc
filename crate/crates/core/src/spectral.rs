//! Conditional eigenpairs, nonlinear spectral radii, fixed points and
//! feasibility under a power budget.
//!
//! For a standard mapping `T` and a monotone norm, the normalized iteration
//! `x ← T(x)/‖T(x)‖` converges to the unique `x` with `T(x) = λx`, `‖x‖ = 1`,
//! and `λ` equals the spectral radius of the norm-augmented mapping `T‖·‖`.
//! A SINR target `s` is achievable with `‖p‖ ≤ 1` exactly when
//! `ρ(diag(s)T‖·‖) ≤ 1`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Matrix};
use crate::mappings::{AsymptoticMapping, InterferenceMapping, PolyhedralMonotoneNorm};
use crate::scalar::{sup_norm, vec_to_f64, Real};

pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Upper limit on the number of row selections enumerated when computing the
/// spectral radius of an inf-of-linear asymptotic mapping.
pub const MAX_SELECTIONS: usize = 1 << 16;

/// Solution of `T(x) = λx`, `‖x‖ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult<T> {
    pub vector: Vec<T>,
    pub value: T,
    pub iterations: usize,
    /// `sup |T(x)/λ − x|` at exit.
    pub residual: T,
    /// Collatz–Wielandt bounds `min_i, max_i T‖·‖(x)_i / x_i` over the
    /// support of `x`.
    pub lower_bound: T,
    pub upper_bound: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeasibilityStatus {
    FeasibleInterior,
    FeasibleBoundary,
    Infeasible,
}

impl FeasibilityStatus {
    pub fn is_feasible(self) -> bool {
        !matches!(self, Self::Infeasible)
    }

    /// Classifies a spectral radius against one with band `tol`.
    pub fn classify<T: Real>(rho: T, tol: T) -> Self {
        if rho < T::one() - tol {
            Self::FeasibleInterior
        } else if (rho - T::one()).abs() <= tol {
            Self::FeasibleBoundary
        } else {
            Self::Infeasible
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityVerdict<T> {
    pub status: FeasibilityStatus,
    pub spectral_radius: T,
    /// Fixed point of `diag(s)T` when the target is feasible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power: Option<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FixedPointOutcome<T> {
    Converged { power: Vec<T>, iterations: usize },
    /// `ρ(T∞) ≥ 1`: no fixed point exists.
    Infeasible { asymptotic_radius: T },
}

fn non_convergence<T: Real>(iterations: usize, residual: T, x: &[T]) -> Error {
    Error::NonConvergence {
        iterations,
        residual: residual.to_f64_lossy(),
        last_iterate: vec_to_f64(x),
    }
}

fn check_tol<T: Real>(tol: T, max_iter: usize) -> Result<()> {
    if !(tol > T::zero()) {
        return invalid("tolerance must be positive");
    }
    if max_iter == 0 {
        return invalid("max_iter must be at least 1");
    }
    Ok(())
}

/// Normalized iteration from `1/‖1‖`.
pub fn conditional_eigenpair<T: Real>(
    t: &InterferenceMapping<T>,
    norm: &PolyhedralMonotoneNorm<T>,
    tol: T,
    max_iter: usize,
) -> Result<EigenResult<T>> {
    let ones = vec![T::one(); t.dim()];
    conditional_eigenpair_from(t, norm, &ones, tol, max_iter)
}

/// Normalized iteration from a caller-supplied positive start.
pub fn conditional_eigenpair_from<T: Real>(
    t: &InterferenceMapping<T>,
    norm: &PolyhedralMonotoneNorm<T>,
    start: &[T],
    tol: T,
    max_iter: usize,
) -> Result<EigenResult<T>> {
    check_tol(tol, max_iter)?;
    let n = t.dim();
    if norm.dim() != n || start.len() != n {
        return invalid("mapping, norm and start vector dimensions differ");
    }
    if start.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
        return invalid("start vector must be positive");
    }
    let s0 = norm.value(start);
    let mut x: Vec<T> = start.iter().map(|&v| v / s0).collect();
    let mut y = vec![T::zero(); n];
    let mut residual = T::infinity();
    for it in 1..=max_iter {
        t.eval_norm_augmented_into(norm, &x, &mut y);
        let lambda = norm.value(&y);
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(Error::Inconsistent(format!(
                "conditional eigen-iteration produced norm {lambda}"
            )));
        }
        residual = T::zero();
        for (yi, &xi) in y.iter_mut().zip(&x) {
            *yi /= lambda;
            residual = residual.max((*yi - xi).abs());
        }
        if residual <= tol {
            let (lower_bound, upper_bound) = collatz_wielandt(&x, &y, lambda);
            return Ok(EigenResult {
                vector: x,
                value: lambda,
                iterations: it,
                residual,
                lower_bound,
                upper_bound,
            });
        }
        std::mem::swap(&mut x, &mut y);
    }
    Err(non_convergence(max_iter, residual, &x))
}

/// `y` holds `T(x)/λ`.
fn collatz_wielandt<T: Real>(x: &[T], y: &[T], lambda: T) -> (T, T) {
    x.iter()
        .zip(y)
        .filter(|(&xi, _)| xi > T::zero())
        .map(|(&xi, &yi)| lambda * yi / xi)
        .fold((T::infinity(), T::zero()), |(lo, hi), r| (lo.min(r), hi.max(r)))
}

/// Conditional eigenpair of `diag(s)T` under `norm` for `s ≥ 0`.
///
/// Coordinates with `s_n = 0` are deleted: the mapping and norm are
/// restricted to the remaining users and the returned vector carries zeros at
/// the deleted positions. Returns `None` when `s = 0`. `start`, if given, is a
/// full-dimension warm start; its entries on the kept coordinates must be
/// positive.
pub fn scaled_eigenpair<T: Real>(
    s: &[T],
    t: &InterferenceMapping<T>,
    norm: &PolyhedralMonotoneNorm<T>,
    tol: T,
    max_iter: usize,
    start: Option<&[T]>,
) -> Result<Option<EigenResult<T>>> {
    let n = t.dim();
    if s.len() != n || norm.dim() != n {
        return invalid("scaling vector, mapping and norm dimensions differ");
    }
    if s.iter().any(|&v| !(v >= T::zero()) || !v.is_finite()) {
        return invalid("scaling vector must be nonnegative and finite");
    }
    let keep: Vec<usize> = (0..n).filter(|&i| s[i] > T::zero()).collect();
    if keep.is_empty() {
        return Ok(None);
    }
    let warm = start.filter(|w| w.len() == n && keep.iter().all(|&i| w[i] > T::zero() && w[i].is_finite()));
    if keep.len() == n {
        let scaled = t.scaled(s)?;
        let res = match warm {
            Some(w) => conditional_eigenpair_from(&scaled, norm, w, tol, max_iter)?,
            None => conditional_eigenpair(&scaled, norm, tol, max_iter)?,
        };
        return Ok(Some(res));
    }
    let sub_s: Vec<T> = keep.iter().map(|&i| s[i]).collect();
    let sub_t = t.restrict(&keep)?.scaled(&sub_s)?;
    let sub_norm = norm.restrict(&keep)?;
    let res = match warm {
        Some(w) => {
            let sub_w: Vec<T> = keep.iter().map(|&i| w[i]).collect();
            conditional_eigenpair_from(&sub_t, &sub_norm, &sub_w, tol, max_iter)?
        }
        None => conditional_eigenpair(&sub_t, &sub_norm, tol, max_iter)?,
    };
    let mut vector = vec![T::zero(); n];
    for (&i, &v) in keep.iter().zip(&res.vector) {
        vector[i] = v;
    }
    Ok(Some(EigenResult { vector, ..res }))
}

/// `g(s) = ρ(diag(s)T‖·‖)` for `s ≥ 0`.
pub fn spectral_radius_scaled<T: Real>(
    s: &[T],
    t: &InterferenceMapping<T>,
    norm: &PolyhedralMonotoneNorm<T>,
    tol: T,
) -> Result<T> {
    Ok(scaled_eigenpair(s, t, norm, tol, DEFAULT_MAX_ITER, None)?.map_or(T::zero(), |r| r.value))
}

/// Classical spectral radius from a dense eigenvalue computation.
pub fn spectral_radius_linear<T: Real>(m: &Matrix<T>) -> Result<T> {
    if !m.is_square() {
        return invalid("spectral radius of a non-square matrix");
    }
    linalg::spectral_radius(m)
}

/// Spectral radius of an asymptotic mapping.
///
/// For `x_n ↦ min_y g_{n,y}ᵗx` the value is the smallest spectral radius over
/// all matrices obtained by choosing one `g_{n,y}` per row.
pub fn asymptotic_radius<T: Real>(a: &AsymptoticMapping<T>) -> Result<T> {
    match a {
        AsymptoticMapping::Linear(m) => spectral_radius_linear(m),
        AsymptoticMapping::InfHomogeneous(rows) => {
            let n = rows.len();
            let total = rows
                .iter()
                .try_fold(1usize, |acc, r| acc.checked_mul(r.len()))
                .filter(|&c| c <= MAX_SELECTIONS);
            let Some(total) = total else {
                return Err(Error::Unsupported(format!(
                    "more than {MAX_SELECTIONS} row selections in the asymptotic mapping"
                )));
            };
            let mut choice = vec![0usize; n];
            let mut best = T::infinity();
            for _ in 0..total {
                let sel: Vec<Vec<T>> = (0..n).map(|i| rows[i][choice[i]].clone()).collect();
                best = best.min(spectral_radius_linear(&Matrix::from_rows(&sel)?)?);
                for i in 0..n {
                    choice[i] += 1;
                    if choice[i] < rows[i].len() {
                        break;
                    }
                    choice[i] = 0;
                }
            }
            Ok(best)
        }
    }
}

/// Fixed point of `T` by `p ← T(p)` from `T(0)`, after checking `ρ(T∞) < 1`.
pub fn fixed_point<T: Real>(t: &InterferenceMapping<T>, tol: T, max_iter: usize) -> Result<FixedPointOutcome<T>> {
    fixed_point_with(t, tol, T::default_classification_tol(), max_iter)
}

/// [`fixed_point`] with an explicit band for the `ρ(T∞) < 1` test.
pub fn fixed_point_with<T: Real>(
    t: &InterferenceMapping<T>,
    tol: T,
    classification_tol: T,
    max_iter: usize,
) -> Result<FixedPointOutcome<T>> {
    check_tol(tol, max_iter)?;
    let rho = asymptotic_radius(&t.asymptotic())?;
    if !(rho < T::one() - classification_tol) {
        return Ok(FixedPointOutcome::Infeasible { asymptotic_radius: rho });
    }
    let n = t.dim();
    let mut p = t.eval(&vec![T::zero(); n])?;
    let mut next = vec![T::zero(); n];
    let mut change = T::infinity();
    for it in 1..=max_iter {
        t.eval_into(&p, &mut next);
        change = next
            .iter()
            .zip(&p)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
            / sup_norm(&next);
        std::mem::swap(&mut p, &mut next);
        if change <= tol {
            return Ok(FixedPointOutcome::Converged { power: p, iterations: it });
        }
    }
    Err(non_convergence(max_iter, change, &p))
}

/// Verdict for the SINR target `s > 0` under the budget `‖p‖ ≤ 1`.
///
/// `tol` is the band around one used for classification; the eigen-iteration
/// runs at the default precision for `T`.
pub fn feasible_under_constraint<T: Real>(
    t: &InterferenceMapping<T>,
    norm: &PolyhedralMonotoneNorm<T>,
    s: &[T],
    tol: T,
) -> Result<FeasibilityVerdict<T>> {
    if s.len() != t.dim() {
        return invalid("SINR target dimension does not match the mapping");
    }
    if s.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
        return invalid("SINR target must be positive");
    }
    if !(tol >= T::zero()) {
        return invalid("classification tolerance must be nonnegative");
    }
    let rho = spectral_radius_scaled(s, t, norm, T::default_tol())?;
    let status = FeasibilityStatus::classify(rho, tol);
    let power = if status.is_feasible() {
        match fixed_point_with(&t.scaled(s)?, T::default_tol(), tol, DEFAULT_MAX_ITER)? {
            FixedPointOutcome::Converged { power, .. } => Some(power),
            FixedPointOutcome::Infeasible { .. } => None,
        }
    } else {
        None
    };
    Ok(FeasibilityVerdict {
        status,
        spectral_radius: rho,
        power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Lu;
    use crate::mappings::{AffineInterferenceModel, AffinePiece, InfFamily};

    fn example() -> InterferenceMapping<f64> {
        AffineInterferenceModel::from_f64(&[&[0.5, 0.2], &[0.1, 0.4]], &[0.1, 0.1])
            .unwrap()
            .into()
    }

    fn linf(n: usize) -> PolyhedralMonotoneNorm<f64> {
        PolyhedralMonotoneNorm::scaled_linf(n, 1.0).unwrap()
    }

    // Largest root of x² − tr·x + det.
    fn rho2(a: [[f64; 2]; 2]) -> f64 {
        let tr = a[0][0] + a[1][1];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        0.5 * (tr + (tr * tr - 4.0 * det).sqrt())
    }

    #[test]
    fn constant_mapping_converges_at_once() {
        let t: InterferenceMapping<f64> =
            AffineInterferenceModel::new(Matrix::zeros(2, 2), vec![1.0, 1.0]).unwrap().into();
        let r = conditional_eigenpair(&t, &linf(2), 1e-10, 10).unwrap();
        assert_eq!(r.vector, vec![1.0, 1.0]);
        assert_eq!(r.value, 1.0);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn two_user_eigenvalue_matches_closed_form() {
        let want = rho2([[0.6, 0.2], [0.2, 0.4]]).max(rho2([[0.5, 0.3], [0.1, 0.5]]));
        let r = conditional_eigenpair(&example(), &linf(2), 1e-12, DEFAULT_MAX_ITER).unwrap();
        assert!((r.value - want).abs() < 1e-10, "{} vs {want}", r.value);
        assert!((r.value - 0.723_606_797_749_979).abs() < 1e-10);
        assert!(r.lower_bound <= r.value + 1e-12 && r.value <= r.upper_bound + 1e-12);
        assert!((linf(2).eval(&r.vector).unwrap() - 1.0).abs() < 1e-12);
        let g = spectral_radius_scaled(&[1.0, 1.0], &example(), &linf(2), 1e-12).unwrap();
        assert!((g - want).abs() < 1e-10);
    }

    #[test]
    fn scalar_closed_form() {
        let (b, sigma, p_max) = (2.0, 0.5, 0.2);
        let t: InterferenceMapping<f64> =
            AffineInterferenceModel::from_f64(&[&[0.0]], &[sigma / b]).unwrap().into();
        let norm = PolyhedralMonotoneNorm::scaled_linf(1, p_max).unwrap();
        let r = conditional_eigenpair(&t, &norm, 1e-12, 100).unwrap();
        assert!((r.value - sigma / (b * p_max)).abs() < 1e-14);
        let v = feasible_under_constraint(&t, &norm, &[b * p_max / sigma], 1e-9).unwrap();
        assert_eq!(v.status, FeasibilityStatus::FeasibleBoundary);
        assert!((v.power.unwrap()[0] - p_max).abs() < 1e-9);
    }

    #[test]
    fn zero_scaling_and_homogeneity() {
        let t = example();
        assert_eq!(spectral_radius_scaled(&[0.0, 0.0], &t, &linf(2), 1e-12).unwrap(), 0.0);
        let g1 = spectral_radius_scaled(&[0.7, 1.3], &t, &linf(2), 1e-12).unwrap();
        let g2 = spectral_radius_scaled(&[1.4, 2.6], &t, &linf(2), 1e-12).unwrap();
        assert!((g2 - 2.0 * g1).abs() < 1e-10);
        // s = (1, 0): only user 0 remains with m = 0.5, u = 0.1.
        let g = spectral_radius_scaled(&[1.0, 0.0], &t, &linf(2), 1e-12).unwrap();
        assert!((g - 0.6).abs() < 1e-12);
        let eps = spectral_radius_scaled(&[1.0, 1e-9], &t, &linf(2), 1e-12).unwrap();
        assert!((eps - g).abs() < 1e-6);
        let full = scaled_eigenpair(&[1.0, 0.0], &t, &linf(2), 1e-12, 1000, None)
            .unwrap()
            .unwrap();
        assert_eq!(full.vector, vec![1.0, 0.0]);
    }

    #[test]
    fn linear_radius_examples() {
        let perm = Matrix::<f64>::from_f64_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!((spectral_radius_linear(&perm).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(spectral_radius_linear(&Matrix::<f64>::zeros(3, 3)).unwrap(), 0.0);
                let m = Matrix::<f64>::from_f64_rows(&[&[11.0, 10.0, 1.0], &[1.0, 11.0, 10.0], &[10.0, 10.0, 10.0]]);
        let r = spectral_radius_linear(&m).unwrap();
        assert!((r - 24.494_211_812_263_49).abs() < 1e-11, "{r:.17e}");
    }

    #[test]
    fn fixed_point_matches_linear_solve() {
        let t = example();
        let FixedPointOutcome::Converged { power, .. } = fixed_point(&t, 1e-13, DEFAULT_MAX_ITER).unwrap() else {
            panic!("expected a fixed point");
        };
        let a = Matrix::<f64>::identity(2).add_outer(&[-1.0, 0.0], &[0.5, 0.2]);
        let a = a.add_outer(&[0.0, -1.0], &[0.1, 0.4]);
        let want = Lu::factor(&a).unwrap().solve(&[0.1, 0.1]);
        for (p, w) in power.iter().zip(&want) {
            assert!((p - w).abs() < 1e-11);
        }
        let free: InterferenceMapping<f64> =
            AffineInterferenceModel::new(Matrix::zeros(2, 2), vec![1.0, 1.0]).unwrap().into();
        let FixedPointOutcome::Converged { power, iterations } =
            fixed_point(&free.scaled(&[2.0, 3.0]).unwrap(), 1e-12, 10).unwrap()
        else {
            panic!("expected a fixed point");
        };
        assert_eq!(power, vec![2.0, 3.0]);
        assert_eq!(iterations, 1);
    }

    #[test]
    fn fixed_point_reports_infeasible() {
        let t = example();
        let s = [1.0, 1.0];
        let rho = spectral_radius_linear(&t.as_affine().unwrap().matrix().scale_rows(&s)).unwrap();
        let s = [1.05 / rho, 1.05 / rho];
        match fixed_point(&t.scaled(&s).unwrap(), 1e-12, 1000).unwrap() {
            FixedPointOutcome::Infeasible { asymptotic_radius } => assert!((asymptotic_radius - 1.05).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn feasibility_verdicts() {
        let t = example();
        let v = feasible_under_constraint(&t, &linf(2), &[1.0, 1.0], 1e-9).unwrap();
        assert_eq!(v.status, FeasibilityStatus::FeasibleInterior);
        assert!(linf(2).eval(v.power.as_ref().unwrap()).unwrap() < 1.0);
        let g = v.spectral_radius;
        let v = feasible_under_constraint(&t, &linf(2), &[1.1 / g, 1.1 / g], 1e-9).unwrap();
        assert_eq!(v.status, FeasibilityStatus::Infeasible);
        assert!(v.power.is_none());
        let v = feasible_under_constraint(&t, &linf(2), &[1.0 / g, 1.0 / g], 1e-9).unwrap();
        assert_eq!(v.status, FeasibilityStatus::FeasibleBoundary);
        assert!((linf(2).eval(v.power.as_ref().unwrap()).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn non_convergence_carries_iterate() {
        let err = conditional_eigenpair(&example(), &linf(2), 1e-15, 2).unwrap_err();
        match err {
            Error::NonConvergence { iterations, last_iterate, .. } => {
                assert_eq!(iterations, 2);
                assert_eq!(last_iterate.len(), 2);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(conditional_eigenpair(&example(), &linf(2), 0.0, 2).is_err());
    }

    #[test]
    fn inf_family_asymptotic_radius() {
        // Coordinate 0 may pick row (0, 2) or (0, 0.5); coordinate 1 is fixed.
        let fam = InfFamily::<f64>::new(vec![
            vec![
                AffinePiece { c: vec![0.0, 2.0], sigma: 1.0, b: 1.0 },
                AffinePiece { c: vec![0.0, 0.5], sigma: 3.0, b: 1.0 },
            ],
            vec![AffinePiece { c: vec![0.5, 0.0], sigma: 1.0, b: 1.0 }],
        ])
        .unwrap();
        let t = InterferenceMapping::from(fam);
        let rho = asymptotic_radius(&t.asymptotic()).unwrap();
        assert!((rho - 0.5).abs() < 1e-14);
        let FixedPointOutcome::Converged { power, .. } = fixed_point(&t, 1e-13, 10_000).unwrap() else {
            panic!("expected a fixed point");
        };
        let back = t.eval(&power).unwrap();
        for (a, b) in back.iter().zip(&power) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn single_precision() {
        let t: InterferenceMapping<f32> =
            AffineInterferenceModel::from_f64(&[&[0.5, 0.2], &[0.1, 0.4]], &[0.1, 0.1]).unwrap().into();
        let norm = PolyhedralMonotoneNorm::<f32>::scaled_linf(2, 1.0).unwrap();
        let r = conditional_eigenpair(&t, &norm, f32::default_tol(), DEFAULT_MAX_ITER).unwrap();
        assert!((r.value - 0.723_606_8).abs() < 1e-4);
    }
}
