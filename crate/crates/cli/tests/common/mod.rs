//! Random instances and independent dense-algebra oracles shared by the
//! integration targets.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use urt_core::certificates::zcompat_certificate;
use urt_core::{AffineModel, Matrix64, Norm};

pub fn to_dense(m: &Matrix64) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.nrows(), m.ncols(), m.as_slice())
}

/// Largest eigenvalue modulus from nalgebra's Schur decomposition.
pub fn dense_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max_k ρ(diag(s)(M + u a_kᵗ))`, the radius of `diag(s)T‖·‖` for an affine
/// model under a polyhedral norm.
pub fn constrained_radius_oracle(model: &AffineModel, norm: &Norm, s: &[f64]) -> f64 {
    let m = to_dense(model.matrix());
    let u = DVector::from_column_slice(model.noise());
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(s));
    norm.generators()
        .iter()
        .map(|a| {
            let a = DVector::from_column_slice(a);
            dense_radius(&(&d * (&m + &u * a.transpose())))
        })
        .fold(0.0, f64::max)
}

/// Fixed point of `p = diag(s)(Mp + u)` by a dense solve, if `ρ(diag(s)M) < 1`.
pub fn linear_fixed_point(model: &AffineModel, s: &[f64]) -> Option<Vec<f64>> {
    let n = model.dim();
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(s));
    let dm = &d * to_dense(model.matrix());
    if dense_radius(&dm) >= 1.0 {
        return None;
    }
    let rhs = &d * DVector::from_column_slice(model.noise());
    let sys = DMatrix::identity(n, n) - dm;
    sys.lu().solve(&rhs).map(|p| p.iter().copied().collect())
}

pub fn polyhedral_value(norm: &Norm, p: &[f64]) -> f64 {
    norm.generators()
        .iter()
        .map(|a| a.iter().zip(p).map(|(x, y)| x * y.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Dense affine model with entries of `M` in `[0, scale)` and `u` in
/// `[0.01, 1)`.
pub fn random_model(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> AffineModel {
    let m: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>() * scale).collect();
    let u: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
    AffineModel::new(Matrix64::from_row_major(n, n, m).unwrap(), u).unwrap()
}

/// Per-user power limits `{e_n / p_max,n}` with limits in `[0.2, 2)`.
pub fn random_linf_norm(rng: &mut ChaCha8Rng, n: usize) -> Norm {
    let limits: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..2.0)).collect();
    Norm::per_user_limits(&limits).unwrap()
}

/// One to four random generators plus a weak `l∞` floor so every coordinate
/// is covered.
pub fn random_polyhedral_norm(rng: &mut ChaCha8Rng, n: usize) -> Norm {
    let k = rng.random_range(1..=4);
    let mut gens: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..n).map(|_| rng.random::<f64>() * 2.0).collect())
        .collect();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 0.1;
        gens.push(e);
    }
    Norm::new(gens).unwrap()
}

pub fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.05..1.0)).collect()
}

/// Self-interference-dominated model passing the constrained certificate
/// under a random per-user budget. Rejection sampling; returns the number of
/// draws used alongside the instance.
pub fn random_certified_model(rng: &mut ChaCha8Rng, n: usize) -> (AffineModel, Norm, usize) {
    for attempt in 1.. {
        let mut m = Matrix64::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = if i == j {
                    rng.random_range(0.2..0.6)
                } else {
                    rng.random::<f64>() * 0.2
                };
            }
        }
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(0.001..0.05)).collect();
        let model = AffineModel::new(m, u).unwrap();
        let norm = random_linf_norm(rng, n);
        let report = zcompat_certificate(&model, Some(&norm), 1e-9).unwrap();
        if report.certifies(true) {
            return (model, norm, attempt);
        }
    }
    unreachable!()
}
