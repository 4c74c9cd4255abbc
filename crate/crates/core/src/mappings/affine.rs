use serde::{Deserialize, Deserializer, Serialize};

use super::PolyhedralMonotoneNorm;
use crate::error::{invalid, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Affine interference model `T(p) = M p + u`.
///
/// `M` holds interference gains normalized by each user's beamforming gain and
/// `u` the normalized noise. When built from raw channel terms, `M =
/// diag(b)⁻¹ Cᵗ` and `u = diag(b)⁻¹ σ`, where column `n` of `C` lists the
/// interference seen by user `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineInterferenceModel<T> {
    #[serde(rename = "M")]
    m: Matrix<T>,
    u: Vec<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<Vec<T>>,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    c: Option<Matrix<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<Vec<T>>,
}

#[derive(Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
struct ModelJson<T> {
    #[serde(rename = "M")]
    m: Option<Matrix<T>>,
    u: Option<Vec<T>>,
    b: Option<Vec<T>>,
    #[serde(rename = "C")]
    c: Option<Matrix<T>>,
    sigma: Option<Vec<T>>,
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for AffineInterferenceModel<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = ModelJson::<T>::deserialize(deserializer)?;
        let model = match (raw.m, raw.u, raw.b, raw.c, raw.sigma) {
            (Some(m), Some(u), None, None, None) => Self::new(m, u),
            (m, u, Some(b), Some(c), Some(sigma)) => {
                let from_raw = Self::from_raw(b, c, sigma).map_err(D::Error::custom)?;
                if let Some(m) = m {
                    check_close("M", m.as_slice(), from_raw.m.as_slice()).map_err(D::Error::custom)?;
                }
                if let Some(u) = u {
                    check_close("u", &u, &from_raw.u).map_err(D::Error::custom)?;
                }
                Ok(from_raw)
            }
            (None, _, _, _, _) => return Err(D::Error::custom("missing field `M`")),
            (_, None, _, _, _) => return Err(D::Error::custom("missing field `u`")),
            _ => {
                return Err(D::Error::custom(
                    "fields `b`, `C` and `sigma` must be given together",
                ))
            }
        };
        model.map_err(D::Error::custom)
    }
}

fn check_close<T: Real>(field: &str, given: &[T], derived: &[T]) -> Result<()> {
    let tol = T::lit(1e-9).max(T::epsilon() * T::lit(64.0));
    if given.len() != derived.len() {
        return invalid(format!("field `{field}` has the wrong size"));
    }
    for (i, (&g, &d)) in given.iter().zip(derived).enumerate() {
        if (g - d).abs() > tol * g.abs().max(d.abs()).max(T::min_positive_value()) {
            return invalid(format!(
                "field `{field}` entry {i} disagrees with diag(b)^-1 C^t / diag(b)^-1 sigma"
            ));
        }
    }
    Ok(())
}

impl<T: Real> AffineInterferenceModel<T> {
    pub fn new(m: Matrix<T>, u: Vec<T>) -> Result<Self> {
        if !m.is_square() {
            return invalid(format!("M must be square, got {}x{}", m.nrows(), m.ncols()));
        }
        if m.nrows() == 0 {
            return invalid("model must have at least one user");
        }
        if u.len() != m.nrows() {
            return invalid(format!("u has length {}, expected {}", u.len(), m.nrows()));
        }
        if !m.all_finite() || !m.is_nonnegative() {
            return invalid("M must be finite and entrywise nonnegative");
        }
        if let Some(i) = u.iter().position(|&v| !(v > T::zero()) || !v.is_finite()) {
            return invalid(format!("u[{i}] must be positive and finite"));
        }
        Ok(Self {
            m,
            u,
            b: None,
            c: None,
            sigma: None,
        })
    }

    /// Builds `M = diag(b)⁻¹ Cᵗ`, `u = diag(b)⁻¹ σ` and keeps the raw terms.
    pub fn from_raw(b: Vec<T>, c: Matrix<T>, sigma: Vec<T>) -> Result<Self> {
        let n = b.len();
        if c.nrows() != n || c.ncols() != n || sigma.len() != n {
            return invalid("b, C and sigma must describe the same number of users");
        }
        if let Some(i) = b.iter().position(|&v| !(v > T::zero()) || !v.is_finite()) {
            return invalid(format!("b[{i}] must be positive and finite"));
        }
        let mut m = c.transpose();
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] /= b[i];
            }
        }
        let u = sigma.iter().zip(&b).map(|(&s, &bb)| s / bb).collect();
        let mut model = Self::new(m, u)?;
        model.b = Some(b);
        model.c = Some(c);
        model.sigma = Some(sigma);
        Ok(model)
    }

    pub fn from_f64(m: &[&[f64]], u: &[f64]) -> Result<Self> {
        Self::new(Matrix::from_f64_rows(m), u.iter().map(|&x| T::lit(x)).collect())
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// Interference matrix `M`.
    pub fn matrix(&self) -> &Matrix<T> {
        &self.m
    }

    /// Normalized noise `u`.
    pub fn noise(&self) -> &[T] {
        &self.u
    }

    pub fn raw(&self) -> Option<(&[T], &Matrix<T>, &[T])> {
        match (&self.b, &self.c, &self.sigma) {
            (Some(b), Some(c), Some(s)) => Some((b, c, s)),
            _ => None,
        }
    }

    /// `M p + u`.
    pub fn eval(&self, p: &[T]) -> Result<Vec<T>> {
        if p.len() != self.dim() {
            return invalid(format!("power vector of dimension {} for {} users", p.len(), self.dim()));
        }
        let mut out = vec![T::zero(); self.dim()];
        self.eval_into(p, &mut out);
        Ok(out)
    }

    pub(crate) fn eval_into(&self, p: &[T], out: &mut [T]) {
        self.m.mul_vec_into(p, out);
        for (o, &u) in out.iter_mut().zip(&self.u) {
            *o += u;
        }
    }

    /// `diag(s) T` as another affine model; `s` must be positive.
    pub fn scaled(&self, s: &[T]) -> Result<Self> {
        if s.len() != self.dim() {
            return invalid("scaling vector has the wrong dimension");
        }
        if s.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
            return invalid("scaling vector must be positive");
        }
        let u = self.u.iter().zip(s).map(|(&u, &si)| u * si).collect();
        Self::new(self.m.scale_rows(s), u)
    }

    /// Model restricted to the users in `keep` (the others are silent).
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        Self::new(
            self.m.principal_submatrix(keep),
            keep.iter().map(|&i| self.u[i]).collect(),
        )
    }

    /// `αI + M` with the same noise: extra self-interference on every link.
    pub fn with_self_interference(&self, alpha: T) -> Result<Self> {
        if alpha < T::zero() {
            return invalid("self-interference shift must be nonnegative");
        }
        Self::new(self.m.add_diagonal(alpha), self.u.clone())
    }

    /// The matrices `M + u a_kᵗ`, one per norm generator.
    pub fn constrained_matrices(&self, norm: &PolyhedralMonotoneNorm<T>) -> Result<Vec<Matrix<T>>> {
        if norm.dim() != self.dim() {
            return invalid("norm and model dimensions differ");
        }
        Ok(norm
            .generators()
            .iter()
            .map(|a| self.m.add_outer(&self.u, a))
            .collect())
    }

    pub fn cast<U: Real>(&self) -> AffineInterferenceModel<U> {
        let cv = |v: &Vec<T>| v.iter().map(|x| U::lit(x.to_f64_lossy())).collect::<Vec<U>>();
        AffineInterferenceModel {
            m: self.m.cast(),
            u: cv(&self.u),
            b: self.b.as_ref().map(cv),
            c: self.c.as_ref().map(Matrix::cast),
            sigma: self.sigma.as_ref().map(cv),
        }
    }
}
