use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Monotone norm `‖x‖ = max_k a_kᵗ|x|` given by nonnegative generators.
///
/// With generators `e_n / p_max` the unit ball is the per-user power budget
/// `p_n ≤ p_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyhedralMonotoneNorm<T> {
    generators: Vec<Vec<T>>,
}

#[derive(Deserialize)]
struct NormJson<T> {
    generators: Vec<Vec<T>>,
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for PolyhedralMonotoneNorm<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = NormJson::<T>::deserialize(deserializer)?;
        Self::new(raw.generators).map_err(serde::de::Error::custom)
    }
}

impl<T: Real> PolyhedralMonotoneNorm<T> {
    /// Validates the generators: equal nonzero dimension, entries finite and
    /// nonnegative, every generator nonzero, and every coordinate reached by
    /// some generator (otherwise the gauge is not a norm).
    pub fn new(generators: Vec<Vec<T>>) -> Result<Self> {
        let Some(first) = generators.first() else {
            return invalid("norm needs at least one generator");
        };
        let dim = first.len();
        if dim == 0 {
            return invalid("generators must have positive dimension");
        }
        for (k, a) in generators.iter().enumerate() {
            if a.len() != dim {
                return invalid(format!(
                    "generators[{k}] has dimension {}, expected {dim}",
                    a.len()
                ));
            }
            if a.iter().any(|&v| !v.is_finite() || v < T::zero()) {
                return invalid(format!("generators[{k}] has a negative or non-finite entry"));
            }
            if a.iter().all(|&v| v == T::zero()) {
                return invalid(format!("generators[{k}] is the zero vector"));
            }
        }
        if let Some(n) = (0..dim).find(|&n| generators.iter().all(|a| a[n] == T::zero())) {
            return invalid(format!("coordinate {n} is not covered by any generator"));
        }
        Ok(Self { generators })
    }

    /// `‖x‖ = ‖x‖∞ / p_max` in dimension `dim`.
    pub fn scaled_linf(dim: usize, p_max: T) -> Result<Self> {
        Self::per_user_limits(&vec![p_max; dim])
    }

    /// `‖x‖ = max_n |x_n| / p_max[n]`.
    pub fn per_user_limits(p_max: &[T]) -> Result<Self> {
        if p_max.iter().any(|&p| !(p > T::zero()) || !p.is_finite()) {
            return invalid("power limits must be positive and finite");
        }
        let n = p_max.len();
        Self::new(
            (0..n)
                .map(|k| {
                    let mut a = vec![T::zero(); n];
                    a[k] = T::one() / p_max[k];
                    a
                })
                .collect(),
        )
    }

    /// Total-power constraint `Σ|x_n| ≤ p_total`.
    pub fn total_power(dim: usize, p_total: T) -> Result<Self> {
        if !(p_total > T::zero()) {
            return invalid("total power must be positive");
        }
        Self::new(vec![vec![T::one() / p_total; dim]])
    }

    pub fn dim(&self) -> usize {
        self.generators[0].len()
    }

    pub fn generators(&self) -> &[Vec<T>] {
        &self.generators
    }

    /// `max_k a_kᵗ|x|`.
    pub fn eval(&self, x: &[T]) -> Result<T> {
        if x.len() != self.dim() {
            return invalid(format!(
                "vector of dimension {} for a norm of dimension {}",
                x.len(),
                self.dim()
            ));
        }
        Ok(self.value(x))
    }

    /// Evaluation without the dimension check.
    pub(crate) fn value(&self, x: &[T]) -> T {
        self.generators
            .iter()
            .map(|a| a.iter().zip(x).map(|(&ak, &xk)| ak * xk.abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// Norm on the coordinates in `keep`, obtained by evaluating the full norm
    /// on vectors that vanish elsewhere. Generators that vanish on `keep` are
    /// dropped.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let gens: Vec<Vec<T>> = self
            .generators
            .iter()
            .map(|a| keep.iter().map(|&i| a[i]).collect::<Vec<T>>())
            .filter(|a| a.iter().any(|&v| v > T::zero()))
            .collect();
        Self::new(gens)
    }

    /// Per-coordinate upper bounds when every generator has exactly one
    /// positive entry, so that the unit ball is a box.
    pub fn box_bounds(&self) -> Option<Vec<T>> {
        let n = self.dim();
        let mut bound = vec![T::infinity(); n];
        for a in &self.generators {
            let mut support = a.iter().enumerate().filter(|(_, &v)| v > T::zero());
            let (i, &v) = support.next()?;
            if support.next().is_some() {
                return None;
            }
            bound[i] = bound[i].min(T::one() / v);
        }
        Some(bound)
    }

    pub fn cast<U: Real>(&self) -> PolyhedralMonotoneNorm<U> {
        PolyhedralMonotoneNorm {
            generators: self
                .generators
                .iter()
                .map(|a| a.iter().map(|x| U::lit(x.to_f64_lossy())).collect())
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linf_identity_case() {
        let n = PolyhedralMonotoneNorm::<f64>::scaled_linf(2, 1.0).unwrap();
        assert_eq!(n.eval(&[0.3, 0.7]).unwrap(), 0.7);
    }

    #[test]
    fn l1_uses_absolute_values() {
        let n = PolyhedralMonotoneNorm::<f64>::new(vec![vec![1.0, 1.0]]).unwrap();
        assert!((n.eval(&[0.3, -0.7]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn per_user_budget_of_point_two_watts() {
        let n = PolyhedralMonotoneNorm::<f64>::scaled_linf(3, 0.2).unwrap();
        assert!((n.eval(&[0.2, 0.1, 0.05]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_generators() {
        assert!(PolyhedralMonotoneNorm::<f64>::new(vec![]).is_err());
        assert!(PolyhedralMonotoneNorm::<f64>::new(vec![vec![1.0, -0.1]]).is_err());
        assert!(PolyhedralMonotoneNorm::<f64>::new(vec![vec![1.0, 0.0], vec![0.0, 0.0]]).is_err());
        assert!(PolyhedralMonotoneNorm::<f64>::new(vec![vec![1.0, 0.0]]).is_err());
        assert!(PolyhedralMonotoneNorm::<f64>::new(vec![vec![1.0, 0.0], vec![1.0]]).is_err());
        let n = PolyhedralMonotoneNorm::<f64>::new(vec![vec![1.0, 1.0]]).unwrap();
        assert!(n.eval(&[1.0]).is_err());
    }

    #[test]
    fn restriction_drops_vanishing_generators() {
        let n = PolyhedralMonotoneNorm::<f64>::scaled_linf(3, 0.5).unwrap();
        let r = n.restrict(&[0, 2]).unwrap();
        assert_eq!(r.generators().len(), 2);
        assert_eq!(r.eval(&[0.25, 0.5]).unwrap(), 1.0);
        assert_eq!(n.box_bounds().unwrap(), vec![0.5; 3]);
        let l1 = PolyhedralMonotoneNorm::<f64>::new(vec![vec![1.0, 1.0]]).unwrap();
        assert!(l1.box_bounds().is_none());
    }

    #[test]
    fn json_round_trip_validates() {
        let n: PolyhedralMonotoneNorm<f64> =
            serde_json::from_str(r#"{"generators": [[5, 0], [0, 5]]}"#).unwrap();
        assert_eq!(n.dim(), 2);
        let back: PolyhedralMonotoneNorm<f64> =
            serde_json::from_str(&serde_json::to_string(&n).unwrap()).unwrap();
        assert_eq!(back, n);
        assert!(serde_json::from_str::<PolyhedralMonotoneNorm<f64>>(r#"{"generators": [[0, 0]]}"#).is_err());
    }
}
