use serde::{Deserialize, Deserializer, Serialize};

use super::{AffineInterferenceModel, PolyhedralMonotoneNorm};
use crate::error::{invalid, Result};
use crate::linalg::Matrix;
use crate::scalar::{dot, Real};

/// One affine candidate `(cᵗp + σ) / b` for a coordinate of an [`InfFamily`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece<T> {
    pub c: Vec<T>,
    pub sigma: T,
    pub b: T,
}

impl<T: Real> AffinePiece<T> {
    fn value(&self, p: &[T], noise_scale: T) -> T {
        (dot(&self.c, p) + self.sigma * noise_scale) / self.b
    }
}

/// Coordinatewise minimum over finite families of affine pieces:
/// `t_n(p) = min_y (c_yᵗp + σ_y) / b_y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfFamily<T> {
    pieces: Vec<Vec<AffinePiece<T>>>,
}

#[derive(Deserialize)]
struct InfFamilyJson<T> {
    pieces: Vec<Vec<AffinePiece<T>>>,
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for InfFamily<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = InfFamilyJson::<T>::deserialize(deserializer)?;
        Self::new(raw.pieces).map_err(serde::de::Error::custom)
    }
}

impl<T: Real> InfFamily<T> {
    /// `pieces[n]` lists the candidates for coordinate `n`. Every `c` must be
    /// nonnegative with length `N`, every `σ` and `b` positive.
    pub fn new(pieces: Vec<Vec<AffinePiece<T>>>) -> Result<Self> {
        let n = pieces.len();
        if n == 0 {
            return invalid("inf family needs at least one coordinate");
        }
        for (i, coord) in pieces.iter().enumerate() {
            if coord.is_empty() {
                return invalid(format!("coordinate {i} has no pieces"));
            }
            for (y, piece) in coord.iter().enumerate() {
                if piece.c.len() != n {
                    return invalid(format!("piece {y} of coordinate {i} has dimension {}", piece.c.len()));
                }
                if piece.c.iter().any(|&v| !v.is_finite() || v < T::zero()) {
                    return invalid(format!("piece {y} of coordinate {i} has a negative gain"));
                }
                if !(piece.sigma > T::zero()) || !(piece.b > T::zero()) || !piece.sigma.is_finite() || !piece.b.is_finite() {
                    return invalid(format!("piece {y} of coordinate {i} needs positive sigma and b"));
                }
            }
        }
        Ok(Self { pieces })
    }

    pub fn dim(&self) -> usize {
        self.pieces.len()
    }

    pub fn pieces(&self) -> &[Vec<AffinePiece<T>>] {
        &self.pieces
    }

    fn eval_with(&self, p: &[T], noise_scale: T, out: &mut [T]) {
        for (o, coord) in out.iter_mut().zip(&self.pieces) {
            *o = coord
                .iter()
                .map(|piece| piece.value(p, noise_scale))
                .fold(T::infinity(), T::min);
        }
    }

    fn map_pieces(&self, f: impl Fn(usize, &AffinePiece<T>) -> AffinePiece<T>) -> Self {
        Self {
            pieces: self
                .pieces
                .iter()
                .enumerate()
                .map(|(n, coord)| coord.iter().map(|piece| f(n, piece)).collect())
                .collect(),
        }
    }
}

/// Standard interference mapping: monotone, scalable and positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub enum InterferenceMapping<T> {
    Affine(AffineInterferenceModel<T>),
    InfFamily(InfFamily<T>),
}

impl<T> From<AffineInterferenceModel<T>> for InterferenceMapping<T> {
    fn from(model: AffineInterferenceModel<T>) -> Self {
        Self::Affine(model)
    }
}

impl<T> From<InfFamily<T>> for InterferenceMapping<T> {
    fn from(family: InfFamily<T>) -> Self {
        Self::InfFamily(family)
    }
}

impl<T: Real> InterferenceMapping<T> {
    pub fn dim(&self) -> usize {
        match self {
            Self::Affine(m) => m.dim(),
            Self::InfFamily(f) => f.dim(),
        }
    }

    pub fn as_affine(&self) -> Option<&AffineInterferenceModel<T>> {
        match self {
            Self::Affine(m) => Some(m),
            Self::InfFamily(_) => None,
        }
    }

    fn check_dim(&self, p: &[T]) -> Result<()> {
        if p.len() != self.dim() {
            return invalid(format!(
                "vector of dimension {} for a mapping of dimension {}",
                p.len(),
                self.dim()
            ));
        }
        Ok(())
    }

    /// `T(p)`.
    pub fn eval(&self, p: &[T]) -> Result<Vec<T>> {
        self.check_dim(p)?;
        let mut out = vec![T::zero(); self.dim()];
        self.eval_into(p, &mut out);
        Ok(out)
    }

    pub(crate) fn eval_into(&self, p: &[T], out: &mut [T]) {
        match self {
            Self::Affine(m) => m.eval_into(p, out),
            Self::InfFamily(f) => f.eval_with(p, T::one(), out),
        }
    }

    /// `T‖·‖(x)`, the noise term multiplied by `‖x‖`.
    pub(crate) fn eval_norm_augmented_into(&self, norm: &PolyhedralMonotoneNorm<T>, x: &[T], out: &mut [T]) {
        let nx = norm.value(x);
        match self {
            Self::Affine(m) => {
                m.matrix().mul_vec_into(x, out);
                for (o, &u) in out.iter_mut().zip(m.noise()) {
                    *o += u * nx;
                }
            }
            Self::InfFamily(f) => f.eval_with(x, nx, out),
        }
    }

    /// `diag(s) T` for positive `s`.
    pub fn scaled(&self, s: &[T]) -> Result<Self> {
        self.check_dim(s)?;
        if s.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
            return invalid("scaling vector must be positive and finite");
        }
        Ok(match self {
            Self::Affine(m) => Self::Affine(m.scaled(s)?),
            Self::InfFamily(f) => Self::InfFamily(f.map_pieces(|n, piece| AffinePiece {
                c: piece.c.clone(),
                sigma: piece.sigma,
                b: piece.b / s[n],
            })),
        })
    }

    /// Mapping seen by the users in `keep` when every other user is silent.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() || keep.iter().any(|&i| i >= self.dim()) {
            return invalid("restriction indices out of range");
        }
        Ok(match self {
            Self::Affine(m) => Self::Affine(m.restrict(keep)?),
            Self::InfFamily(f) => Self::InfFamily(InfFamily::new(
                keep.iter()
                    .map(|&n| {
                        f.pieces[n]
                            .iter()
                            .map(|piece| AffinePiece {
                                c: keep.iter().map(|&k| piece.c[k]).collect(),
                                sigma: piece.sigma,
                                b: piece.b,
                            })
                            .collect()
                    })
                    .collect(),
            )?),
        })
    }

    /// `x ↦ lim_{h→∞} T(hx)/h`.
    pub fn asymptotic(&self) -> AsymptoticMapping<T> {
        match self {
            Self::Affine(m) => AsymptoticMapping::Linear(m.matrix().clone()),
            Self::InfFamily(f) => AsymptoticMapping::InfHomogeneous(
                f.pieces
                    .iter()
                    .map(|coord| {
                        coord
                            .iter()
                            .map(|piece| piece.c.iter().map(|&c| c / piece.b).collect())
                            .collect()
                    })
                    .collect(),
            ),
        }
    }

    /// A constant `δ > 0` with `T(αx) + (α − 1)δ ≤ αT(x)` for all `α > 1`:
    /// the smallest noise-to-gain ratio over every piece.
    pub fn scalability_margin(&self) -> T {
        match self {
            Self::Affine(m) => m.noise().iter().copied().fold(T::infinity(), T::min),
            Self::InfFamily(f) => f
                .pieces
                .iter()
                .flatten()
                .map(|piece| piece.sigma / piece.b)
                .fold(T::infinity(), T::min),
        }
    }
}

/// Positively homogeneous limit of a standard mapping.
#[derive(Debug, Clone, PartialEq)]
pub enum AsymptoticMapping<T> {
    /// `x ↦ Mx`.
    Linear(Matrix<T>),
    /// `x_n ↦ min_y g_{n,y}ᵗ x`; `rows[n]` lists the `g_{n,y}`.
    InfHomogeneous(Vec<Vec<Vec<T>>>),
}

impl<T: Real> AsymptoticMapping<T> {
    pub fn dim(&self) -> usize {
        match self {
            Self::Linear(m) => m.nrows(),
            Self::InfHomogeneous(rows) => rows.len(),
        }
    }

    pub fn eval(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.dim() {
            return invalid("vector dimension does not match the asymptotic mapping");
        }
        Ok(match self {
            Self::Linear(m) => m.mul_vec(x),
            Self::InfHomogeneous(rows) => rows
                .iter()
                .map(|coord| coord.iter().map(|g| dot(g, x)).fold(T::infinity(), T::min))
                .collect(),
        })
    }
}

/// `T‖·‖`: the base mapping with its noise scaled by `‖x‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormAugmentedMapping<T> {
    base: InterferenceMapping<T>,
    norm: PolyhedralMonotoneNorm<T>,
}

impl<T: Real> NormAugmentedMapping<T> {
    pub fn new(base: InterferenceMapping<T>, norm: PolyhedralMonotoneNorm<T>) -> Result<Self> {
        if base.dim() != norm.dim() {
            return invalid(format!(
                "mapping of dimension {} with a norm of dimension {}",
                base.dim(),
                norm.dim()
            ));
        }
        Ok(Self { base, norm })
    }

    pub fn base(&self) -> &InterferenceMapping<T> {
        &self.base
    }

    pub fn norm(&self) -> &PolyhedralMonotoneNorm<T> {
        &self.norm
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn eval(&self, x: &[T]) -> Result<Vec<T>> {
        self.base.check_dim(x)?;
        let mut out = vec![T::zero(); self.dim()];
        self.eval_into(x, &mut out);
        Ok(out)
    }

    pub(crate) fn eval_into(&self, x: &[T], out: &mut [T]) {
        self.base.eval_norm_augmented_into(&self.norm, x, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model() -> AffineInterferenceModel<f64> {
        AffineInterferenceModel::from_f64(&[&[0.5, 0.2], &[0.1, 0.4]], &[0.1, 0.1]).unwrap()
    }

    fn linf() -> PolyhedralMonotoneNorm<f64> {
        PolyhedralMonotoneNorm::scaled_linf(2, 1.0).unwrap()
    }

    #[test]
    fn affine_evaluation() {
        let t = InterferenceMapping::from(model());
        assert_relative_eq!(t.eval(&[1.0, 1.0]).unwrap().as_slice(), [0.8, 0.6].as_slice(), max_relative = 1e-12);
        let constant = InterferenceMapping::from(
            AffineInterferenceModel::new(Matrix::zeros(2, 2), vec![1.0, 1.0]).unwrap(),
        );
        assert_eq!(constant.eval(&[5.0, 7.0]).unwrap(), vec![1.0, 1.0]);
        assert!(t.eval(&[1.0]).is_err());
    }

    #[test]
    fn degenerate_family_equals_affine() {
        let m = model();
        let pieces: Vec<Vec<AffinePiece<f64>>> = (0..2)
            .map(|n| {
                let piece = AffinePiece {
                    c: m.matrix().row(n).to_vec(),
                    sigma: m.noise()[n],
                    b: 1.0,
                };
                vec![piece.clone(), piece]
            })
            .collect();
        let fam = InterferenceMapping::from(InfFamily::new(pieces).unwrap());
        let aff = InterferenceMapping::from(m);
        for k in 0..10 {
            let p = [0.37 * k as f64, 1.9 - 0.13 * k as f64];
            assert_eq!(fam.eval(&p).unwrap(), aff.eval(&p).unwrap());
        }
    }

    #[test]
    fn norm_augmented_examples() {
        let g = NormAugmentedMapping::new(model().into(), linf()).unwrap();
        assert_eq!(g.eval(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert_relative_eq!(g.eval(&[1.0, 1.0]).unwrap().as_slice(), [0.8, 0.6].as_slice(), max_relative = 1e-12);
        assert_relative_eq!(g.eval(&[2.0, 2.0]).unwrap().as_slice(), [1.6, 1.2].as_slice(), max_relative = 1e-12);
        let bad = PolyhedralMonotoneNorm::scaled_linf(3, 1.0).unwrap();
        assert!(NormAugmentedMapping::new(model().into(), bad).is_err());
    }

    #[test]
    fn asymptotic_drops_noise() {
        let t = InterferenceMapping::from(model());
        let a = t.asymptotic();
        assert_eq!(a, AsymptoticMapping::Linear(model().matrix().clone()));
        let h = 1e6;
        let x = [0.3, 0.9];
        let big = t.eval(&[h * x[0], h * x[1]]).unwrap();
        let lim = a.eval(&x).unwrap();
        for (b, l) in big.iter().zip(&lim) {
            assert!((b / h - l).abs() <= 0.1 / h * (1.0 + 1e-9));
        }
        let zero = InterferenceMapping::from(
            AffineInterferenceModel::new(Matrix::zeros(2, 2), vec![1.0, 2.0]).unwrap(),
        );
        assert_eq!(zero.asymptotic().eval(&[3.0, 4.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn family_scaling_and_restriction() {
        let fam = InfFamily::<f64>::new(vec![
            vec![
                AffinePiece { c: vec![0.0, 1.0, 0.5], sigma: 1.0, b: 2.0 },
                AffinePiece { c: vec![0.0, 0.2, 2.0], sigma: 0.5, b: 1.0 },
            ],
            vec![AffinePiece { c: vec![1.0, 0.0, 1.0], sigma: 1.0, b: 1.0 }],
            vec![AffinePiece { c: vec![0.3, 0.3, 0.0], sigma: 2.0, b: 4.0 }],
        ])
        .unwrap();
        let t = InterferenceMapping::from(fam);
        let p = [1.0, 2.0, 3.0];
        let base = t.eval(&p).unwrap();
        let scaled = t.scaled(&[2.0, 3.0, 0.5]).unwrap().eval(&p).unwrap();
        for ((b, s), f) in base.iter().zip(&scaled).zip([2.0, 3.0, 0.5]) {
            assert!((b * f - s).abs() < 1e-14);
        }
        let r = t.restrict(&[0, 2]).unwrap();
        let full = t.eval(&[1.0, 0.0, 3.0]).unwrap();
        let red = r.eval(&[1.0, 3.0]).unwrap();
        assert_eq!(red, vec![full[0], full[2]]);
        assert_eq!(t.scalability_margin(), 0.5);
        let json = serde_json::to_string(&t).unwrap();
        let back: InterferenceMapping<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }
}
