//! SINR and rate regions: membership, weak Pareto boundary points, radial
//! boundary search, Monte Carlo boundary clouds and midpoint convexity probes.
//!
//! Rates are in nats: `r = ln(1 + s)`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mappings::{InterferenceMapping, PolyhedralMonotoneNorm};
use crate::scalar::{format_significant, Real};
use crate::spectral::{asymptotic_radius, scaled_eigenpair, DEFAULT_MAX_ITER};

/// Largest rate accepted before `exp` would overflow.
pub const MAX_RATE: f64 = 700.0;

/// Band used when checking cloud points against one.
pub const CLOUD_BAND: f64 = 1e-6;

const MAX_BRACKET_STEPS: usize = 200;
const MAX_ROOT_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Sinr,
    Rate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport<T> {
    pub membership: Membership,
    pub spectral_radius: T,
    /// False for boundary points of the unconstrained region, which is open.
    pub achievable: bool,
}

/// A region together with the space in which its points are expressed.
///
/// Without a norm the query refers to the unconstrained region, described by
/// the asymptotic mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionQuery<T> {
    pub mapping: InterferenceMapping<T>,
    pub norm: Option<PolyhedralMonotoneNorm<T>>,
    pub space: Space,
    /// Tolerance of the inner eigen-iteration.
    pub eigen_tol: T,
    pub max_iter: usize,
}

impl<T: Real> RegionQuery<T> {
    pub fn constrained(
        mapping: impl Into<InterferenceMapping<T>>,
        norm: PolyhedralMonotoneNorm<T>,
        space: Space,
    ) -> Result<Self> {
        let mapping = mapping.into();
        if norm.dim() != mapping.dim() {
            return invalid("norm and mapping dimensions differ");
        }
        Ok(Self {
            mapping,
            norm: Some(norm),
            space,
            eigen_tol: T::default_tol(),
            max_iter: DEFAULT_MAX_ITER,
        })
    }

    pub fn unconstrained(mapping: impl Into<InterferenceMapping<T>>, space: Space) -> Self {
        Self {
            mapping: mapping.into(),
            norm: None,
            space,
            eigen_tol: T::default_tol(),
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    pub fn in_space(&self, space: Space) -> Self {
        Self { space, ..self.clone() }
    }

    pub fn dim(&self) -> usize {
        self.mapping.dim()
    }

    /// `ρ(diag(s)T‖·‖)` or `ρ(diag(s)T∞)`, with an optional warm start for
    /// the eigen-iteration. Returns the eigenvector in the constrained case.
    fn radius_at(&self, s: &[T], warm: Option<&[T]>) -> Result<(T, Option<Vec<T>>)> {
        match &self.norm {
            Some(norm) => Ok(
                match scaled_eigenpair(s, &self.mapping, norm, self.eigen_tol, self.max_iter, warm)? {
                    Some(r) => (r.value, Some(r.vector)),
                    None => (T::zero(), None),
                },
            ),
            None => {
                let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] > T::zero()).collect();
                if keep.is_empty() {
                    return Ok((T::zero(), None));
                }
                let sub_s: Vec<T> = keep.iter().map(|&i| s[i]).collect();
                let sub = self.mapping.restrict(&keep)?.scaled(&sub_s)?;
                Ok((asymptotic_radius(&sub.asymptotic())?, None))
            }
        }
    }

    fn to_sinr(&self, v: &[T]) -> Result<Vec<T>> {
        match self.space {
            Space::Sinr => Ok(v.to_vec()),
            Space::Rate => rates_to_sinr(v),
        }
    }
}

/// `s_n = e^{r_n} − 1`, rejecting rates above [`MAX_RATE`].
pub fn rates_to_sinr<T: Real>(r: &[T]) -> Result<Vec<T>> {
    if let Some(i) = r.iter().position(|&v| !(v <= T::lit(MAX_RATE))) {
        return invalid(format!("rate {i} exceeds {MAX_RATE} nats or is not a number"));
    }
    Ok(r.iter().map(|&v| v.exp_m1()).collect())
}

/// `r_n = ln(1 + s_n)`.
pub fn sinr_to_rates<T: Real>(s: &[T]) -> Vec<T> {
    s.iter().map(|&v| v.ln_1p()).collect()
}

/// A point on the weak Pareto boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint<T> {
    /// Power vector with `‖p‖ = 1`; absent for the unconstrained region, whose
    /// boundary is not attained.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power: Option<Vec<T>>,
    pub sinr: Vec<T>,
    pub rate: Vec<T>,
    pub radius_check: T,
}

fn classify<T: Real>(rho: T, tol: T, constrained: bool) -> MembershipReport<T> {
    let membership = if (rho - T::one()).abs() <= tol {
        Membership::Boundary
    } else if rho < T::one() {
        Membership::Interior
    } else {
        Membership::Exterior
    };
    MembershipReport {
        membership,
        spectral_radius: rho,
        achievable: membership == Membership::Interior || (constrained && membership == Membership::Boundary),
    }
}

/// Classifies a positive SINR vector.
pub fn sinr_membership<T: Real>(q: &RegionQuery<T>, s: &[T], tol: T) -> Result<MembershipReport<T>> {
    if s.len() != q.dim() {
        return invalid("SINR vector dimension does not match the region");
    }
    if s.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
        return invalid("SINR vector must be positive and finite");
    }
    let (rho, _) = q.radius_at(s, None)?;
    Ok(classify(rho, tol, q.norm.is_some()))
}

/// Classifies a positive rate vector (nats).
pub fn rate_membership<T: Real>(q: &RegionQuery<T>, r: &[T], tol: T) -> Result<MembershipReport<T>> {
    if r.iter().any(|&v| !(v > T::zero())) {
        return invalid("rate vector must be positive");
    }
    sinr_membership(q, &rates_to_sinr(r)?, tol)
}

/// Classifies `v` in the query's own space.
pub fn membership<T: Real>(q: &RegionQuery<T>, v: &[T], tol: T) -> Result<MembershipReport<T>> {
    match q.space {
        Space::Sinr => sinr_membership(q, v, tol),
        Space::Rate => rate_membership(q, v, tol),
    }
}

/// SINR and rates produced by a full-budget power vector `p > 0`, `‖p‖ = 1`.
pub fn pareto_point_from_power<T: Real>(
    mapping: &InterferenceMapping<T>,
    norm: &PolyhedralMonotoneNorm<T>,
    p: &[T],
) -> Result<BoundaryPoint<T>> {
    let n = mapping.dim();
    if p.len() != n || norm.dim() != n {
        return invalid("power vector, mapping and norm dimensions differ");
    }
    if p.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
        return invalid("power vector must be positive; remove silent users first");
    }
    let np = norm.value(p);
    let band = T::lit(1e-12).max(T::epsilon() * T::lit(8.0));
    if (np - T::one()).abs() > band {
        return invalid(format!("power vector has norm {np}, expected 1"));
    }
    let t = mapping.eval(p)?;
    let sinr: Vec<T> = p.iter().zip(&t).map(|(&pi, &ti)| pi / ti).collect();
    let rate = sinr_to_rates(&sinr);
    let radius_check = scaled_eigenpair(&sinr, mapping, norm, T::default_tol(), DEFAULT_MAX_ITER, Some(p))?
        .map_or(T::zero(), |r| r.value);
    Ok(BoundaryPoint {
        power: Some(p.to_vec()),
        sinr,
        rate,
        radius_check,
    })
}

/// Scale `t*` at which `t*·d` reaches the boundary, and that boundary point.
///
/// In SINR space `t* = 1/g(d)`. In rate space `t*` solves
/// `ρ(diag(e^{t d} − 1) T‖·‖) = 1` by a bracketed Illinois iteration on the
/// logarithm of the radius, stopping when the bracket is narrower than
/// `tol·t` or the radius is within `tol` of one. Entries of `d` may be zero;
/// those users are then silent.
pub fn radial_boundary<T: Real>(q: &RegionQuery<T>, d: &[T], tol: T) -> Result<(T, BoundaryPoint<T>)> {
    if d.len() != q.dim() {
        return invalid("direction dimension does not match the region");
    }
    if d.iter().any(|&v| !(v >= T::zero()) || !v.is_finite()) || d.iter().all(|&v| v == T::zero()) {
        return invalid("direction must be nonnegative, finite and nonzero");
    }
    if !(tol > T::zero()) {
        return invalid("tolerance must be positive");
    }
    match q.space {
        Space::Sinr => {
            let (g, vec) = q.radius_at(d, None)?;
            if !(g > T::zero()) {
                return Err(unbounded());
            }
            let t = T::one() / g;
            let sinr: Vec<T> = d.iter().map(|&v| v * t).collect();
            let (radius_check, _) = q.radius_at(&sinr, vec.as_deref())?;
            let point = BoundaryPoint {
                power: vec,
                rate: sinr_to_rates(&sinr),
                sinr,
                radius_check,
            };
            Ok((t, point))
        }
        Space::Rate => radial_rate(q, d, tol),
    }
}

fn unbounded() -> Error {
    Error::InvalidArgument("the region is unbounded along this direction".into())
}

fn radial_rate<T: Real>(q: &RegionQuery<T>, d: &[T], tol: T) -> Result<(T, BoundaryPoint<T>)> {
    let dmax = d.iter().copied().fold(T::zero(), T::max);
    let t_cap = T::lit(MAX_RATE) / dmax;
    let mut warm: Option<Vec<T>> = None;
    let eval = |t: T, warm: &mut Option<Vec<T>>| -> Result<T> {
        let s: Vec<T> = d.iter().map(|&v| (t * v).exp_m1()).collect();
        let (rho, vec) = q.radius_at(&s, warm.as_deref())?;
        if vec.is_some() {
            *warm = vec;
        }
        Ok(rho)
    };

    let mut t = T::one().min(t_cap);
    let mut h = eval(t, &mut warm)?;
    let (mut lo, mut hlo, mut hi, mut hhi);
    if h < T::one() {
        lo = t;
        hlo = h;
        let mut steps = 0;
        loop {
            if t >= t_cap || steps == MAX_BRACKET_STEPS {
                return Err(unbounded());
            }
            t = (t * T::two()).min(t_cap);
            h = eval(t, &mut warm)?;
            steps += 1;
            if h >= T::one() {
                break;
            }
            lo = t;
            hlo = h;
        }
        hi = t;
        hhi = h;
    } else {
        hi = t;
        hhi = h;
        let mut steps = 0;
        loop {
            if steps == MAX_BRACKET_STEPS {
                return Err(Error::Inconsistent("could not bracket the rate boundary".into()));
            }
            t = t * T::half();
            h = eval(t, &mut warm)?;
            steps += 1;
            if h < T::one() {
                break;
            }
            hi = t;
            hhi = h;
        }
        lo = t;
        hlo = h;
    }

    // f(t) = ln ρ(t); f(lo) < 0 ≤ f(hi).
    let f = |rho: T| if rho > T::zero() { rho.ln() } else { -T::infinity() };
    let (mut flo, mut fhi) = (f(hlo), f(hhi));
    let mut side = 0i8;
    let (mut best_t, mut best_h) = if (hhi - T::one()).abs() <= (hlo - T::one()).abs() {
        (hi, hhi)
    } else {
        (lo, hlo)
    };
    for _ in 0..MAX_ROOT_STEPS {
        if (best_h - T::one()).abs() <= tol || hi - lo <= tol * hi {
            break;
        }
        let mut mid = if flo.is_finite() && fhi > flo {
            hi - fhi * (hi - lo) / (fhi - flo)
        } else {
            (lo + hi) * T::half()
        };
        if !(mid > lo && mid < hi) {
            mid = (lo + hi) * T::half();
        }
        let hm = eval(mid, &mut warm)?;
        let fm = f(hm);
        if (hm - T::one()).abs() < (best_h - T::one()).abs() {
            best_t = mid;
            best_h = hm;
        }
        if hm >= T::one() {
            hi = mid;
            fhi = fm;
            if side == 1 {
                flo = flo * T::half();
            }
            side = 1;
        } else {
            lo = mid;
            flo = fm;
            if side == -1 {
                fhi = fhi * T::half();
            }
            side = -1;
        }
        if (best_h - T::one()).abs() > tol && hi - lo <= tol * hi {
            best_t = (lo + hi) * T::half();
            best_h = eval(best_t, &mut warm)?;
        }
    }
    let rate: Vec<T> = d.iter().map(|&v| v * best_t).collect();
    let sinr = rates_to_sinr(&rate)?;
    let (radius_check, vec) = q.radius_at(&sinr, warm.as_deref())?;
    Ok((
        best_t,
        BoundaryPoint {
            power: vec,
            sinr,
            rate,
            radius_check,
        },
    ))
}

fn random_power<T: Real>(rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    // `random::<f64>()` lies in [0, 1); `1 − u` lies in (0, 1].
    (0..n).map(|_| T::lit(1.0 - rng.random::<f64>())).collect()
}

/// `count` boundary points from powers drawn uniformly in `(0, 1]^N` and
/// rescaled to `‖p‖ = 1`. Point `i` uses the stream seeded with `seed ^ i`,
/// so the output does not depend on how the work is split across threads.
pub fn sample_pareto_cloud<T: Real>(
    mapping: &InterferenceMapping<T>,
    norm: &PolyhedralMonotoneNorm<T>,
    count: usize,
    seed: u64,
) -> Result<Vec<BoundaryPoint<T>>> {
    if norm.dim() != mapping.dim() {
        return invalid("norm and mapping dimensions differ");
    }
    let n = mapping.dim();
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ i as u64);
            let mut p: Vec<T> = random_power(&mut rng, n);
            let np = norm.value(&p);
            p.iter_mut().for_each(|v| *v /= np);
            pareto_point_from_power(mapping, norm, &p)
        })
        .collect()
}

/// Writes a cloud as CSV with columns `p1..pN,s1..sN,r1..rN,rho,units`,
/// numbers at 12 significant digits and rates in nats.
pub fn write_cloud_csv<T: Real, W: Write>(out: &mut W, dim: usize, points: &[BoundaryPoint<T>]) -> std::io::Result<()> {
    let mut header: Vec<String> = Vec::with_capacity(3 * dim + 2);
    for prefix in ["p", "s", "r"] {
        header.extend((1..=dim).map(|i| format!("{prefix}{i}")));
    }
    header.push("rho".into());
    header.push("units".into());
    writeln!(out, "{}", header.join(","))?;
    let fmt = |v: &T| format_significant(v.to_f64_lossy(), 12);
    for pt in points {
        let power = match &pt.power {
            Some(p) => p.iter().map(fmt).collect::<Vec<_>>(),
            None => vec![String::new(); dim],
        };
        let fields: Vec<String> = power
            .into_iter()
            .chain(pt.sinr.iter().map(fmt))
            .chain(pt.rate.iter().map(fmt))
            .chain([fmt(&pt.radius_check), "nats".to_string()])
            .collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport<T> {
    pub trials: usize,
    /// Midpoints classified as exterior.
    pub violations: usize,
    /// Largest `ρ(midpoint) − 1` observed.
    pub worst_margin: T,
}

/// `ρ` at the midpoint of `x` and `y`, both given in the query's space, minus
/// one. Positive values mean the midpoint lies outside the region.
pub fn midpoint_margin<T: Real>(q: &RegionQuery<T>, x: &[T], y: &[T]) -> Result<T> {
    if x.len() != q.dim() || y.len() != q.dim() {
        return invalid("probe points have the wrong dimension");
    }
    let mid: Vec<T> = x.iter().zip(y).map(|(&a, &b)| (a + b) * T::half()).collect();
    let s = q.to_sinr(&mid)?;
    if s.iter().any(|&v| !(v >= T::zero())) {
        return invalid("probe points must be nonnegative");
    }
    Ok(q.radius_at(&s, None)?.0 - T::one())
}

/// Tests whether midpoints of random interior pairs stay in the region.
///
/// Each point of a pair is a boundary point along a uniformly random direction,
/// scaled by a uniform factor in `(0, 1)`. A midpoint counts as a violation when
/// its radius exceeds `1 + tol`. Trial `i` uses the stream `seed ^ i`.
pub fn midpoint_convexity_probe<T: Real>(q: &RegionQuery<T>, trials: usize, seed: u64, tol: T) -> Result<ProbeReport<T>> {
    if trials == 0 {
        return invalid("at least one trial is required");
    }
    let n = q.dim();
    let root_tol = T::default_tol();
    let margins: Vec<T> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<T> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ i as u64);
            let mut point = || -> Result<Vec<T>> {
                let d: Vec<T> = random_power(&mut rng, n);
                let scale = T::lit(rng.random::<f64>());
                let (_, b) = radial_boundary(q, &d, root_tol)?;
                let v = match q.space {
                    Space::Sinr => b.sinr,
                    Space::Rate => b.rate,
                };
                Ok(v.into_iter().map(|x| x * scale).collect())
            };
            let x = point()?;
            let y = point()?;
            midpoint_margin(q, &x, &y)
        })
        .collect::<Result<_>>()?;
    let violations = margins.iter().filter(|&&m| m > tol).count();
    let worst_margin = margins.iter().copied().fold(T::neg_infinity(), T::max);
    Ok(ProbeReport {
        trials,
        violations,
        worst_margin,
    })
}
