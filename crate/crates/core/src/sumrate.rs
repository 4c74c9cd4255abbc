//! Weighted sum-rate maximization over the rate region, a grid oracle for
//! small instances, and power recovery from rates.
//!
//! The main solver runs projected gradient ascent on
//! `f(p) = Σ w_n ln(1 + p_n / t_n(p))` over the budget polytope
//! `{p ≥ 0 : ‖p‖ ≤ 1}` from several deterministic starts. Full-budget powers
//! map one-to-one onto the weak Pareto boundary of the rate region, and the
//! corners of the polytope map onto its kinks, so the ascent handles
//! non-smooth boundary points exactly. When the certificate holds the region
//! is convex and a local maximum of the linear objective is global.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificates::{zcompat_certificate, DEFAULT_Z_TOL};
use crate::error::{invalid, Error, Result};
use crate::mappings::{InterferenceMapping, PolyhedralMonotoneNorm};
use crate::regions::{radial_boundary, rates_to_sinr, RegionQuery, Space};
use crate::scalar::{dot, Real};
use crate::spectral::{fixed_point_with, spectral_radius_scaled, FixedPointOutcome, DEFAULT_MAX_ITER};

pub const DEFAULT_STARTS: usize = 8;
pub const DEFAULT_TOL: f64 = 1e-6;
/// Number of starts that must agree before the optimum is accepted.
pub const MIN_AGREEING_STARTS: usize = 3;
const START_SEED: u64 = 0x7375_6d72_6174_6500;
const MAX_ASCENT_ITER: usize = 20_000;
const MAX_PROJECTION_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumRateSolution<T> {
    /// Rates in nats per symbol.
    pub rates: Vec<T>,
    /// `wᵗr`.
    pub value: T,
    /// Optimal powers with `‖p‖ = 1`; absent when some rate is zero.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power: Option<Vec<T>>,
    /// `|ρ(diag(e^r − 1)T‖·‖) − 1|`.
    pub boundary_residual: T,
    pub certified_convex: bool,
    /// Starts whose objective agrees with the best within the tolerance.
    pub agreeing_starts: usize,
}

fn check_weights<T: Real>(w: &[T], n: usize) -> Result<()> {
    if w.len() != n {
        return invalid(format!("{} weights for {n} users", w.len()));
    }
    if w.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
        return invalid("weights must be positive and finite");
    }
    Ok(())
}

/// Projection onto `{p ≥ 0 : a_kᵗp ≤ 1 for all k}`.
struct Projector<T> {
    generators: Vec<Vec<T>>,
    bounds: Option<Vec<T>>,
}

impl<T: Real> Projector<T> {
    fn new(norm: &PolyhedralMonotoneNorm<T>) -> Self {
        Self {
            generators: norm.generators().to_vec(),
            bounds: norm.box_bounds(),
        }
    }

    fn project(&self, x: &[T]) -> Vec<T> {
        if let Some(b) = &self.bounds {
            return x.iter().zip(b).map(|(&v, &hi)| v.max(T::zero()).min(hi)).collect();
        }
        // Dykstra's alternating projections over the halfspaces and the orthant.
        let sets = self.generators.len() + 1;
        let n = x.len();
        let mut y = x.to_vec();
        let mut corr = vec![vec![T::zero(); n]; sets];
        let tol = T::epsilon() * T::lit(16.0);
        for _ in 0..MAX_PROJECTION_SWEEPS {
            let mut moved = T::zero();
            for (k, c) in corr.iter_mut().enumerate() {
                let z: Vec<T> = y.iter().zip(c.iter()).map(|(&a, &b)| a + b).collect();
                let proj: Vec<T> = if k == 0 {
                    z.iter().map(|&v| v.max(T::zero())).collect()
                } else {
                    let a = &self.generators[k - 1];
                    let excess = dot(a, &z) - T::one();
                    if excess > T::zero() {
                        let aa = dot(a, a);
                        z.iter().zip(a).map(|(&v, &ai)| v - excess * ai / aa).collect()
                    } else {
                        z.clone()
                    }
                };
                for i in 0..n {
                    c[i] = z[i] - proj[i];
                    moved = moved.max((proj[i] - y[i]).abs());
                }
                y = proj;
            }
            if moved <= tol {
                break;
            }
        }
        // Land inside the polytope despite round-off.
        let worst = self
            .generators
            .iter()
            .map(|a| dot(a, &y))
            .fold(T::zero(), T::max);
        if worst > T::one() {
            y.iter_mut().for_each(|v| *v /= worst);
        }
        y.iter_mut().for_each(|v| *v = v.max(T::zero()));
        y
    }
}

struct Objective<'a, T> {
    mapping: &'a InterferenceMapping<T>,
    w: &'a [T],
}

impl<T: Real> Objective<'_, T> {
    fn value(&self, p: &[T], t: &mut [T]) -> T {
        self.mapping.eval_into(p, t);
        p.iter()
            .zip(t.iter())
            .zip(self.w)
            .map(|((&pi, &ti), &wi)| wi * (pi / ti).ln_1p())
            .sum()
    }

    fn gradient(&self, p: &[T], h: T, t: &mut [T]) -> Vec<T> {
        let mut x = p.to_vec();
        (0..p.len())
            .map(|i| {
                x[i] = p[i] + h;
                let up = self.value(&x, t);
                x[i] = p[i] - h;
                let down = self.value(&x, t);
                x[i] = p[i];
                (up - down) / (h + h)
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
struct LocalOptimum<T> {
    power: Vec<T>,
}

/// Projected gradient ascent with Barzilai–Borwein steps and an Armijo test.
fn ascend<T: Real>(obj: &Objective<'_, T>, proj: &Projector<T>, start: &[T], scale: T) -> LocalOptimum<T> {
    let n = start.len();
    let mut t = vec![T::zero(); n];
    let h = scale * T::epsilon().cbrt();
    let xtol = scale * T::epsilon() * T::lit(64.0);
    let mut p = proj.project(start);
    let mut f = obj.value(&p, &mut t);
    let mut g = obj.gradient(&p, h, &mut t);
    let gmax = g.iter().fold(T::zero(), |a, &v| a.max(v.abs()));
    let mut step = if gmax > T::zero() { scale / gmax } else { scale };
    for _ in 0..MAX_ASCENT_ITER {
        let mut accepted = None;
        let mut trial_step = step;
        for _ in 0..60 {
            let cand: Vec<T> = p.iter().zip(&g).map(|(&pi, &gi)| pi + trial_step * gi).collect();
            let q = proj.project(&cand);
            let fq = obj.value(&q, &mut t);
            let gain: T = g.iter().zip(q.iter().zip(&p)).map(|(&gi, (&qi, &pi))| gi * (qi - pi)).sum();
            if fq >= f + T::lit(1e-4) * gain && gain >= T::zero() {
                accepted = Some((q, fq));
                break;
            }
            trial_step = trial_step * T::half();
        }
        let Some((q, fq)) = accepted else { break };
        let s: Vec<T> = q.iter().zip(&p).map(|(&a, &b)| a - b).collect();
        let smax = s.iter().fold(T::zero(), |a, &v| a.max(v.abs()));
        let g_new = obj.gradient(&q, h, &mut t);
        let improved = fq - f;
        p = q;
        f = fq;
        if smax <= xtol || improved <= T::epsilon() * f.abs() * T::lit(4.0) && smax <= scale * T::lit(1e-10) {
            break;
        }
        let y: Vec<T> = g_new.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sy = dot(&s, &y);
        step = if sy < T::zero() {
            dot(&s, &s) / -sy
        } else {
            trial_step * T::lit(4.0)
        };
        g = g_new;
    }
    LocalOptimum { power: p }
}

fn starting_points<T: Real>(norm: &PolyhedralMonotoneNorm<T>, starts: usize) -> Vec<Vec<T>> {
    let n = norm.dim();
    (0..starts)
        .map(|k| {
            let mut p: Vec<T> = if k == 0 {
                vec![T::one(); n]
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(START_SEED ^ k as u64);
                (0..n).map(|_| T::lit(1.0 - rng.random::<f64>())).collect()
            };
            let np = norm.value(&p);
            p.iter_mut().for_each(|v| *v /= np);
            p
        })
        .collect()
}

fn lexicographic_less<T: Real>(a: &[T], b: &[T]) -> bool {
    for (&x, &y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

fn rates_from_power<T: Real>(mapping: &InterferenceMapping<T>, p: &[T]) -> Result<Vec<T>> {
    let t = mapping.eval(p)?;
    Ok(p.iter().zip(&t).map(|(&pi, &ti)| (pi / ti).ln_1p()).collect())
}

/// `|ρ(diag(e^r − 1)T‖·‖) − 1|` with zero rates removed.
pub fn boundary_residual<T: Real>(
    mapping: &InterferenceMapping<T>,
    norm: &PolyhedralMonotoneNorm<T>,
    rates: &[T],
) -> Result<T> {
    let s = rates_to_sinr(rates)?;
    Ok((spectral_radius_scaled(&s, mapping, norm, T::default_tol())? - T::one()).abs())
}

/// Maximizes `wᵗr` over the rate region under `‖p‖ ≤ 1`.
///
/// `tol` is the relative agreement required between starts; the result is
/// flagged `certified_convex` when the convexity certificate holds and at
/// least three of the eight starts agree. Users whose optimal power vanishes
/// get rate zero and the power vector is then omitted.
pub fn maximize_weighted_sumrate<T: Real>(
    mapping: &InterferenceMapping<T>,
    norm: &PolyhedralMonotoneNorm<T>,
    w: &[T],
    tol: T,
) -> Result<SumRateSolution<T>> {
    let n = mapping.dim();
    if norm.dim() != n {
        return invalid("norm and mapping dimensions differ");
    }
    check_weights(w, n)?;
    if !(tol > T::zero()) {
        return invalid("tolerance must be positive");
    }
    let certificate = match mapping.as_affine() {
        Some(model) => zcompat_certificate(model, Some(norm), T::lit(DEFAULT_Z_TOL))?.certifies(true),
        None => false,
    };
    let proj = Projector::new(norm);
    let obj = Objective { mapping, w };
    let starts = starting_points(norm, DEFAULT_STARTS);
    let scale = starts[0].iter().copied().fold(T::zero(), T::max);
    let optima: Vec<LocalOptimum<T>> = starts.par_iter().map(|s| ascend(&obj, &proj, s, scale)).collect();

    let finalize = |opt: &LocalOptimum<T>| -> Result<(Vec<T>, Vec<T>, T)> {
        let mut p = opt.power.clone();
        let cutoff = scale * T::lit(1e-12);
        p.iter_mut().for_each(|v| {
            if *v <= cutoff {
                *v = T::zero();
            }
        });
        let np = norm.value(&p);
        if !(np > T::zero()) {
            return Err(Error::Inconsistent("sum-rate ascent collapsed to zero power".into()));
        }
        p.iter_mut().for_each(|v| *v /= np);
        let rates = rates_from_power(mapping, &p)?;
        let value = dot(w, &rates);
        Ok((p, rates, value))
    };
    let finals: Vec<(Vec<T>, Vec<T>, T)> = optima.iter().map(finalize).collect::<Result<_>>()?;
    let mut best = 0;
    for (k, cand) in finals.iter().enumerate().skip(1) {
        let cur = &finals[best];
        let tie = (cand.2 - cur.2).abs() <= T::lit(1e-12) * cur.2.abs();
        if (!tie && cand.2 > cur.2) || (tie && lexicographic_less(&cand.1, &cur.1)) {
            best = k;
        }
    }
    let (p, rates, value) = finals[best].clone();
    let agreeing_starts = finals.iter().filter(|c| (value - c.2).abs() <= tol * value.abs()).count();
    let boundary_residual = boundary_residual(mapping, norm, &rates)?;
    let all_positive = rates.iter().all(|&r| r > T::zero());
    Ok(SumRateSolution {
        rates,
        value,
        power: all_positive.then_some(p),
        boundary_residual,
        certified_convex: certificate && agreeing_starts >= MIN_AGREEING_STARTS,
        agreeing_starts,
    })
}

/// Simplex directions `d` with entries `k/resolution`, in lexicographic order.
pub fn simplex_grid(dim: usize, resolution: usize) -> Vec<Vec<usize>> {
    fn rec(dim: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if dim == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(dim - 1, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if dim > 0 {
        rec(dim, resolution, &mut Vec::with_capacity(dim), &mut out);
    }
    out
}

/// Best `wᵗr` over boundary points `t*(d)·d` for `d` on a regular simplex
/// grid. Supports up to three users.
pub fn brute_force_oracle<T: Real>(
    mapping: &InterferenceMapping<T>,
    norm: &PolyhedralMonotoneNorm<T>,
    w: &[T],
    grid_resolution: usize,
) -> Result<SumRateSolution<T>> {
    let n = mapping.dim();
    if n > 3 {
        return Err(Error::Unsupported(format!("grid oracle supports at most 3 users, got {n}")));
    }
    if grid_resolution < 16 {
        return invalid("grid resolution must be at least 16");
    }
    check_weights(w, n)?;
    let q = RegionQuery::constrained(mapping.clone(), norm.clone(), Space::Rate)?;
    let res = T::lit(grid_resolution as f64);
    let root_tol = T::lit(1e-13).max(T::epsilon() * T::lit(16.0));
    let points: Vec<(Vec<T>, T, Option<Vec<T>>, T)> = simplex_grid(n, grid_resolution)
        .par_iter()
        .map(|k| {
            let d: Vec<T> = k.iter().map(|&v| T::lit(v as f64) / res).collect();
            let (_, b) = radial_boundary(&q, &d, root_tol)?;
            let value = dot(w, &b.rate);
            Ok((b.rate, value, b.power, (b.radius_check - T::one()).abs()))
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (k, cand) in points.iter().enumerate().skip(1) {
        let cur = &points[best];
        if cand.1 > cur.1 || (cand.1 == cur.1 && lexicographic_less(&cand.0, &cur.0)) {
            best = k;
        }
    }
    let (rates, value, power, boundary_residual) = points[best].clone();
    let certified = match mapping.as_affine() {
        Some(model) => zcompat_certificate(model, Some(norm), T::lit(DEFAULT_Z_TOL))?.certifies(true),
        None => false,
    };
    let all_positive = rates.iter().all(|&r| r > T::zero());
    Ok(SumRateSolution {
        rates,
        value,
        power: power.filter(|_| all_positive),
        boundary_residual,
        certified_convex: certified,
        agreeing_starts: 0,
    })
}

/// Powers achieving positive `rates`: the fixed point of `diag(e^r − 1)T`.
///
/// The iteration stops at relative change `tol`. The result must satisfy
/// `‖p‖ ≤ 1` up to the classification band, otherwise the rates are not
/// achievable under the budget and an inconsistency is reported.
pub fn recover_power<T: Real>(
    mapping: &InterferenceMapping<T>,
    norm: &PolyhedralMonotoneNorm<T>,
    rates: &[T],
    tol: T,
) -> Result<Vec<T>> {
    if rates.len() != mapping.dim() || norm.dim() != mapping.dim() {
        return invalid("rates, mapping and norm dimensions differ");
    }
    if rates.iter().any(|&r| !(r > T::zero())) {
        return invalid("rates must be positive; remove zero-rate users first");
    }
    let s = rates_to_sinr(rates)?;
    let band = T::default_classification_tol();
    match fixed_point_with(&mapping.scaled(&s)?, tol, band, DEFAULT_MAX_ITER)? {
        FixedPointOutcome::Converged { power, .. } => {
            let np = norm.value(&power);
            if np > T::one() + band {
                return Err(Error::Inconsistent(format!(
                    "recovered power has norm {np}, above the budget"
                )));
            }
            Ok(power)
        }
        FixedPointOutcome::Infeasible { asymptotic_radius } => Err(Error::Inconsistent(format!(
            "rates are not achievable with any power (asymptotic radius {asymptotic_radius})"
        ))),
    }
}
