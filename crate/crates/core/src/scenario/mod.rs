//! Cell-less uplink scenarios: geometry, Rayleigh channels, MRC combining and
//! Monte Carlo use-and-then-forget moments, reduced to an affine interference
//! model.
//!
//! Random numbers come from ChaCha8 seeded with `config.seed`. Stream 0 draws
//! the geometry and shadowing; realization `r` uses stream `r + 1`, so
//! realizations are independent of evaluation order and thread count.

mod config;

pub use config::{ChannelParams, ScenarioConfig};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::mappings::{AffineInterferenceModel, PolyhedralMonotoneNorm};

/// Empirical use-and-then-forget moments, indexed by user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    /// `|E[hₙᴴvₙ]|²`
    pub b: Vec<f64>,
    /// `V(hₙᴴvₙ)`, biased estimator.
    #[serde(rename = "self")]
    pub self_interference: Vec<f64>,
    /// `cross[k][n] = E[|hₖᴴvₙ|²]` for `k ≠ n`; the diagonal is zero.
    pub cross: Vec<Vec<f64>>,
    /// `E[‖vₙ‖²]`
    pub noise: Vec<f64>,
}

/// One Monte Carlo draw: per-user aggregated channels and combiners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub channels: Vec<Vec<Complex64>>,
    pub beamformers: Vec<Vec<Complex64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub ap_positions: Vec<[f64; 2]>,
    pub user_positions: Vec<[f64; 2]>,
    /// Noise-normalized large-scale gain, `[user][ap]`, shadowing included.
    pub large_scale_gains: Vec<Vec<f64>>,
    /// Empirical mean of `‖hₙ,ₗ‖²`, `[user][ap]`.
    pub average_gains: Vec<Vec<f64>>,
    /// Serving APs per user (0-based, ascending).
    pub assignment: Vec<Vec<usize>>,
    pub moments: Moments,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realizations: Option<Vec<Realization>>,
}

fn complex_normal(rng: &mut ChaCha8Rng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

fn realization_rng(seed: u64, r: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64 + 1);
    rng
}

/// Ordered pairwise summation; the result depends only on the slice order.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

struct Layout {
    users: usize,
    aps: usize,
    antennas: usize,
}

impl Layout {
    fn dim(&self) -> usize {
        self.aps * self.antennas
    }
}

/// Channels and estimates of one realization. The draw order is fixed:
/// all channels (user, AP, antenna), then all estimation errors.
fn draw(cfg: &ScenarioConfig, lay: &Layout, gains: &[Vec<f64>], r: usize) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
    let mut rng = realization_rng(cfg.seed, r);
    let mut h = vec![vec![Complex64::new(0.0, 0.0); lay.dim()]; lay.users];
    for (n, hn) in h.iter_mut().enumerate() {
        for l in 0..lay.aps {
            for a in 0..lay.antennas {
                hn[l * lay.antennas + a] = complex_normal(&mut rng, gains[n][l]);
            }
        }
    }
    let mut est = h.clone();
    for (n, en) in est.iter_mut().enumerate() {
        for l in 0..lay.aps {
            for a in 0..lay.antennas {
                let e = complex_normal(&mut rng, cfg.estimation_noise_fraction * gains[n][l]);
                en[l * lay.antennas + a] += e;
            }
        }
    }
    (h, est)
}

fn hdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Indices of the `k` largest entries, ties to the lowest index, returned
/// in ascending order.
fn strongest(gains: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..gains.len()).collect();
    idx.sort_by(|&i, &j| gains[j].total_cmp(&gains[i]).then(i.cmp(&j)));
    let mut chosen = idx[..k].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Samples a scenario. Fully determined by `config`.
pub fn generate(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let lay = Layout {
        users: config.num_users,
        aps: config.num_aps,
        antennas: config.antennas_per_ap,
    };
    let cp = &config.channel_params;
    let mut geo = ChaCha8Rng::seed_from_u64(config.seed);
    geo.set_stream(0);
    let side = config.area_side;
    let ap_positions: Vec<[f64; 2]> = (0..lay.aps)
        .map(|_| [geo.random::<f64>() * side, geo.random::<f64>() * side])
        .collect();
    let user_positions: Vec<[f64; 2]> = (0..lay.users)
        .map(|_| [geo.random::<f64>() * side, geo.random::<f64>() * side])
        .collect();
    let shadow = Normal::new(0.0, cp.shadowing_std_db)
        .map_err(|e| Error::InvalidArgument(format!("shadowing: {e}")))?;
    let large_scale_gains: Vec<Vec<f64>> = user_positions
        .iter()
        .map(|u| {
            ap_positions
                .iter()
                .map(|a| {
                    let d = ((u[0] - a[0]).powi(2) + (u[1] - a[1]).powi(2) + cp.ap_height.powi(2))
                        .sqrt()
                        .max(1.0);
                    let z: f64 = shadow.sample(&mut geo);
                    cp.normalized_gain(d) * 10f64.powf(z / 10.0)
                })
                .collect()
        })
        .collect();

    let reps = config.num_realizations;
    let block_energy = |h: &[Complex64], l: usize| -> f64 {
        h[l * lay.antennas..(l + 1) * lay.antennas]
            .iter()
            .map(|c| c.norm_sqr())
            .sum()
    };

    // First pass: per-AP channel energy for the assignment.
    let energies: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let (h, _) = draw(config, &lay, &large_scale_gains, r);
            (0..lay.users)
                .flat_map(|n| (0..lay.aps).map(move |l| (n, l)))
                .map(|(n, l)| block_energy(&h[n], l))
                .collect()
        })
        .collect();
    let average_gains: Vec<Vec<f64>> = (0..lay.users)
        .map(|n| {
            (0..lay.aps)
                .map(|l| {
                    let col: Vec<f64> = energies.iter().map(|e| e[n * lay.aps + l]).collect();
                    mean(&col)
                })
                .collect()
        })
        .collect();
    let assignment: Vec<Vec<usize>> = average_gains
        .iter()
        .map(|g| strongest(g, config.aps_per_user))
        .collect();
    let mut mask = vec![vec![false; lay.dim()]; lay.users];
    for (n, aps) in assignment.iter().enumerate() {
        for &l in aps {
            for a in 0..lay.antennas {
                mask[n][l * lay.antennas + a] = true;
            }
        }
    }

    // Second pass: combiners and per-realization statistics.
    struct Stats {
        signal: Vec<Complex64>,
        leak: Vec<Vec<f64>>,
        vnorm: Vec<f64>,
        kept: Option<Realization>,
    }
    let stats: Vec<Stats> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let (h, est) = draw(config, &lay, &large_scale_gains, r);
            let v: Vec<Vec<Complex64>> = est
                .iter()
                .zip(&mask)
                .map(|(e, m)| {
                    e.iter()
                        .zip(m)
                        .map(|(&x, &keep)| if keep { x } else { Complex64::new(0.0, 0.0) })
                        .collect()
                })
                .collect();
            let signal = (0..lay.users).map(|n| hdot(&h[n], &v[n])).collect();
            let leak = (0..lay.users)
                .map(|k| (0..lay.users).map(|n| hdot(&h[k], &v[n]).norm_sqr()).collect())
                .collect();
            let vnorm = v.iter().map(|x| x.iter().map(|c| c.norm_sqr()).sum()).collect();
            let kept = config.store_channels.then(|| Realization {
                channels: h,
                beamformers: v,
            });
            Stats {
                signal,
                leak,
                vnorm,
                kept,
            }
        })
        .collect();

    let n_users = lay.users;
    let mut b = vec![0.0; n_users];
    let mut self_interference = vec![0.0; n_users];
    let mut noise = vec![0.0; n_users];
    let mut cross = vec![vec![0.0; n_users]; n_users];
    for n in 0..n_users {
        let re: Vec<f64> = stats.iter().map(|s| s.signal[n].re).collect();
        let im: Vec<f64> = stats.iter().map(|s| s.signal[n].im).collect();
        let mu = Complex64::new(mean(&re), mean(&im));
        b[n] = mu.norm_sqr();
        let dev: Vec<f64> = stats.iter().map(|s| (s.signal[n] - mu).norm_sqr()).collect();
        self_interference[n] = mean(&dev);
        let vn: Vec<f64> = stats.iter().map(|s| s.vnorm[n]).collect();
        noise[n] = mean(&vn);
        for k in 0..n_users {
            if k != n {
                let q: Vec<f64> = stats.iter().map(|s| s.leak[k][n]).collect();
                cross[k][n] = mean(&q);
            }
        }
    }
    let realizations = if config.store_channels {
        Some(stats.into_iter().filter_map(|s| s.kept).collect())
    } else {
        None
    };

    Ok(Scenario {
        config: config.clone(),
        ap_positions,
        user_positions,
        large_scale_gains,
        average_gains,
        assignment,
        moments: Moments {
            b,
            self_interference,
            cross,
            noise,
        },
        realizations,
    })
}

impl Moments {
    pub fn num_users(&self) -> usize {
        self.b.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_users();
        if self.self_interference.len() != n
            || self.noise.len() != n
            || self.cross.len() != n
            || self.cross.iter().any(|r| r.len() != n)
        {
            return invalid("moment arrays have inconsistent lengths");
        }
        if let Some(i) = self.b.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::DegenerateScenario(format!(
                "b[{}] = {} is not positive",
                i + 1,
                self.b[i]
            )));
        }
        if let Some(i) = self.noise.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::DegenerateScenario(format!(
                "noise[{}] = {} is not positive",
                i + 1,
                self.noise[i]
            )));
        }
        let negative = self.self_interference.iter().any(|&v| !(v >= 0.0))
            || self.cross.iter().flatten().any(|&v| !(v >= 0.0));
        if negative {
            return Err(Error::DegenerateScenario("negative or NaN interference moment".into()));
        }
        Ok(())
    }

    /// Column `n` of the returned matrix holds user `n`'s interference
    /// coefficients, with the self term on the diagonal.
    pub fn interference_columns(&self) -> Matrix<f64> {
        let n = self.num_users();
        let mut c = Matrix::zeros(n, n);
        for k in 0..n {
            for j in 0..n {
                c[(k, j)] = if k == j {
                    self.self_interference[j]
                } else {
                    self.cross[k][j]
                };
            }
        }
        c
    }

    /// SINR of every user under power `p`, straight from the moments.
    pub fn uatf_sinr(&self, p: &[f64]) -> Result<Vec<f64>> {
        let n = self.num_users();
        if p.len() != n {
            return invalid(format!("power has {} entries, expected {n}", p.len()));
        }
        Ok((0..n)
            .map(|i| {
                let others: f64 = (0..n).filter(|&k| k != i).map(|k| p[k] * self.cross[k][i]).sum();
                p[i] * self.b[i] / (p[i] * self.self_interference[i] + others + self.noise[i])
            })
            .collect())
    }
}

/// `M = diag(b)⁻¹Cᵗ`, `u = diag(b)⁻¹·noise`, with the raw terms kept.
pub fn to_affine_model(s: &Scenario) -> Result<AffineInterferenceModel<f64>> {
    moments_to_affine_model(&s.moments)
}

pub fn moments_to_affine_model(m: &Moments) -> Result<AffineInterferenceModel<f64>> {
    m.validate()?;
    AffineInterferenceModel::from_raw(m.b.clone(), m.interference_columns(), m.noise.clone())
}

/// Per-user power limit `{eₙ/p_max}`.
pub fn power_norm(s: &Scenario) -> Result<PolyhedralMonotoneNorm<f64>> {
    PolyhedralMonotoneNorm::scaled_linf(s.moments.num_users(), s.config.p_max)
}
