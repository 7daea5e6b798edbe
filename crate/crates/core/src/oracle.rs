//! Random-matrix cross-check of target moments.
//!
//! Moments `N^{-1} E tr(X^k)` are estimated by Monte Carlo for two unitary
//! invariant ensembles, each sampled through its tridiagonal form:
//!
//! * `semicircle`: GUE scaled to the semicircle on `[-2, 2]`, sampled as the
//!   Hermite tridiagonal matrix with `N(0, 1)` diagonal and `χ_{2(N-k)}/√2`
//!   off-diagonal, divided by `√N`;
//! * `free_poisson`: complex Wishart `W = G G^* / N` with `G` of size
//!   `N × p`, `p = round(λN)`, sampled as `B Bᵀ` for the Laguerre bidiagonal
//!   `B`.
//!
//! Both have exactly the eigenvalue law of the dense complex ensemble, so
//! traces cost `O(N k²)` instead of dense matrix products.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{free_poisson_moment_single, semicircle_moment};
use crate::error::{ChaosError, Result};

/// Cap on `trials · N · k_max²`.
pub const DEFAULT_WORK_CAP: u128 = 20_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum MatrixModel {
    Semicircle,
    FreePoisson { lambda: f64 },
}

impl MatrixModel {
    pub fn name(&self) -> &'static str {
        match self {
            MatrixModel::Semicircle => "semicircle",
            MatrixModel::FreePoisson { .. } => "free_poisson",
        }
    }

    /// Limit moment `lim N^{-1} E tr(X^k)`.
    pub fn target(&self, k: usize) -> f64 {
        match *self {
            MatrixModel::Semicircle => semicircle_moment(1.0, k),
            MatrixModel::FreePoisson { lambda } => free_poisson_moment_single(lambda, k, false),
        }
    }

    /// Parses `semicircle` or `free_poisson`; `lambda` applies to the latter.
    pub fn parse(name: &str, lambda: f64) -> Result<Self> {
        match name.trim() {
            "semicircle" => Ok(MatrixModel::Semicircle),
            "free_poisson" => Ok(MatrixModel::FreePoisson { lambda }),
            other => Err(ChaosError::Parse(format!(
                "unknown model {other:?}, expected semicircle or free_poisson"
            ))),
        }
    }
}

impl fmt::Display for MatrixModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixModel::Semicircle => f.write_str("semicircle"),
            MatrixModel::FreePoisson { lambda } => write!(f, "free_poisson({lambda})"),
        }
    }
}

impl FromStr for MatrixModel {
    type Err = ChaosError;

    fn from_str(s: &str) -> Result<Self> {
        MatrixModel::parse(s, 1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Matrix size `N`.
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub model: MatrixModel,
    pub orders: Vec<usize>,
}

impl SimConfig {
    pub fn new(model: MatrixModel, n: usize, trials: usize, seed: u64, orders: Vec<usize>) -> Self {
        SimConfig {
            n,
            trials,
            seed,
            model,
            orders,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(ChaosError::Domain(format!("matrix size must be at least 2, got {}", self.n)));
        }
        if self.trials == 0 {
            return Err(ChaosError::Domain("at least one trial is required".into()));
        }
        if self.orders.is_empty() || self.orders.contains(&0) {
            return Err(ChaosError::Domain("orders must be a nonempty list of positive integers".into()));
        }
        if let MatrixModel::FreePoisson { lambda } = self.model {
            if !(lambda.is_finite() && lambda > 0.0) || (lambda * self.n as f64).round() < 1.0 {
                return Err(ChaosError::Domain(format!(
                    "lambda = {lambda} gives no columns at N = {}",
                    self.n
                )));
            }
        }
        Ok(())
    }

    pub fn estimated_work(&self) -> u128 {
        let k = *self.orders.iter().max().unwrap_or(&1) as u128;
        self.trials as u128 * self.n as u128 * k * k
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub order: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub target: f64,
}

impl MomentEstimate {
    /// `|estimate - target| ≤ sigmas · stderr`.
    pub fn within(&self, sigmas: f64) -> bool {
        (self.estimate - self.target).abs() <= sigmas * self.stderr
    }
}

/// Symmetric tridiagonal matrix: `diag[k]`, `off[k] = T[k][k+1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    fn apply_local(&self, v: &[f64], lo: usize, out: &mut [f64]) {
        let n = self.diag.len();
        for (t, o) in out.iter_mut().enumerate() {
            let k = lo + t;
            if k >= n {
                *o = 0.0;
                continue;
            }
            let mut s = self.diag[k] * v[t];
            if t > 0 {
                s += self.off[k - 1] * v[t - 1];
            }
            if t + 1 < v.len() && k + 1 < n {
                s += self.off[k] * v[t + 1];
            }
            *o = s;
        }
    }

    /// `tr(T^k)` for `k = 1..=k_max`, via `(T^k)_{ii} = ⟨T^a e_i, T^b e_i⟩`.
    pub fn power_traces(&self, k_max: usize) -> Vec<f64> {
        let n = self.diag.len();
        let half = k_max.div_ceil(2);
        let mut traces = vec![0.0; k_max];
        for i in 0..n {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let w = hi - lo + 1;
            let mut powers = vec![vec![0.0; w]];
            powers[0][i - lo] = 1.0;
            for p in 1..=half {
                let mut next = vec![0.0; w];
                self.apply_local(&powers[p - 1], lo, &mut next);
                powers.push(next);
            }
            for (k, tr) in traces.iter_mut().enumerate() {
                let m = k + 1;
                let (a, b) = (m / 2, m - m / 2);
                *tr += powers[a].iter().zip(&powers[b]).map(|(x, y)| x * y).sum::<f64>();
            }
        }
        traces
    }
}

fn chi<R: Rng>(rng: &mut R, dof: usize) -> f64 {
    if dof == 0 {
        return 0.0;
    }
    let d = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    d.sample(rng).sqrt()
}

/// GUE eigenvalue law, unscaled (`E|H_ij|² = 1`).
pub fn sample_hermite<R: Rng>(rng: &mut R, n: usize) -> Tridiagonal {
    let diag = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let off = (1..n)
        .map(|k| chi(rng, 2 * (n - k)) / std::f64::consts::SQRT_2)
        .collect();
    Tridiagonal { diag, off }
}

/// Nonzero spectrum of `G G^*` for complex Gaussian `G` (`E|G_ij|² = 1`) of
/// size `n × p`, as `B Bᵀ` with `B` lower bidiagonal of size `min(n, p)`.
pub fn sample_laguerre<R: Rng>(rng: &mut R, n: usize, p: usize) -> Tridiagonal {
    let small = n.min(p);
    let large = n.max(p);
    let s2 = std::f64::consts::SQRT_2;
    let d: Vec<f64> = (0..small).map(|k| chi(rng, 2 * (large - k)) / s2).collect();
    let s: Vec<f64> = (0..small.saturating_sub(1))
        .map(|k| chi(rng, 2 * (small - 1 - k)) / s2)
        .collect();
    let diag = (0..small)
        .map(|k| d[k] * d[k] + if k > 0 { s[k - 1] * s[k - 1] } else { 0.0 })
        .collect();
    let off = (0..small.saturating_sub(1)).map(|k| s[k] * d[k]).collect();
    Tridiagonal { diag, off }
}

/// Normalized traces `N^{-1} tr(X^k)`, `k = 1..=k_max`, for one trial.
fn trial(cfg: &SimConfig, k_max: usize, index: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let n = cfg.n as f64;
    let (t, scale) = match cfg.model {
        MatrixModel::Semicircle => (sample_hermite(&mut rng, cfg.n), n.sqrt()),
        MatrixModel::FreePoisson { lambda } => {
            let p = (lambda * n).round() as usize;
            (sample_laguerre(&mut rng, cfg.n, p), n)
        }
    };
    t.power_traces(k_max)
        .into_iter()
        .enumerate()
        .map(|(k, tr)| tr / scale.powi(k as i32 + 1) / n)
        .collect()
}

/// Mean and standard error of `N^{-1} tr(X^k)` over independent trials.
/// Trial `t` draws from stream `t` of a ChaCha8 generator seeded with
/// `cfg.seed`, so results do not depend on the thread count.
pub fn estimate_moments(cfg: &SimConfig) -> Result<Vec<MomentEstimate>> {
    cfg.validate()?;
    let work = cfg.estimated_work();
    if work > DEFAULT_WORK_CAP {
        return Err(ChaosError::ResourceGuard {
            estimated: work,
            cap: DEFAULT_WORK_CAP,
        });
    }
    let k_max = *cfg.orders.iter().max().unwrap();
    let samples: Vec<Vec<f64>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| trial(cfg, k_max, t))
        .collect();
    let count = cfg.trials as f64;
    Ok(cfg
        .orders
        .iter()
        .map(|&k| {
            let mean = samples.iter().map(|s| s[k - 1]).sum::<f64>() / count;
            let stderr = if cfg.trials > 1 {
                let var = samples.iter().map(|s| (s[k - 1] - mean).powi(2)).sum::<f64>() / (count - 1.0);
                (var / count).sqrt()
            } else {
                f64::NAN
            };
            MomentEstimate {
                order: k,
                estimate: mean,
                stderr,
                target: cfg.model.target(k),
            }
        })
        .collect())
}
