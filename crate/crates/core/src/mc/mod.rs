//! Monte Carlo machinery: exact squared Bessel and CIR transitions, Euler and
//! exact CEV paths, subordinators and integrated OU clocks, and time-changed
//! stock assembly.
//!
//! Every path draws from its own ChaCha8 stream selected by (seed, path
//! index), and path results are collected in index order before a pairwise
//! reduction. Estimates are therefore bit-identical for a given seed and
//! configuration, whatever the number of worker threads.

use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::pairwise_sum;

pub mod besq;
pub mod cev;
pub mod cir;
pub mod subordinator;
pub mod tc;

pub use besq::{besq_step, simulate_besq, BesqPath, BesqStep};
pub use cev::{simulate_cev, CevPath};
pub use cir::{cir_step, simulate_cir, CirPath};
pub use subordinator::{simulate_iou, simulate_subordinator, IouSample};
pub use tc::{clock_path, simulate_tc_stock, simulate_tc_stock_with, write_path_csv, ClockPath, TcPath, TcSimulation};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "BESSEL_CREDIT_THREADS";

pub type PathRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Exact,
    Euler,
}

/// Horizon, time grid, path count, seed and scheme of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub horizon: f64,
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
    pub scheme: Scheme,
    /// Pairs every path with its mirror image; the effective path count
    /// doubles. Only the Euler CEV scheme uses it.
    #[serde(default)]
    pub antithetic: bool,
}

impl PathConfig {
    pub fn new(horizon: f64, steps: usize, paths: usize, seed: u64) -> Self {
        Self {
            horizon,
            steps,
            paths,
            seed,
            scheme: Scheme::Exact,
            antithetic: false,
        }
    }

    pub fn with_scheme(self, scheme: Scheme) -> Self {
        Self { scheme, ..self }
    }

    pub fn with_antithetic(self, antithetic: bool) -> Self {
        Self { antithetic, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        if self.paths < 2 {
            return Err(Error::Config("at least 2 paths are needed for an error bar".into()));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.horizon * i as f64 / self.steps as f64).collect()
    }

    pub fn effective_paths(&self) -> usize {
        if self.antithetic {
            2 * self.paths
        } else {
            self.paths
        }
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub estimate: f64,
    pub std_error: f64,
    pub paths: usize,
    pub absorbed: usize,
}

impl SimResult {
    /// |estimate − target| in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.estimate - target).abs();
        if self.std_error > 0.0 {
            d / self.std_error
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// Whether `target` lies within `k` standard errors (plus a small
    /// absolute slack for discretized or truncated targets).
    pub fn covers(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.estimate - target).abs() <= k * self.std_error + slack
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = if xs.len() > 1 { pairwise_sum(&dev) / (n - 1.0) } else { 0.0 };
    (mean, (var / n).sqrt())
}

/// Builds a [`SimResult`] from per-path samples.
pub fn summarize(xs: &[f64], absorbed: usize, paths: usize) -> SimResult {
    let (estimate, std_error) = mean_and_se(xs);
    SimResult {
        estimate,
        std_error,
        paths,
        absorbed,
    }
}

/// Like [`summarize`], but averages adjacent antithetic pairs first so the
/// standard error accounts for their correlation.
pub fn summarize_paired(xs: &[f64], absorbed: usize, antithetic: bool) -> SimResult {
    if !antithetic {
        return summarize(xs, absorbed, xs.len());
    }
    let pairs: Vec<f64> = xs.chunks(2).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    summarize(&pairs, absorbed, xs.len())
}

/// Ratio E[a]/E[b] of two means over the same paths, with a delta-method
/// standard error from the per-path linearisation (a_i − R b_i)/E[b].
pub fn ratio_estimate(a: &[f64], b: &[f64]) -> SimResult {
    let (ma, _) = mean_and_se(a);
    let (mb, _) = mean_and_se(b);
    let r = ma / mb;
    let lin: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - r * y) / mb).collect();
    let (_, se) = mean_and_se(&lin);
    SimResult {
        estimate: r,
        std_error: se,
        paths: a.len(),
        absorbed: 0,
    }
}

/// The random stream of path `path` under `seed`.
pub fn path_rng(seed: u64, path: usize) -> PathRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

fn thread_count() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = thread_count() {
            b = b.num_threads(n);
        }
        b.build().expect("rayon thread pool")
    })
}

/// Runs `f` on every path index in parallel and returns results in index
/// order. The first error, by path index, is returned.
pub fn run_paths<T, F>(paths: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut PathRng, usize) -> Result<T> + Sync,
{
    pool().install(|| {
        (0..paths)
            .into_par_iter()
            .map(|i| {
                let mut rng = path_rng(seed, i);
                f(&mut rng, i)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .collect()
    })
}

/// Several payoffs evaluated on the same paths. `f` returns one value per
/// payoff and whether the path was absorbed.
pub fn estimate_many<F>(paths: usize, seed: u64, k: usize, f: F) -> Result<Vec<SimResult>>
where
    F: Fn(&mut PathRng, usize) -> Result<(Vec<f64>, bool)> + Sync,
{
    let rows = run_paths(paths, seed, |rng, i| {
        let (v, a) = f(rng, i)?;
        if v.len() != k {
            return Err(Error::Config(format!("payoff returned {} values, expected {k}", v.len())));
        }
        Ok((v, a))
    })?;
    let absorbed = rows.iter().filter(|r| r.1).count();
    Ok((0..k)
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r.0[j]).collect();
            summarize(&col, absorbed, paths)
        })
        .collect())
}

/// A single payoff.
pub fn estimate<F>(paths: usize, seed: u64, f: F) -> Result<SimResult>
where
    F: Fn(&mut PathRng, usize) -> Result<(f64, bool)> + Sync,
{
    let r = estimate_many(paths, seed, 1, |rng, i| {
        let (v, a) = f(rng, i)?;
        Ok((vec![v], a))
    })?;
    Ok(r[0])
}

/// E[e^{iuX}] estimated from samples, with the standard errors of the real
/// and imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalCf {
    pub re: SimResult,
    pub im: SimResult,
}

pub fn empirical_cf(xs: &[f64], u: f64) -> EmpiricalCf {
    let c: Vec<f64> = xs.iter().map(|x| (u * x).cos()).collect();
    let s: Vec<f64> = xs.iter().map(|x| (u * x).sin()).collect();
    EmpiricalCf {
        re: summarize(&c, 0, xs.len()),
        im: summarize(&s, 0, xs.len()),
    }
}
