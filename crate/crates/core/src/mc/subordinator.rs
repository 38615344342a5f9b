//! Subordinator increments and integrated OU clocks dh = −λh dt + dz.
//!
//! Compound Poisson paths are exact. Inverse Gaussian increments are exact
//! on a fine grid, and their contribution to h is weighted by the average of
//! e^{−λ(t−s)} over each fine interval. Since jump positions of a Lévy
//! process are exchangeable within an interval, this is the conditional mean
//! of the exact contribution given the increment. The stationary inverse
//! Gaussian law splits exactly into an inverse Gaussian part at half rate and
//! a compound Poisson part at rate ν/2 with Gamma(½, 2/ν²) jumps, from the
//! decomposition (1 + ν²x)/2 of its Lévy density.

use rand::Rng;
use rand_distr::{Distribution, Exp, InverseGaussian};

use super::besq::{sample_gamma, sample_poisson};
use super::{run_paths, PathConfig, PathRng};
use crate::error::{Error, Result};
use crate::time_change::{IntegratedOuSpec, Subordinator};

/// Least number of fine intervals used for infinite-activity subordinators.
pub const FINE_STEPS: usize = 512;

fn ig_increment<R: Rng + ?Sized>(rng: &mut R, mean: f64, shape: f64) -> Result<f64> {
    let d = InverseGaussian::new(mean, shape).map_err(|e| Error::Domain(format!("inverse gaussian: {e}")))?;
    Ok(d.sample(rng))
}

/// Jump times and sizes of a compound Poisson process on [0, t], sorted.
fn compound_poisson<R, J>(rng: &mut R, rate: f64, t: f64, mut jump: J) -> Result<Vec<(f64, f64)>>
where
    R: Rng + ?Sized,
    J: FnMut(&mut R) -> Result<f64>,
{
    let n = sample_poisson(rng, rate * t)? as usize;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let s = t * rng.random::<f64>();
        let j = jump(rng)?;
        out.push((s, j));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(out)
}

/// Grid values of z, h and H = ∫h on `times`.
#[derive(Debug, Clone, PartialEq)]
pub struct IouGrid {
    pub level: Vec<f64>,
    pub rate: Vec<f64>,
    pub integral: Vec<f64>,
}

/// Terminal (H_T, h_T, z_T).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IouSample {
    pub integral: f64,
    pub rate: f64,
    pub level: f64,
}

fn ig_params(sub: &Subordinator) -> Option<(f64, f64)> {
    // (ν, rate multiplier) of the inverse Gaussian component
    match *sub {
        Subordinator::ExpJumpPoisson { .. } => None,
        Subordinator::InverseGaussian { nu } => Some((nu, 1.0)),
        Subordinator::StationaryInverseGaussian { nu } => Some((nu, 0.5)),
    }
}

fn cp_jumps<R: Rng + ?Sized>(sub: &Subordinator, t: f64, rng: &mut R) -> Result<Vec<(f64, f64)>> {
    match *sub {
        Subordinator::ExpJumpPoisson { rate, mean } => {
            let e = Exp::new(1.0 / mean).map_err(|e| Error::Domain(format!("exponential: {e}")))?;
            compound_poisson(rng, rate, t, |r| Ok(e.sample(r)))
        }
        Subordinator::InverseGaussian { .. } => Ok(Vec::new()),
        Subordinator::StationaryInverseGaussian { nu } => {
            compound_poisson(rng, 0.5 * nu, t, |r| sample_gamma(r, 0.5, 2.0 / (nu * nu)))
        }
    }
}

/// One path of (z, h, H) on `times` (starting at 0).
pub(crate) fn iou_path<R: Rng + ?Sized>(spec: &IntegratedOuSpec, times: &[f64], rng: &mut R) -> Result<IouGrid> {
    let lam = spec.lambda;
    let t_end = *times.last().unwrap();
    let jumps = cp_jumps(&spec.subordinator, t_end, rng)?;
    let n = times.len();
    let mut level = vec![0.0; n];
    let mut rate = vec![0.0; n];
    // compound Poisson part, exact at every grid time
    let mut j = 0;
    let mut zc = 0.0;
    let mut hc = 0.0;
    let mut last = 0.0;
    for (i, &t) in times.iter().enumerate() {
        while j < jumps.len() && jumps[j].0 <= t {
            hc = hc * (-lam * (jumps[j].0 - last)).exp() + jumps[j].1;
            zc += jumps[j].1;
            last = jumps[j].0;
            j += 1;
        }
        hc *= (-lam * (t - last)).exp();
        last = t;
        level[i] = zc;
        rate[i] = hc;
    }
    // inverse Gaussian part on a fine grid
    if let Some((nu, mult)) = ig_params(&spec.subordinator) {
        let per = FINE_STEPS.div_ceil(n - 1).max(1);
        let mut zi = 0.0;
        let mut hi = 0.0;
        for i in 1..n {
            let dt = (times[i] - times[i - 1]) / per as f64;
            let mean = mult * dt / nu;
            let shape = (mult * dt).powi(2);
            let decay = (-lam * dt).exp();
            let avg = -(-lam * dt).exp_m1() / (lam * dt);
            for _ in 0..per {
                let dz = ig_increment(rng, mean, shape)?;
                zi += dz;
                hi = hi * decay + dz * avg;
            }
            level[i] += zi;
            rate[i] += hi;
        }
    }
    let mut integral = vec![0.0; n];
    for i in 0..n {
        rate[i] += spec.h0 * (-lam * times[i]).exp();
        // H_t = (z_t − h_t + h0)/λ, clipped against rounding
        integral[i] = ((level[i] - rate[i] + spec.h0) / lam).max(0.0);
    }
    for i in 1..n {
        if integral[i] < integral[i - 1] {
            integral[i] = integral[i - 1];
        }
    }
    Ok(IouGrid { level, rate, integral })
}

/// Samples of z_T.
pub fn simulate_subordinator(sub: &Subordinator, cfg: &PathConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    sub.validate()?;
    let t = cfg.horizon;
    run_paths(cfg.paths, cfg.seed, |rng: &mut PathRng, _| {
        let mut z: f64 = cp_jumps(sub, t, rng)?.iter().map(|j| j.1).sum();
        if let Some((nu, mult)) = ig_params(sub) {
            z += ig_increment(rng, mult * t / nu, (mult * t).powi(2))?;
        }
        Ok(z)
    })
}

/// Joint samples of (H_T, h_T, z_T).
pub fn simulate_iou(spec: &IntegratedOuSpec, cfg: &PathConfig) -> Result<Vec<IouSample>> {
    cfg.validate()?;
    spec.validate()?;
    let times = cfg.times();
    run_paths(cfg.paths, cfg.seed, |rng, _| {
        let g = iou_path(spec, &times, rng)?;
        let k = times.len() - 1;
        Ok(IouSample {
            integral: g.integral[k],
            rate: g.rate[k],
            level: g.level[k],
        })
    })
}
