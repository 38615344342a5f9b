//! Exact transitions of squared Bessel processes absorbed at 0.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use super::{run_paths, PathConfig, PathRng};
use crate::bessel_cev::SquaredBesselSpec;
use crate::error::{Error, Result};

pub(crate) fn sample_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> Result<f64> {
    let g = Gamma::new(shape, scale).map_err(|e| Error::Domain(format!("gamma({shape}, {scale}): {e}")))?;
    Ok(g.sample(rng))
}

pub(crate) fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> Result<f64> {
    if mean <= 0.0 {
        return Ok(0.0);
    }
    let p = Poisson::new(mean).map_err(|e| Error::Domain(format!("poisson({mean}): {e}")))?;
    Ok(p.sample(rng))
}

/// Outcome of one transition over a clock increment Δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesqStep {
    pub value: f64,
    /// Offset within the step at which 0 was reached, if it was.
    pub hit: Option<f64>,
}

/// One exact transition of BESQ^δ from `x` over a clock increment `dt`.
///
/// For δ ≥ 2, X = 2Δ·Gamma(δ/2 + N) with N ~ Poisson(x/(2Δ)).
///
/// For δ < 2 the process is absorbed at 0. With ν = 1 − δ/2 and
/// β = x/(2Δ), draw W ~ Gamma(ν). The path is absorbed within the step iff
/// W ≥ β, and then T₀ = x/(2W) exactly. Otherwise N ~ Poisson(β − W) and
/// X = 2Δ·Gamma(N + 1). Mixing over W reproduces the Poisson weights
/// e^{−β}β^{n+ν}/Γ(n+ν+1) of the killed transition density, so the scheme
/// is exact in law for both the survival event and the surviving value.
pub fn besq_step<R: Rng + ?Sized>(dimension: f64, x: f64, dt: f64, rng: &mut R) -> Result<BesqStep> {
    if dt <= 0.0 {
        return Ok(BesqStep { value: x, hit: None });
    }
    if dimension >= 2.0 {
        let beta = x / (2.0 * dt);
        let n = sample_poisson(rng, beta)?;
        let v = 2.0 * dt * sample_gamma(rng, 0.5 * dimension + n, 1.0)?;
        return Ok(BesqStep { value: v, hit: None });
    }
    if x <= 0.0 {
        return Ok(BesqStep {
            value: 0.0,
            hit: Some(0.0),
        });
    }
    let nu = 1.0 - 0.5 * dimension;
    let beta = x / (2.0 * dt);
    let w = sample_gamma(rng, nu, 1.0)?;
    if w >= beta {
        return Ok(BesqStep {
            value: 0.0,
            hit: Some(x / (2.0 * w)),
        });
    }
    let n = sample_poisson(rng, beta - w)?;
    let v = 2.0 * dt * sample_gamma(rng, n + 1.0, 1.0)?;
    Ok(BesqStep { value: v, hit: None })
}

/// A squared Bessel path on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BesqPath {
    pub values: Vec<f64>,
    pub hit_time: Option<f64>,
}

/// Walks a path across the increments of `times`, stopping at absorption.
pub(crate) fn besq_path_on<R: Rng + ?Sized>(
    dimension: f64,
    start: f64,
    times: &[f64],
    rng: &mut R,
) -> Result<BesqPath> {
    let mut values = Vec::with_capacity(times.len());
    values.push(start);
    let mut x = start;
    let mut hit_time = None;
    for w in times.windows(2) {
        if hit_time.is_some() {
            values.push(0.0);
            continue;
        }
        let s = besq_step(dimension, x, w[1] - w[0], rng)?;
        if let Some(h) = s.hit {
            hit_time = Some(w[0] + h);
        }
        x = s.value;
        values.push(x);
    }
    Ok(BesqPath { values, hit_time })
}

/// Paths of BESQ^δ_x on the grid of `cfg`.
pub fn simulate_besq(spec: &SquaredBesselSpec, cfg: &PathConfig) -> Result<Vec<BesqPath>> {
    cfg.validate()?;
    if !(spec.start >= 0.0) {
        return Err(Error::Config(format!("start must be nonnegative, got {}", spec.start)));
    }
    let times = cfg.times();
    run_paths(cfg.paths, cfg.seed, |rng: &mut PathRng, _| {
        besq_path_on(spec.dimension, spec.start, &times, rng)
    })
}
