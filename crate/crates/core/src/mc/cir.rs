//! Exact CIR transitions with trapezoidal time integrals.

use rand::Rng;

use super::besq::{sample_gamma, sample_poisson};
use super::{run_paths, PathConfig};
use crate::error::Result;
use crate::time_change::IntegratedCirSpec;

/// y_{t+Δ} = c·χ'²(d, y_t e^{−κΔ}/c) with c = η²(1 − e^{−κΔ})/(4κ) and
/// d = 4κθ/η², sampled as 2c·Gamma(d/2 + N) with N ~ Poisson(y e^{−κΔ}/(2c)).
pub fn cir_step<R: Rng + ?Sized>(spec: &IntegratedCirSpec, y: f64, dt: f64, rng: &mut R) -> Result<f64> {
    let k = spec.kappa;
    let e = (-k * dt).exp();
    let c = spec.eta * spec.eta * (-(-k * dt).exp_m1()) / (4.0 * k);
    let d = 4.0 * k * spec.theta / (spec.eta * spec.eta);
    let n = sample_poisson(rng, y * e / (2.0 * c))?;
    Ok(2.0 * c * sample_gamma(rng, 0.5 * d + n, 1.0)?)
}

/// Terminal rate and ∫ w(s) y_s ds of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct CirPath {
    pub terminal: f64,
    pub integral: f64,
    /// Running integrals on the time grid, when recorded.
    pub integrals: Option<Vec<f64>>,
    /// Rates on the time grid, when recorded.
    pub values: Option<Vec<f64>>,
}

/// One path on `times` accumulating ∫ w(s) y_s ds by the trapezoid rule.
pub(crate) fn cir_path_weighted<R, W>(
    spec: &IntegratedCirSpec,
    times: &[f64],
    weight: W,
    record: bool,
    rng: &mut R,
) -> Result<CirPath>
where
    R: Rng + ?Sized,
    W: Fn(f64) -> f64,
{
    let mut y = spec.y0;
    let mut f = weight(times[0]) * y;
    let mut acc = 0.0;
    let mut integrals = record.then(|| vec![0.0]);
    let mut values = record.then(|| vec![y]);
    for w in times.windows(2) {
        let dt = w[1] - w[0];
        y = cir_step(spec, y, dt, rng)?;
        let g = weight(w[1]) * y;
        acc += 0.5 * dt * (f + g);
        f = g;
        if let Some(v) = integrals.as_mut() {
            v.push(acc);
        }
        if let Some(v) = values.as_mut() {
            v.push(y);
        }
    }
    Ok(CirPath {
        terminal: y,
        integral: acc,
        integrals,
        values,
    })
}

/// CIR paths with ∫₀ᵀ y ds.
pub fn simulate_cir(spec: &IntegratedCirSpec, cfg: &PathConfig) -> Result<Vec<CirPath>> {
    cfg.validate()?;
    spec.validate()?;
    let times = cfg.times();
    run_paths(cfg.paths, cfg.seed, |rng, _| cir_path_weighted(spec, &times, |_| 1.0, false, rng))
}

/// Bound on the bias of the trapezoidal ∫y in expectation:
/// T Δ² sup|m″|/12 with m(t) = E[y_t].
pub fn trapezoid_bias_bound(spec: &IntegratedCirSpec, cfg: &PathConfig) -> f64 {
    let dt = cfg.dt();
    cfg.horizon * dt * dt * spec.kappa * spec.kappa * (spec.y0 - spec.theta).abs() / 12.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::summarize;

    #[test]
    fn mean_identities() {
        let spec = IntegratedCirSpec::new(1.0, 1.0, 0.5, 0.4);
        let cfg = PathConfig::new(1.0, 50, 40_000, 8);
        let p = simulate_cir(&spec, &cfg).unwrap();
        let y: Vec<f64> = p.iter().map(|q| q.terminal).collect();
        let i: Vec<f64> = p.iter().map(|q| q.integral).collect();
        let ry = summarize(&y, 0, y.len());
        let ri = summarize(&i, 0, i.len());
        assert!(ry.covers(spec.mean(1.0), 3.0, 0.0), "{ry:?}");
        assert!(ri.covers(spec.integral_mean(1.0), 3.0, trapezoid_bias_bound(&spec, &cfg)), "{ri:?}");
        assert!(p.iter().all(|q| q.terminal >= 0.0));
    }

    #[test]
    fn variance_of_one_step_matches_cir() {
        // Var[y_t] = y0 η² e^{−κt}(1−e^{−κt})/κ + θη²(1−e^{−κt})²/(2κ)
        let spec = IntegratedCirSpec::new(2.0, 0.04, 0.3, 0.04);
        let t: f64 = 0.7;
        let v = run_paths(60_000, 4, |rng, _| cir_step(&spec, spec.y0, t, rng)).unwrap();
        let sq: Vec<f64> = v.iter().map(|x| (x - spec.mean(t)).powi(2)).collect();
        let r = summarize(&sq, 0, sq.len());
        let e = (-spec.kappa * t).exp();
        let want = spec.y0 * spec.eta.powi(2) * e * (1.0 - e) / spec.kappa
            + spec.theta * spec.eta.powi(2) * (1.0 - e).powi(2) / (2.0 * spec.kappa);
        assert!(r.covers(want, 3.0, 0.0), "{r:?} vs {want}");
    }
}
