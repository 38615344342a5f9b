//! CEV paths, exact through the Bessel dictionary or by Euler with absorption.

use rand::Rng;
use rand_distr::StandardNormal;

use super::besq::besq_path_on;
use super::{run_paths, PathConfig, PathRng, Scheme};
use crate::bessel_cev::{cev_to_bessel, BesselClockMap, CevParams};
use crate::error::Result;

/// Terminal state of one CEV path, with the grid values when recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct CevPath {
    pub terminal: f64,
    pub default_time: Option<f64>,
    pub values: Option<Vec<f64>>,
}

fn exact_path(m: &BesselClockMap, times: &[f64], record: bool, rng: &mut PathRng) -> Result<CevPath> {
    let clocks: Vec<f64> = times.iter().map(|&t| m.clock(t)).collect();
    let b = besq_path_on(m.dimension, m.start, &clocks, rng)?;
    // the clock is strictly increasing, so a hit on the clock scale maps back
    // to a unique calendar time
    let default_time = b.hit_time.and_then(|c| m.clock_inverse(c));
    let t_end = *times.last().unwrap();
    let terminal = m.to_stock(*b.values.last().unwrap(), t_end);
    let values = record.then(|| {
        b.values
            .iter()
            .zip(times)
            .map(|(&y, &t)| m.to_stock(y, t))
            .collect()
    });
    Ok(CevPath {
        terminal,
        default_time,
        values,
    })
}

/// One Euler path driven by `sign`·Z. Between grid points the path is also
/// absorbed with the Brownian-bridge probability exp(−2 S_i S_{i+1}/(v²Δ))
/// of crossing 0 under the frozen local volatility v = σ S_i^α.
fn euler_path(p: &CevParams, cfg: &PathConfig, normals: &[f64], bridge: &[f64], sign: f64, record: bool) -> CevPath {
    let dt = cfg.dt();
    let sq = dt.sqrt();
    let mut s = p.spot;
    let mut values = record.then(|| {
        let mut v = Vec::with_capacity(cfg.steps + 1);
        v.push(s);
        v
    });
    let mut default_time = None;
    for i in 0..cfg.steps {
        let t1 = (i + 1) as f64 * dt;
        if default_time.is_none() {
            let vol = p.sigma * s.powf(p.alpha);
            let next = s + p.rate * s * dt + vol * sq * sign * normals[i];
            if next <= 0.0 {
                default_time = Some(t1);
                s = 0.0;
            } else {
                let cross = (-2.0 * s * next / (vol * vol * dt)).exp();
                if p.alpha < 1.0 && bridge[i] < cross {
                    default_time = Some(t1);
                    s = 0.0;
                } else {
                    s = next;
                }
            }
        }
        if let Some(v) = values.as_mut() {
            v.push(s);
        }
    }
    CevPath {
        terminal: s,
        default_time,
        values,
    }
}

fn simulate(p: &CevParams, cfg: &PathConfig, record: bool) -> Result<Vec<CevPath>> {
    cfg.validate()?;
    p.validate()?;
    match cfg.scheme {
        Scheme::Exact => {
            let m = cev_to_bessel(p)?;
            let times = cfg.times();
            run_paths(cfg.paths, cfg.seed, |rng, _| exact_path(&m, &times, record, rng))
        }
        Scheme::Euler => {
            let groups = run_paths(cfg.paths, cfg.seed, |rng, _| {
                let z: Vec<f64> = (0..cfg.steps).map(|_| rng.sample(StandardNormal)).collect();
                let u: Vec<f64> = (0..cfg.steps).map(|_| rng.random::<f64>()).collect();
                let mut out = vec![euler_path(p, cfg, &z, &u, 1.0, record)];
                if cfg.antithetic {
                    out.push(euler_path(p, cfg, &z, &u, -1.0, record));
                }
                Ok(out)
            })?;
            Ok(groups.into_iter().flatten().collect())
        }
    }
}

/// Terminal values and default times; antithetic Euler pairs are adjacent.
pub fn simulate_cev(p: &CevParams, cfg: &PathConfig) -> Result<Vec<CevPath>> {
    simulate(p, cfg, false)
}

/// As [`simulate_cev`] with the grid values of every path.
pub fn simulate_cev_paths(p: &CevParams, cfg: &PathConfig) -> Result<Vec<CevPath>> {
    simulate(p, cfg, true)
}

/// First time t ≤ `horizon` at which the stopped CEV stock is at or below
/// `level`, simulated on the Bessel clock scale.
///
/// With u = c(t), S_t ≤ L is R_u ≤ b(u) for the Bessel process R = √Y and
/// the moving barrier b(u) = (L e^{−r t(u)})^{1/(2p)} with p the power of the dictionary. R is sampled exactly
/// on a grid uniform in u. Between grid points a crossing is added with the
/// Brownian-bridge probability exp(−2 d₀d₁/Δu) for the linearly
/// interpolated barrier, where d₀ and d₁ are the endpoint distances. R has
/// unit volatility, so the only approximation is the drift of R inside a
/// step, which the bridge law does not see.
pub fn cev_first_passage(p: &CevParams, level: f64, horizon: f64, steps: usize, paths: usize, seed: u64) -> Result<Vec<Option<f64>>> {
    let cfg = PathConfig::new(horizon, steps, paths, seed);
    cfg.validate()?;
    p.validate_defaultable()?;
    if !(level > 0.0) {
        return Err(crate::error::Error::Domain(format!("trigger level must be positive, got {level}")));
    }
    if level >= p.spot {
        return Ok(vec![Some(0.0); paths]);
    }
    let m = cev_to_bessel(p)?;
    let u_end = m.clock(horizon);
    let du = u_end / steps as f64;
    let us: Vec<f64> = (0..=steps).map(|i| i as f64 * du).collect();
    let ts: Vec<f64> = us.iter().map(|&u| m.clock_inverse(u).unwrap_or(horizon).min(horizon)).collect();
    let barrier: Vec<f64> = ts
        .iter()
        .map(|&t| (level * (-p.rate * t).exp()).powf(1.0 / m.power).sqrt())
        .collect();
    run_paths(paths, seed, |rng, _| {
        let mut y = m.start;
        for i in 0..steps {
            let s = crate::mc::besq::besq_step(m.dimension, y, du, rng)?;
            let r0 = y.sqrt();
            let r1 = s.value.sqrt();
            let d0 = r0 - barrier[i];
            let d1 = r1 - barrier[i + 1];
            if s.hit.is_some() || d1 <= 0.0 {
                return Ok(Some(ts[i + 1]));
            }
            let cross = (-2.0 * d0 * d1 / du).exp();
            if rng.random::<f64>() < cross {
                // place the crossing at the step midpoint in clock time
                return Ok(Some(m.clock_inverse(us[i] + 0.5 * du).unwrap_or(horizon).min(horizon)));
            }
            y = s.value;
        }
        Ok(None)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel_cev::default_probability;
    use crate::mc::summarize_paired;
    use crate::vanilla::cev_call;

    fn reference() -> CevParams {
        CevParams::new(1.0, 0.05, 0.5, 0.5)
    }

    fn stats(paths: &[CevPath], p: &CevParams, t: f64, antithetic: bool) -> [crate::mc::SimResult; 3] {
        let df = (-p.rate * t).exp();
        let absorbed = paths.iter().filter(|q| q.default_time.is_some()).count();
        let d: Vec<f64> = paths.iter().map(|q| q.default_time.map_or(0.0, |_| 1.0)).collect();
        let s: Vec<f64> = paths.iter().map(|q| df * q.terminal).collect();
        let c: Vec<f64> = paths.iter().map(|q| df * (q.terminal - 1.0).max(0.0)).collect();
        [
            summarize_paired(&d, absorbed, antithetic),
            summarize_paired(&s, absorbed, antithetic),
            summarize_paired(&c, absorbed, antithetic),
        ]
    }

    #[test]
    fn exact_scheme_matches_closed_forms() {
        let p = reference();
        let cfg = PathConfig::new(1.0, 1, 100_000, 2024);
        let paths = simulate_cev(&p, &cfg).unwrap();
        let [d, s, c] = stats(&paths, &p, 1.0, false);
        assert!(d.covers(default_probability(&p, 1.0).unwrap(), 3.0, 0.0), "{d:?}");
        assert!(s.covers(1.0, 3.0, 0.0), "{s:?}");
        assert!(c.covers(cev_call(&p, 1.0, 1.0).unwrap(), 3.0, 0.0), "{c:?}");
        for q in &paths {
            if let Some(t) = q.default_time {
                assert!(t > 0.0 && t <= 1.0 + 1e-12);
                assert_eq!(q.terminal, 0.0);
            }
        }
    }

    #[test]
    fn default_times_on_a_grid_are_consistent() {
        let p = reference();
        let cfg = PathConfig::new(2.0, 8, 20_000, 5);
        let paths = simulate_cev_paths(&p, &cfg).unwrap();
        let times = cfg.times();
        let mut early = 0.0;
        for q in &paths {
            let v = q.values.as_ref().unwrap();
            for (k, &t) in times.iter().enumerate() {
                let dead = q.default_time.is_some_and(|d| d <= t + 1e-12);
                assert_eq!(dead, v[k] == 0.0, "t={t} {:?}", q.default_time);
            }
            if q.default_time.is_some_and(|d| d <= 1.0) {
                early += 1.0;
            }
        }
        let frac = early / paths.len() as f64;
        let want = default_probability(&p, 1.0).unwrap();
        let se = (want * (1.0 - want) / paths.len() as f64).sqrt();
        assert!((frac - want).abs() < 3.0 * se, "{frac} vs {want}");
    }

    #[test]
    fn euler_agrees_with_exact() {
        let p = reference();
        let t = 1.0;
        let exact = simulate_cev(&p, &PathConfig::new(t, 1, 40_000, 77)).unwrap();
        let cfg = PathConfig::new(t, 1000, 20_000, 78)
            .with_scheme(Scheme::Euler)
            .with_antithetic(true);
        let euler = simulate_cev(&p, &cfg).unwrap();
        let a = stats(&exact, &p, t, false);
        let b = stats(&euler, &p, t, true);
        for (x, y) in a.iter().zip(&b) {
            let joint = (x.std_error.powi(2) + y.std_error.powi(2)).sqrt();
            assert!((x.estimate - y.estimate).abs() < 3.0 * joint, "{x:?} vs {y:?}");
        }
    }

    #[test]
    fn non_defaulting_regime_loses_mass() {
        let p = CevParams::new(1.0, 0.05, 0.5, 1.5);
        let paths = simulate_cev(&p, &PathConfig::new(1.0, 1, 50_000, 3)).unwrap();
        assert!(paths.iter().all(|q| q.default_time.is_none() && q.terminal > 0.0));
    }
}
