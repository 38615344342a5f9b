//! Time-changed Bessel stocks: a clock path H on the calendar grid, exact
//! squared Bessel transitions across the realized clock increments, and the
//! correlation multiplier e^{ρz_t}/E[e^{ρz_t}].

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use super::besq::besq_path_on;
use super::cir::cir_path_weighted;
use super::subordinator::iou_path;
use super::{run_paths, summarize, PathConfig, PathRng, SimResult};
use crate::error::{Error, Result};
use crate::sv_pricing::TcModelSpec;
use crate::time_change::{CorrelationDriver, HullWhiteSpec, TimeChangeSpec};

/// Largest clock increment, relative to the Bessel start, above which the
/// default time interpolated on the grid is flagged as coarse.
pub const CLOCK_RESOLUTION: f64 = 0.05;

/// A clock path on the calendar grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockPath {
    /// H at every grid time.
    pub clock: Vec<f64>,
    /// Clock rate h at every grid time.
    pub rate: Vec<f64>,
    /// Subordinator level at every grid time (zero for the diffusive clocks).
    pub level: Vec<f64>,
}

fn hull_white_path(s: &HullWhiteSpec, times: &[f64], rng: &mut PathRng) -> ClockPath {
    let a = 1.0 - s.alpha;
    let w = |u: f64| a * a * (-2.0 * a * s.rate * u).exp();
    let drift = s.theta - 0.5 * s.eta * s.eta;
    let mut v = s.sigma0_sq;
    let mut f = w(times[0]) * v;
    let mut acc = 0.0;
    let mut clock = vec![0.0];
    let mut rate = vec![f];
    for p in times.windows(2) {
        let dt = p[1] - p[0];
        let z: f64 = rng.sample(StandardNormal);
        v *= (drift * dt + s.eta * dt.sqrt() * z).exp();
        let g = w(p[1]) * v;
        acc += 0.5 * dt * (f + g);
        f = g;
        clock.push(acc);
        rate.push(g);
    }
    let level = vec![0.0; times.len()];
    ClockPath { clock, rate, level }
}

/// One clock path on `times`, which start at 0. A point-mass clock is
/// linear and reaches its value at the last grid time.
pub fn clock_path(clock: &TimeChangeSpec, times: &[f64], rng: &mut PathRng) -> Result<ClockPath> {
    let n = times.len();
    let t_end = *times.last().unwrap();
    let zeros = vec![0.0; n];
    Ok(match clock {
        TimeChangeSpec::PointMass { value } => ClockPath {
            clock: times.iter().map(|t| value * t / t_end).collect(),
            rate: vec![value / t_end; n],
            level: zeros,
        },
        TimeChangeSpec::Deterministic { .. } => ClockPath {
            clock: times.iter().map(|&t| clock.deterministic_value(t).unwrap()).collect(),
            rate: zeros.clone(),
            level: zeros,
        },
        TimeChangeSpec::IntegratedCir(s) => {
            let p = cir_path_weighted(s, times, |_| 1.0, true, rng)?;
            ClockPath { clock: p.integrals.unwrap(), rate: p.values.unwrap(), level: zeros }
        }
        TimeChangeSpec::HestonCesv(s) => {
            let p = cir_path_weighted(&s.variance(), times, |u| s.rate_weight(u), true, rng)?;
            let rate = p.values.unwrap().iter().zip(times).map(|(v, &u)| s.rate_weight(u) * v).collect();
            ClockPath { clock: p.integrals.unwrap(), rate, level: zeros }
        }
        TimeChangeSpec::HullWhite(s) => hull_white_path(s, times, rng),
        TimeChangeSpec::IntegratedOu(s) => {
            let g = iou_path(s, times, rng)?;
            ClockPath { clock: g.integral, rate: g.rate, level: g.level }
        }
    })
}

/// Terminal state of one time-changed stock path.
#[derive(Debug, Clone, PartialEq)]
pub struct TcPath {
    pub terminal: f64,
    pub default_time: Option<f64>,
    /// H_T and the driver z_T.
    pub clock: f64,
    pub driver: f64,
    /// e^{ρz_T}/E[e^{ρz_T}], one without correlation.
    pub multiplier: f64,
    pub values: Option<Vec<f64>>,
}

/// Paths of a time-changed stock with the checks they support.
#[derive(Debug, Clone, PartialEq)]
pub struct TcSimulation {
    pub times: Vec<f64>,
    pub rate: f64,
    pub spot: f64,
    pub paths: Vec<TcPath>,
    /// Paths whose largest clock increment exceeded [`CLOCK_RESOLUTION`]
    /// times the Bessel start.
    pub coarse_paths: usize,
}

impl TcSimulation {
    fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    fn absorbed(&self) -> usize {
        self.paths.iter().filter(|p| p.default_time.is_some()).count()
    }

    fn summary<F: Fn(&TcPath) -> f64>(&self, f: F) -> SimResult {
        let x: Vec<f64> = self.paths.iter().map(f).collect();
        summarize(&x, self.absorbed(), x.len())
    }

    /// E[e^{−rT}S_T], which should equal S0.
    pub fn discounted_mean(&self) -> SimResult {
        let d = (-self.rate * self.horizon()).exp();
        self.summary(|p| d * p.terminal)
    }

    /// Fraction of paths absorbed by the horizon.
    pub fn default_fraction(&self) -> SimResult {
        self.summary(|p| if p.default_time.is_some() { 1.0 } else { 0.0 })
    }

    pub fn call(&self, strike: f64) -> SimResult {
        let d = (-self.rate * self.horizon()).exp();
        self.summary(|p| d * (p.terminal - strike).max(0.0))
    }

    pub fn put(&self, strike: f64) -> SimResult {
        let d = (-self.rate * self.horizon()).exp();
        self.summary(|p| d * (strike - p.terminal).max(0.0))
    }

    /// Path-wise parity C − P − (S0 − Ke^{−rT}); its mean is zero exactly
    /// when the discounted stock has mean S0.
    pub fn parity_residual(&self, strike: f64) -> SimResult {
        let d = (-self.rate * self.horizon()).exp();
        self.summary(|p| d * (p.terminal - strike) - (self.spot - strike * d))
    }
}

/// Calendar time at which the clock path reaches `c`, interpolated
/// linearly within the grid cell.
fn calendar_time(times: &[f64], clock: &[f64], c: f64) -> f64 {
    let i = clock.partition_point(|&h| h < c).clamp(1, clock.len() - 1);
    let (h0, h1) = (clock[i - 1], clock[i]);
    if h1 > h0 {
        times[i - 1] + (times[i] - times[i - 1]) * ((c - h0) / (h1 - h0)).clamp(0.0, 1.0)
    } else {
        times[i]
    }
}

fn one_path(
    m: &TcModelSpec,
    driver: Option<&CorrelationDriver>,
    normalizers: &[f64],
    times: &[f64],
    record: bool,
    rng: &mut PathRng,
) -> Result<(TcPath, bool)> {
    let c = clock_path(&m.clock, times, rng)?;
    let b = besq_path_on(m.bessel.dimension, m.bessel.start, &c.clock, rng)?;
    let power = 1.0 - 0.5 * m.bessel.dimension;
    let n = times.len();
    let mult = |i: usize| match driver {
        Some(d) => (d.rho * d.value(c.rate[i], c.clock[i], c.level[i])).exp() / normalizers[i],
        None => 1.0,
    };
    let stock = |i: usize| {
        let y = b.values[i];
        if y <= 0.0 {
            0.0
        } else {
            (m.rate * times[i]).exp() * y.powf(power) * mult(i)
        }
    };
    let coarse = c.clock.windows(2).any(|w| w[1] - w[0] > CLOCK_RESOLUTION * m.bessel.start);
    let driver_value = driver.map_or(0.0, |d| d.value(c.rate[n - 1], c.clock[n - 1], c.level[n - 1]));
    Ok((
        TcPath {
            terminal: stock(n - 1),
            default_time: b.hit_time.map(|h| calendar_time(times, &c.clock, h)),
            clock: c.clock[n - 1],
            driver: driver_value,
            multiplier: mult(n - 1),
            values: record.then(|| (0..n).map(stock).collect()),
        },
        coarse,
    ))
}

/// Paths of S_t = e^{rt} Y(H_t)^{1−δ/2} e^{ρz_t}/E[e^{ρz_t}] on the grid of `cfg`.
pub fn simulate_tc_stock_with(m: &TcModelSpec, cfg: &PathConfig, record: bool) -> Result<TcSimulation> {
    cfg.validate()?;
    m.validate()?;
    let times = cfg.times();
    let driver = m.driver()?;
    let normalizers = match &driver {
        // intermediate normalizers are only needed for recorded values
        Some(d) if record => times.iter().map(|&t| d.normalizer(t)).collect::<Result<Vec<_>>>()?,
        Some(d) => {
            let mut v = vec![f64::NAN; times.len()];
            *v.last_mut().unwrap() = d.normalizer(cfg.horizon)?;
            v
        }
        None => Vec::new(),
    };
    let rows = run_paths(cfg.paths, cfg.seed, |rng, _| one_path(m, driver.as_ref(), &normalizers, &times, record, rng))?;
    let coarse_paths = rows.iter().filter(|r| r.1).count();
    Ok(TcSimulation {
        times,
        rate: m.rate,
        spot: m.spot(),
        paths: rows.into_iter().map(|r| r.0).collect(),
        coarse_paths,
    })
}

pub fn simulate_tc_stock(m: &TcModelSpec, cfg: &PathConfig) -> Result<TcSimulation> {
    simulate_tc_stock_with(m, cfg, false)
}

/// Writes recorded paths as `path,time,value,absorbed` rows.
pub fn write_path_csv(path: &Path, sim: &TcSimulation) -> Result<()> {
    let io = |e: std::io::Error| Error::Config(format!("cannot write {}: {e}", path.display()));
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(w, "path,time,value,absorbed").map_err(io)?;
    for (k, p) in sim.paths.iter().enumerate() {
        let values = p.values.as_ref().ok_or_else(|| Error::Config("paths were simulated without recorded values".into()))?;
        for (t, v) in sim.times.iter().zip(values) {
            let absorbed = p.default_time.is_some_and(|d| d <= *t);
            writeln!(w, "{k},{t:.17e},{v:.17e},{}", absorbed as u8).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}
