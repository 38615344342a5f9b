//! Prices and default probabilities of time-changed Bessel stocks
//! S_t = e^{rt} Y(H_t)^{1−δ/2} e^{ρz_t}/E[e^{ρz_t}], with Y a squared Bessel
//! process of dimension δ < 2 absorbed at 0 and H an independent clock.
//!
//! Without correlation every quantity mixes the conditional Bessel formulas
//! over the law of H_T. That law comes from Laplace inversion when the clock
//! has a complex transform, from the Yor density for the Hull–White clock
//! and from simulated clock paths otherwise. With correlation the mixture
//! runs over simulated pairs (H_T, z_T).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel_cev::{cev_to_bessel, CevParams, SquaredBesselSpec};
use crate::credit_swaps::{SwapQuote, SwapSchedule};
use crate::error::{domain, Error, Result};
use crate::mc::tc::clock_path;
use crate::mc::{run_paths, PathRng};
use crate::method::{Estimate, Method};
use crate::quad::gauss_legendre_on;
use crate::specfun::gamma::gamma_tail;
use crate::time_change::{
    clock_density, clock_density_value, clock_inversion, clock_support, corr_driver_z, has_laplace_inversion,
    CorrelationDriver, HullWhiteSpec, TimeChangeSpec,
};
use crate::transform::EulerInversion;
use crate::vanilla::{bessel_kernel, BesselKernelArgs, CorrelationPair, OptionContract, OptionSide};

/// A time-changed Bessel stock model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcModelSpec {
    /// Dimension δ < 2 and start S0^{2/(2−δ)}.
    pub bessel: SquaredBesselSpec,
    pub clock: TimeChangeSpec,
    pub rate: f64,
    /// ρ ∈ [−1, 0] of the multiplier e^{ρz}/E[e^{ρz}].
    #[serde(default)]
    pub correlation: Option<f64>,
}

impl TcModelSpec {
    pub fn new(dimension: f64, spot: f64, rate: f64, clock: TimeChangeSpec) -> Self {
        Self {
            bessel: SquaredBesselSpec::new(dimension, spot.powf(2.0 / (2.0 - dimension))),
            clock,
            rate,
            correlation: None,
        }
    }

    pub fn with_correlation(self, rho: f64) -> Self {
        Self { correlation: Some(rho), ..self }
    }

    /// The CEV stock as a Bessel stock on its deterministic clock.
    pub fn from_cev(p: &CevParams) -> Result<Self> {
        let m = cev_to_bessel(p)?;
        Ok(Self { bessel: m.bessel(), clock: TimeChangeSpec::of_cev(&m), rate: p.rate, correlation: None })
    }

    pub fn spot(&self) -> f64 {
        self.bessel.start.powf(1.0 - 0.5 * self.bessel.dimension)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bessel.dimension < 2.0) {
            return domain(format!("time-changed stock needs dimension < 2, got {}", self.bessel.dimension));
        }
        if !(self.bessel.start > 0.0) || !self.bessel.start.is_finite() {
            return domain(format!("Bessel start must be positive, got {}", self.bessel.start));
        }
        if !self.rate.is_finite() {
            return domain("rate must be finite");
        }
        self.clock.validate()?;
        if !self.clock.mean(1.0).is_finite() {
            return domain(format!("the {} clock has no finite mean", self.clock.name()));
        }
        if let Some(rho) = self.correlation {
            if !(-1.0..=0.0).contains(&rho) {
                return domain(format!("correlation must lie in [−1, 0], got {rho}"));
            }
        }
        Ok(())
    }

    /// The correlation driver, when a correlation is set.
    pub fn driver(&self) -> Result<Option<CorrelationDriver>> {
        match self.correlation {
            Some(rho) => Ok(Some(corr_driver_z(&self.clock, rho)?)),
            None => Ok(None),
        }
    }

    fn kernel(&self, clock: f64, strike: f64, maturity: f64, correlation: Option<CorrelationPair>) -> BesselKernelArgs {
        BesselKernelArgs {
            clock,
            dimension: self.bessel.dimension,
            strike,
            maturity,
            spot: self.spot(),
            rate: self.rate,
            correlation,
        }
    }

    /// P(T₀ ≤ x) = G(1 − δ/2, x0/(2x)) on the clock scale.
    fn absorbed_by(&self, clock: f64) -> Result<f64> {
        if !(clock > 0.0) {
            return Ok(0.0);
        }
        gamma_tail(self.bessel.hitting_index(), self.bessel.start / (2.0 * clock))
    }
}

/// Numerical settings of the mixtures and their simulation fallback.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TcOptions {
    /// Initial Gauss–Legendre nodes; the count goes n → 2n − 1.
    pub nodes: usize,
    pub max_nodes: usize,
    /// Change between successive node counts accepted as converged.
    pub stability: f64,
    /// Probability left outside the quadrature range on each side.
    pub tail: f64,
    pub paths: usize,
    pub steps_per_year: f64,
    pub seed: u64,
}

impl Default for TcOptions {
    fn default() -> Self {
        Self {
            nodes: 257,
            max_nodes: 2049,
            stability: 1e-6,
            tail: 1e-12,
            paths: 100_000,
            steps_per_year: 200.0,
            seed: 1,
        }
    }
}

/// Call, put and parity residual of a time-changed stock option.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TcPrice {
    pub call: f64,
    pub put: f64,
    /// C − P − (S0 − Ke^{−rT}).
    pub parity_residual: f64,
    pub method: Method,
    /// Quadrature stability and mass defect, or the larger standard error.
    pub error_estimate: f64,
    /// Quadrature nodes or simulated paths.
    pub evaluations: usize,
    /// Simulation replaced the quadrature.
    pub fallback: bool,
}

impl TcPrice {
    pub fn price(&self, side: OptionSide) -> f64 {
        match side {
            OptionSide::Call => self.call,
            OptionSide::Put => self.put,
        }
    }
}

/// Mixture values with their error, method and size.
#[derive(Debug, Clone, PartialEq)]
struct Mixed {
    values: Vec<f64>,
    error: f64,
    method: Method,
    evaluations: usize,
    fallback: bool,
}

/// ln-space range of the Hull–White clock from a lognormal fit to its first
/// two moments, E[A²] = 2/(6+2ν) ∫₀ˢ (e^{(8+4ν)u} − e^{(2+2ν)u}) du.
fn hull_white_log_range(h: &HullWhiteSpec, t: f64) -> (f64, f64) {
    let nu = h.nu();
    let s = h.eta * h.eta * t / 4.0;
    let e1 = |q: f64| if q.abs() < 1e-12 { s } else { (q * s).exp_m1() / q };
    let m1 = e1(2.0 + 2.0 * nu);
    let m2 = 2.0 / (6.0 + 2.0 * nu) * (e1(8.0 + 4.0 * nu) - e1(2.0 + 2.0 * nu));
    let var = (m2 / (m1 * m1)).ln().max(1e-6);
    let mu = (h.scale() * m1).ln() - 0.5 * var;
    let sd = var.sqrt();
    (mu - 12.0 * sd, mu + 12.0 * sd)
}

/// Nodes and density-weighted weights of the law of H_t.
fn quadrature_law(clock: &TimeChangeSpec, t: f64, n: usize, range: (f64, f64), inv: &EulerInversion) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let (lo, hi) = range;
    let (z, w) = gauss_legendre_on(n, lo, hi);
    let log_space = matches!(clock, TimeChangeSpec::HullWhite(_));
    let rows: Vec<Result<(f64, f64, f64)>> = z
        .par_iter()
        .zip(w.par_iter())
        .map(|(&z, &w)| {
            if log_space {
                let x = z.exp();
                let d = clock_density(clock, x, t, inv)?;
                Ok((x, w * x * d.value, w * x * d.error))
            } else {
                Ok((z, w * clock_density_value(clock, z, t, inv)?, 0.0))
            }
        })
        .collect();
    let mut x = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut err = 0.0;
    for r in rows {
        let (a, b, e) = r?;
        x.push(a);
        weights.push(b);
        err += e;
    }
    Ok((x, weights, err))
}

/// Mixes `f` over the law of H_t by Gauss–Legendre quadrature, doubling the
/// nodes until successive values agree to the stability target.
fn mix_quadrature<F>(clock: &TimeChangeSpec, t: f64, o: &TcOptions, f: &F) -> Result<Mixed>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    let inv = clock_inversion();
    let range = match clock {
        TimeChangeSpec::HullWhite(h) => hull_white_log_range(h, t),
        _ => clock_support(clock, t, o.tail, &inv)?,
    };
    let eval = |n: usize| -> Result<(Vec<f64>, f64, f64)> {
        let (x, w, law_err) = quadrature_law(clock, t, n, range, &inv)?;
        let rows: Vec<Vec<f64>> = x.par_iter().map(|&x| f(x)).collect::<Result<_>>()?;
        let k = rows.first().map_or(0, |r| r.len());
        let values = (0..k).map(|j| rows.iter().zip(&w).map(|(r, w)| r[j] * w).sum()).collect();
        let mass: f64 = w.iter().sum();
        Ok((values, mass, law_err))
    };
    let mut n = o.nodes;
    let (mut prev, _, _) = eval(n)?;
    loop {
        let next = 2 * n - 1;
        let (cur, mass, law_err) = eval(next)?;
        let diff = cur.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = cur.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if diff <= o.stability {
            return Ok(Mixed {
                values: cur,
                error: diff + ((mass - 1.0).abs() + law_err) * scale,
                method: if has_laplace_inversion(clock) { Method::Inversion } else { Method::Quadrature },
                evaluations: next,
                fallback: false,
            });
        }
        if 2 * next - 1 > o.max_nodes {
            return Err(Error::Tolerance { what: "clock mixture", estimate: diff, target: o.stability });
        }
        prev = cur;
        n = next;
    }
}

fn grid_for(t: f64, o: &TcOptions) -> Vec<f64> {
    let steps = ((t * o.steps_per_year).ceil() as usize).max(1);
    (0..=steps).map(|i| t * i as f64 / steps as f64).collect()
}

/// Linear interpolation of a grid path at u.
fn at(times: &[f64], values: &[f64], u: f64) -> f64 {
    let i = times.partition_point(|&s| s < u).clamp(1, times.len() - 1);
    let (t0, t1) = (times[i - 1], times[i]);
    let q = if t1 > t0 { ((u - t0) / (t1 - t0)).clamp(0.0, 1.0) } else { 1.0 };
    values[i - 1] + q * (values[i] - values[i - 1])
}

/// Simulated clock values at `times` and the driver at the last of them,
/// one row per path.
fn sample_clock(m: &TcModelSpec, times: &[f64], driver: Option<&CorrelationDriver>, o: &TcOptions) -> Result<Vec<(Vec<f64>, f64)>> {
    let horizon = times.iter().cloned().fold(0.0, f64::max);
    if !(horizon > 0.0) {
        return domain("sampled clock needs a positive horizon");
    }
    let grid = grid_for(horizon, o);
    run_paths(o.paths, o.seed, |rng: &mut PathRng, _| {
        let c = clock_path(&m.clock, &grid, rng)?;
        let n = grid.len() - 1;
        let z = driver.map_or(0.0, |d| d.value(c.rate[n], c.clock[n], c.level[n]));
        Ok((times.iter().map(|&u| at(&grid, &c.clock, u)).collect(), z))
    })
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    crate::mc::mean_and_se(xs)
}

/// Mixes `f(x, pair)` over simulated clock values at t, with the driver
/// multiplier normalized by its sample mean.
fn mix_samples<F>(m: &TcModelSpec, t: f64, driver: Option<&CorrelationDriver>, o: &TcOptions, f: &F) -> Result<Mixed>
where
    F: Fn(f64, Option<CorrelationPair>) -> Result<Vec<f64>> + Sync,
{
    let rows = sample_clock(m, &[t], driver, o)?;
    let pairs: Vec<Option<CorrelationPair>> = match driver {
        Some(d) => {
            // the sample mean of e^{ρz} replaces E[e^{ρz}], so the mixture keeps
            // E[multiplier] = 1 exactly and parity holds path by path
            let top = rows.iter().map(|r| d.rho * r.1).fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = rows.iter().map(|r| (d.rho * r.1 - top).exp()).collect();
            let norm = crate::quad::pairwise_sum(&e) / e.len() as f64;
            rows.iter()
                .map(|r| Some(CorrelationPair { rho: d.rho, z: r.1 - top / d.rho, normalizer: norm }))
                .collect()
        }
        None => vec![None; rows.len()],
    };
    let vals: Vec<Vec<f64>> = rows.iter().zip(&pairs).map(|(r, p)| f(r.0[0], *p)).collect::<Result<_>>()?;
    let k = vals.first().map_or(0, |v| v.len());
    let mut values = Vec::with_capacity(k);
    let mut error: f64 = 0.0;
    for j in 0..k {
        let col: Vec<f64> = vals.iter().map(|v| v[j]).collect();
        let (mu, se) = mean_and_se(&col);
        values.push(mu);
        error = error.max(se);
    }
    Ok(Mixed { values, error, method: Method::MonteCarlo, evaluations: o.paths, fallback: true })
}

/// Mixture over the uncorrelated law of H_t: exact for deterministic
/// clocks, quadrature where available, simulation otherwise or when the
/// quadrature fails numerically.
fn mix_clock<F>(m: &TcModelSpec, t: f64, o: &TcOptions, f: &F) -> Result<Mixed>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    if let Some(x) = m.clock.deterministic_value(t) {
        return Ok(Mixed { values: f(x)?, error: 0.0, method: Method::ClosedForm, evaluations: 1, fallback: false });
    }
    let quadrature = has_laplace_inversion(&m.clock) || matches!(m.clock, TimeChangeSpec::HullWhite(_));
    if quadrature {
        match mix_quadrature(&m.clock, t, o, f) {
            Ok(r) => return Ok(r),
            Err(e) if e.is_numerical() => {}
            Err(e) => return Err(e),
        }
    }
    mix_samples(m, t, None, o, &|x, _| f(x))
}

/// P(τ ≤ T) = E[G(1 − δ/2, x0/(2H_T))]. The correlation does not enter.
pub fn tc_default_probability_with(m: &TcModelSpec, t: f64, o: &TcOptions) -> Result<Estimate> {
    m.validate()?;
    if !(t >= 0.0) || !t.is_finite() {
        return domain(format!("horizon must be nonnegative, got {t}"));
    }
    if t == 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    let r = mix_clock(m, t, o, &|x| Ok(vec![m.absorbed_by(x)?]))?;
    Ok(Estimate::new(r.values[0].clamp(0.0, 1.0), r.error, r.method))
}

pub fn tc_default_probability(m: &TcModelSpec, t: f64) -> Result<Estimate> {
    tc_default_probability_with(m, t, &TcOptions::default())
}

/// Call and put at (K, T) mixed over the clock law, or over the joint law of
/// (H_T, z_T) by simulation when ρ ≠ 0.
pub fn tc_call_put(m: &TcModelSpec, strike: f64, maturity: f64, o: &TcOptions) -> Result<TcPrice> {
    m.validate()?;
    OptionContract::new(strike, maturity, OptionSide::Call).validate()?;
    let driver = m.driver()?;
    let kernel = |x: f64, pair: Option<CorrelationPair>| -> Result<Vec<f64>> {
        let cp = bessel_kernel(&m.kernel(x, strike, maturity, pair))?;
        Ok(vec![cp.call, cp.put])
    };
    let r = match driver {
        Some(d) if d.rho != 0.0 => mix_samples(m, maturity, Some(&d), o, &kernel)?,
        Some(d) => {
            // e^{0·z}/1 is one whatever z is, so the marginal law of H_T suffices
            let pair = CorrelationPair { rho: 0.0, z: 0.0, normalizer: d.normalizer(maturity)? };
            mix_clock(m, maturity, o, &|x| kernel(x, Some(pair)))?
        }
        None => mix_clock(m, maturity, o, &|x| kernel(x, None))?,
    };
    let (call, put) = (r.values[0], r.values[1]);
    Ok(TcPrice {
        call,
        put,
        parity_residual: call - put - (m.spot() - strike * (-m.rate * maturity).exp()),
        method: r.method,
        error_estimate: r.error,
        evaluations: r.evaluations,
        fallback: r.fallback,
    })
}

pub fn tc_option_price(m: &TcModelSpec, c: &OptionContract) -> Result<TcPrice> {
    c.validate()?;
    tc_call_put(m, c.strike, c.maturity, &TcOptions::default())
}

/// P(τ ≤ t) on a set of times. Simulated clocks share one set of paths.
pub fn tc_default_curve(m: &TcModelSpec, times: &[f64], o: &TcOptions) -> Result<Vec<Estimate>> {
    m.validate()?;
    let sampled = m.clock.deterministic_value(0.0).is_none()
        && !has_laplace_inversion(&m.clock)
        && !matches!(m.clock, TimeChangeSpec::HullWhite(_));
    if !sampled {
        return times.par_iter().map(|&t| tc_default_probability_with(m, t, o)).collect();
    }
    if times.iter().any(|t| !(*t >= 0.0)) {
        return domain("default curve times must be nonnegative");
    }
    let rows = sample_clock(m, times, None, o)?;
    (0..times.len())
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| m.absorbed_by(r.0[j])).collect::<Result<_>>()?;
            let (mu, se) = mean_and_se(&col);
            Ok(Estimate::new(mu, se, Method::MonteCarlo))
        })
        .collect()
}

/// Fritsch–Carlson monotone cubic Hermite interpolant.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n || x.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("monotone cubic needs at least two increasing abscissae");
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let del: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        d[0] = del[0];
        d[n - 1] = del[n - 2];
        for i in 1..n - 1 {
            if del[i - 1] * del[i] > 0.0 {
                let (a, b) = (h[i - 1], h[i]);
                d[i] = 3.0 * (a + b) / ((2.0 * b + a) / del[i - 1] + (b + 2.0 * a) / del[i]);
            }
        }
        Ok(Self { x: x.to_vec(), y: y.to_vec(), d })
    }

    fn cell(&self, u: f64) -> usize {
        self.x.partition_point(|&s| s <= u).clamp(1, self.x.len() - 1) - 1
    }

    pub fn value(&self, u: f64) -> f64 {
        let i = self.cell(u);
        let h = self.x[i + 1] - self.x[i];
        let t = (u - self.x[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.y[i]
            + (t3 - 2.0 * t2 + t) * h * self.d[i]
            + (-2.0 * t3 + 3.0 * t2) * self.y[i + 1]
            + (t3 - t2) * h * self.d[i + 1]
    }

    pub fn derivative(&self, u: f64) -> f64 {
        let i = self.cell(u);
        let h = self.x[i + 1] - self.x[i];
        let t = (u - self.x[i]) / h;
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * self.y[i] + (-6.0 * t2 + 6.0 * t) * self.y[i + 1]) / h
            + (3.0 * t2 - 4.0 * t + 1.0) * self.d[i]
            + (3.0 * t2 - 2.0 * t) * self.d[i + 1]
    }

    /// ∫ g(u) p′(u) du over the whole grid, by Gauss–Legendre on each cell.
    pub fn integrate_derivative<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        self.x
            .windows(2)
            .map(|w| {
                let (u, q) = gauss_legendre_on(8, w[0], w[1]);
                u.iter().zip(&q).map(|(&u, &q)| q * g(u) * self.derivative(u)).sum::<f64>()
            })
            .sum()
    }
}

/// Points of the default-curve grid and Gauss–Legendre nodes of the
/// discounted default leg.
pub const CURVE_POINTS: usize = 40;

/// CDS legs under a time-changed default curve. The discounted default leg
/// is e^{−rT}P(T) + r∫₀ᵀ e^{−ru}P(u) du by Gauss–Legendre; the leg from the
/// monotone cubic derivative on a uniform grid is reported as its error.
pub fn tc_cds_quote(m: &TcModelSpec, s: &SwapSchedule, o: &TcOptions) -> Result<SwapQuote> {
    s.validate()?;
    m.validate()?;
    if matches!(m.clock, TimeChangeSpec::PointMass { .. }) {
        return domain("a point-mass clock has no term structure; use a deterministic clock");
    }
    let big_t = s.maturity();
    let r = m.rate;
    let grid: Vec<f64> = (0..=CURVE_POINTS).map(|i| big_t * i as f64 / CURVE_POINTS as f64).collect();
    let (gl, gw) = gauss_legendre_on(CURVE_POINTS, 0.0, big_t);
    let mut times = grid.clone();
    times.extend_from_slice(&gl);
    times.extend_from_slice(&s.dates);
    let curve = tc_default_curve(m, &times, o)?;
    let p: Vec<f64> = curve.iter().map(|e| e.value).collect();
    let n_grid = grid.len();
    let (p_grid, rest) = p.split_at(n_grid);
    let (p_gl, p_dates) = rest.split_at(gl.len());
    let integral: f64 = gw.iter().zip(p_gl).zip(&gl).map(|((w, p), u)| w * (-r * u).exp() * p).sum();
    let leg = (-r * big_t).exp() * p_grid[n_grid - 1] + r * integral;
    let spline = MonotoneCubic::new(&grid, p_grid)?;
    let leg_spline = spline.integrate_derivative(|u| (-r * u).exp());
    let protection = (1.0 - s.recovery) * leg;
    let annuity: f64 = s.dates.iter().zip(p_dates).map(|(t, p)| (-r * t).exp() * (1.0 - p)).sum();
    if !(annuity > 0.0) {
        return Err(Error::Degenerate("every survival probability vanishes".into()));
    }
    let curve_err = curve.iter().map(|e| e.error).fold(0.0, f64::max);
    let method = curve.iter().map(|e| e.method).find(|m| *m != Method::ClosedForm).unwrap_or(Method::ClosedForm);
    let coupon = protection / annuity;
    let err = (1.0 - s.recovery) * (leg - leg_spline).abs() / annuity + curve_err * (1.0 + coupon * s.dates.len() as f64);
    Ok(SwapQuote { coupon, protection, annuity, method, error_estimate: err })
}

pub fn tc_cds_coupon(m: &TcModelSpec, s: &SwapSchedule) -> Result<f64> {
    Ok(tc_cds_quote(m, s, &TcOptions::default())?.coupon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel_cev::default_probability;
    use crate::credit_swaps::cds_fair_coupon;
    use crate::time_change::{HestonCesvSpec, IntegratedCirSpec, IntegratedOuSpec, Subordinator};
    use crate::vanilla::cev_call_put;

    fn cev() -> CevParams {
        CevParams::new(1.0, 0.05, 0.5, 0.5)
    }

    fn cir(eta: f64) -> TcModelSpec {
        TcModelSpec::new(0.0, 1.0, 0.05, TimeChangeSpec::IntegratedCir(IntegratedCirSpec::new(1.0, 1.0, eta, 1.0)))
    }

    fn heston() -> TcModelSpec {
        let h = HestonCesvSpec { kappa: 2.0, theta: 0.04, eta: 0.3, v0: 0.04, alpha: 0.5, rate: 0.03 };
        TcModelSpec::new(h.stock_dimension(), 1.0, 0.03, TimeChangeSpec::HestonCesv(h))
    }

    #[test]
    fn deterministic_clock_is_the_cev_model() {
        let p = cev();
        let map = cev_to_bessel(&p).unwrap();
        for &t in &[0.5, 1.0, 5.0] {
            let pm = TcModelSpec { clock: TimeChangeSpec::PointMass { value: map.clock(t) }, ..TcModelSpec::from_cev(&p).unwrap() };
            for &k in &[0.5, 1.0, 1.6] {
                let a = tc_call_put(&pm, k, t, &TcOptions::default()).unwrap();
                let b = cev_call_put(&p, k, t).unwrap();
                assert!((a.call - b.call).abs() < 1e-10 && (a.put - b.put).abs() < 1e-10);
                assert_eq!(a.method, Method::ClosedForm);
            }
            let d = tc_default_probability(&TcModelSpec::from_cev(&p).unwrap(), t).unwrap().value;
            assert!((d - default_probability(&p, t).unwrap()).abs() < 1e-12);
        }
        assert_eq!(tc_default_probability(&cir(0.5), 0.0).unwrap().value, 0.0);
    }

    #[test]
    fn deterministic_cds_matches_the_cev_coupon() {
        let p = cev();
        let m = TcModelSpec::from_cev(&p).unwrap();
        for rec in [0.4, 1.0] {
            let s = SwapSchedule::periodic(5.0, 4, rec);
            let a = tc_cds_coupon(&m, &s).unwrap();
            let b = cds_fair_coupon(&p, &s).unwrap();
            assert!((a - b).abs() < 1e-8, "{a} {b}");
        }
        assert_eq!(tc_cds_coupon(&m, &SwapSchedule::periodic(5.0, 4, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn cir_mixture_parity_and_small_strike() {
        let m = cir(0.5);
        let o = TcOptions::default();
        let a = tc_call_put(&m, 1.0, 1.0, &o).unwrap();
        assert!(a.parity_residual.abs() < 1e-6, "{a:?}");
        assert_eq!(a.method, Method::Inversion);
        let z = tc_call_put(&m, 1e-10, 1.0, &o).unwrap();
        assert!((z.call - 1.0).abs() < 1e-6, "{z:?}");
        // ρ = 0 through the correlation machinery changes nothing
        let c = tc_call_put(&m.with_correlation(0.0), 1.0, 1.0, &o).unwrap();
        assert!((c.call - a.call).abs() < 1e-9 && (c.put - a.put).abs() < 1e-9);
    }

    #[test]
    fn default_probability_is_monotone_and_ignores_correlation() {
        let m = cir(0.5);
        let p: Vec<f64> = [0.25, 0.5, 1.0, 2.0, 4.0].iter().map(|&t| tc_default_probability(&m, t).unwrap().value).collect();
        assert!(p.windows(2).all(|w| w[1] >= w[0]), "{p:?}");
        let a = tc_default_probability(&m.with_correlation(-0.5), 1.0).unwrap();
        assert_eq!(a.value, p[2]);
        // where defaults are rare the absorption probability is convex in the
        // clock, so a more volatile clock at the same mean defaults more
        let low = |eta: f64| TcModelSpec::new(0.0, 1.0, 0.05, TimeChangeSpec::IntegratedCir(IntegratedCirSpec::new(1.0, 0.09, eta, 0.09)));
        let q: Vec<f64> = [0.1, 0.2, 0.3].iter().map(|&e| tc_default_probability(&low(e), 1.0).unwrap().value).collect();
        assert!(q.windows(2).all(|w| w[1] > w[0]), "{q:?}");
    }

    #[test]
    fn heston_mixture_is_coherent() {
        let m = heston();
        let a = tc_call_put(&m, 1.0, 1.0, &TcOptions::default()).unwrap();
        assert!(a.parity_residual.abs() < 1e-6, "{a:?}");
        let d = tc_default_probability(&m, 1.0).unwrap();
        assert!(d.value > 0.0 && d.value < 1e-3, "{d:?}");
    }

    #[test]
    fn simulated_clock_fallback() {
        let iou = IntegratedOuSpec { lambda: 0.8, h0: 0.3, subordinator: Subordinator::ExpJumpPoisson { rate: 2.0, mean: 0.5 } };
        let m = TcModelSpec::new(0.0, 1.0, 0.05, TimeChangeSpec::IntegratedOu(iou));
        let o = TcOptions { paths: 4000, ..TcOptions::default() };
        let a = tc_call_put(&m, 1.0, 1.0, &o).unwrap();
        assert!(a.fallback && a.method == Method::MonteCarlo);
        assert!(a.parity_residual.abs() < 1e-12);
        let c = tc_default_curve(&m, &[0.5, 1.0, 2.0], &o).unwrap();
        assert!(c[0].value <= c[1].value && c[1].value <= c[2].value);
    }

    #[test]
    fn correlated_prices_keep_parity() {
        let m = cir(0.5).with_correlation(-0.5);
        let o = TcOptions { paths: 4000, ..TcOptions::default() };
        let a = tc_call_put(&m, 1.0, 1.0, &o).unwrap();
        assert!(a.parity_residual.abs() < 1e-12, "{a:?}");
        assert!(a.fallback);
        let z = tc_call_put(&m, 1e-9, 1.0, &o).unwrap();
        assert!((z.call - 1.0).abs() < 1e-6);
        assert!(TcModelSpec { correlation: Some(0.3), ..m }.validate().is_err());
    }

    #[test]
    fn monotone_cubic_preserves_shape() {
        let x: Vec<f64> = (0..11).map(|i| i as f64 / 2.0).collect();
        let y: Vec<f64> = x.iter().map(|&u| 1.0 - (-u * u).exp()).collect();
        let s = MonotoneCubic::new(&x, &y).unwrap();
        let mut last = -1.0;
        for i in 0..=500 {
            let u = 5.0 * i as f64 / 500.0;
            let v = s.value(u);
            assert!(v >= last - 1e-15);
            assert!(s.derivative(u) >= -1e-12);
            last = v;
        }
        assert!((s.value(x[3]) - y[3]).abs() < 1e-15);
        let total = s.integrate_derivative(|_| 1.0);
        assert!((total - (y[10] - y[0])).abs() < 1e-12);
    }
}
