//! Credit and equity default swaps under the stopped CEV model.
//!
//! The CDS legs follow from the default-time law directly. The EDS legs need
//! the law of the first passage below a trigger L, which is known through its
//! Laplace transform E[e^{−λτ_L}] = φ_λ(S0)/φ_λ(L) with φ_λ the decreasing
//! Whittaker eigenfunction of the CEV generator. Both EDS legs are recovered
//! by numerical Laplace inversion at each payment date.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel_cev::{default_probability, default_time_density, CevParams};
use crate::error::{domain, Error, Result};
use crate::mc::cev::cev_first_passage;
use crate::mc::ratio_estimate;
use crate::method::{Estimate, Method};
use crate::quad::{integrate, QuadOptions};
use crate::specfun::whittaker::ln_gamma_whittaker_w;
use crate::transform::{invert_laplace, EulerInversion};

/// Payment dates, coupon, recovery and optional EDS trigger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapSchedule {
    pub dates: Vec<f64>,
    #[serde(default)]
    pub coupon: f64,
    pub recovery: f64,
    #[serde(default)]
    pub trigger: Option<f64>,
}

impl SwapSchedule {
    /// `per_year` equally spaced dates up to `maturity`.
    pub fn periodic(maturity: f64, per_year: usize, recovery: f64) -> Self {
        let n = (maturity * per_year as f64).round() as usize;
        let dates = (1..=n).map(|i| i as f64 / per_year as f64).collect();
        Self {
            dates,
            coupon: 0.0,
            recovery,
            trigger: None,
        }
    }

    pub fn with_trigger(self, level: f64) -> Self {
        Self {
            trigger: Some(level),
            ..self
        }
    }

    pub fn maturity(&self) -> f64 {
        *self.dates.last().unwrap_or(&0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dates.is_empty() {
            return Err(Error::Config("schedule has no payment dates".into()));
        }
        if !(self.dates[0] > 0.0) || self.dates.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("payment dates must be positive and strictly increasing".into()));
        }
        if !(0.0..=1.0).contains(&self.recovery) {
            return Err(Error::Config(format!("recovery must lie in [0, 1], got {}", self.recovery)));
        }
        if let Some(l) = self.trigger {
            if !(l > 0.0) {
                return Err(Error::Config(format!("trigger must be positive, got {l}")));
            }
        }
        Ok(())
    }
}

fn leg_quad() -> QuadOptions {
    QuadOptions::new(1e-14, 1e-13)
}

/// E[e^{−rτ} 1{τ ≤ t}] = e^{−rt}P(τ ≤ t) + r ∫₀ᵗ e^{−rs} P(τ ≤ s) ds.
pub fn discounted_default_leg(p: &CevParams, t: f64) -> Result<f64> {
    p.validate_defaultable()?;
    if !(t >= 0.0) {
        return domain(format!("horizon must be nonnegative, got {t}"));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let r = p.rate;
    let head = (-r * t).exp() * default_probability(p, t)?;
    if r == 0.0 {
        return Ok(head);
    }
    let f = |s: f64| (-r * s).exp() * default_probability(p, s).unwrap_or(f64::NAN);
    let q = integrate(f, 0.0, t, leg_quad()).require("default leg integral", 1e-10)?;
    Ok(head + r * q)
}

/// The same expectation as ∫₀ᵗ e^{−rs} f_τ(s) ds.
pub fn discounted_default_leg_density(p: &CevParams, t: f64) -> Result<f64> {
    p.validate_defaultable()?;
    if t <= 0.0 {
        return Ok(0.0);
    }
    let f = |s: f64| {
        if s <= 0.0 {
            0.0
        } else {
            (-p.rate * s).exp() * default_time_density(p, s).unwrap_or(f64::NAN)
        }
    };
    integrate(f, 0.0, t, leg_quad()).require("default density integral", 1e-10)
}

/// Protection leg, annuity and fair coupon of a swap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwapQuote {
    pub coupon: f64,
    pub protection: f64,
    pub annuity: f64,
    pub method: Method,
    pub error_estimate: f64,
}

fn quote(protection: f64, annuity: f64, method: Method, err: f64) -> Result<SwapQuote> {
    if !(annuity > 0.0) {
        return Err(Error::Degenerate("every survival probability vanishes".into()));
    }
    Ok(SwapQuote {
        coupon: protection / annuity,
        protection,
        annuity,
        method,
        error_estimate: err,
    })
}

/// CDS legs: (1 − R) E[e^{−rτ}1{τ ≤ Tₙ}] and Σ e^{−rTᵢ} P(τ > Tᵢ).
pub fn cds_quote(p: &CevParams, s: &SwapSchedule) -> Result<SwapQuote> {
    s.validate()?;
    let protection = (1.0 - s.recovery) * discounted_default_leg(p, s.maturity())?;
    let mut annuity = 0.0;
    for &t in &s.dates {
        annuity += (-p.rate * t).exp() * (1.0 - default_probability(p, t)?);
    }
    quote(protection, annuity, Method::ClosedForm, 1e-12 * protection.abs())
}

pub fn cds_fair_coupon(p: &CevParams, s: &SwapSchedule) -> Result<f64> {
    Ok(cds_quote(p, s)?.coupon)
}

/// Index k and order m of the Whittaker function for a complex rate λ.
pub fn whittaker_params(p: &CevParams, lambda: Complex64) -> (Complex64, f64) {
    let a = 1.0 - p.alpha;
    let m = 1.0 / (4.0 * a);
    let mu = p.rate;
    let k = mu.signum() * (m - 0.5) - lambda / (2.0 * mu.abs() * a);
    (k, m)
}

/// ln φ_λ(x) up to an additive constant independent of x, for complex λ:
/// φ_λ(x) = x^{α−1/2} exp(−μ x^{2(1−α)}/(2σ²(1−α))) W_{k,m}(|μ| x^{2(1−α)}/(σ²(1−α))).
pub fn ln_first_passage_phi(p: &CevParams, lambda: Complex64, x: f64) -> Result<Complex64> {
    p.validate_defaultable()?;
    if p.rate == 0.0 {
        return domain("the Whittaker eigenfunction needs a nonzero rate");
    }
    if !(x > 0.0) {
        return domain(format!("phi needs x > 0, got {x}"));
    }
    let a = 1.0 - p.alpha;
    let (k, m) = whittaker_params(p, lambda);
    let y = p.rate.abs() * x.powf(2.0 * a) / (p.sigma * p.sigma * a);
    let w = ln_gamma_whittaker_w(k, m, y)?;
    Ok((p.alpha - 0.5) * x.ln() - p.rate.signum() * 0.5 * y + w)
}

/// φ_λ(x) for real λ > 0, normalised by Γ(m − k + 1/2).
pub fn first_passage_phi(p: &CevParams, lambda: f64, x: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    Ok(ln_first_passage_phi(p, Complex64::new(lambda, 0.0), x)?.re.exp())
}

/// E[e^{−λτ_L}] = φ_λ(S0)/φ_λ(L) for complex λ with Re λ > −2|μ|(1−α).
pub fn first_passage_laplace(p: &CevParams, level: f64, lambda: Complex64) -> Result<Complex64> {
    if level >= p.spot {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let num = ln_first_passage_phi(p, lambda, p.spot)?;
    let den = ln_first_passage_phi(p, lambda, level)?;
    Ok((num - den).exp())
}

/// Settings of the EDS computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdsOptions {
    pub inversion: EulerInversion,
    /// Largest acceptable disagreement between two inversion orders.
    pub tolerance: f64,
    /// Monte Carlo fallback used when r = 0.
    pub mc_paths: usize,
    pub mc_steps: usize,
    pub seed: u64,
}

impl Default for EdsOptions {
    fn default() -> Self {
        Self {
            inversion: EulerInversion::default(),
            tolerance: 1e-6,
            mc_paths: 100_000,
            mc_steps: 2000,
            seed: 1,
        }
    }
}

/// P(τ_L ≤ t) and E[e^{−rτ_L}1{τ_L ≤ t}] at one date, with the larger of
/// the two inversion error estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PassageLegs {
    pub date: f64,
    pub probability: f64,
    pub discounted: f64,
    pub error: f64,
}

fn invert_pair<F: Fn(Complex64) -> Complex64>(f: F, t: f64, o: &EdsOptions) -> Result<(f64, f64)> {
    let v = invert_laplace(&f, t, &o.inversion)?;
    let finer = EulerInversion {
        m: o.inversion.m + 4,
        ..o.inversion
    };
    let w = invert_laplace(&f, t, &finer)?;
    Ok((v, (v - w).abs()))
}

/// First-passage legs at every date by Laplace inversion. Dates are
/// independent and evaluated in parallel; the result is in date order.
pub fn passage_legs(p: &CevParams, level: f64, dates: &[f64], o: &EdsOptions) -> Result<Vec<PassageLegs>> {
    p.validate_defaultable()?;
    if p.rate == 0.0 {
        return domain("Laplace inversion of first passage needs r != 0");
    }
    let r = p.rate;
    dates
        .par_iter()
        .map(|&t| {
            let fail = std::cell::Cell::new(None::<Error>);
            let lap = |s: Complex64| match first_passage_laplace(p, level, s) {
                Ok(v) => v,
                Err(e) => {
                    fail.set(Some(e));
                    Complex64::new(f64::NAN, 0.0)
                }
            };
            let (prob, e1) = invert_pair(|s| lap(s) / s, t, o).map_err(|e| fail.take().unwrap_or(e))?;
            let (disc, e2) = invert_pair(|s| lap(s + r) / s, t, o).map_err(|e| fail.take().unwrap_or(e))?;
            if let Some(e) = fail.take() {
                return Err(e);
            }
            let err = e1.max(e2);
            if err > o.tolerance {
                return Err(Error::Tolerance {
                    what: "first-passage inversion",
                    estimate: err,
                    target: o.tolerance,
                });
            }
            Ok(PassageLegs {
                date: t,
                probability: prob.clamp(0.0, 1.0),
                discounted: disc.clamp(0.0, 1.0),
                error: err,
            })
        })
        .collect()
}

/// P(τ_L ≤ t) by inversion.
pub fn first_passage_cdf(p: &CevParams, level: f64, t: f64) -> Result<f64> {
    Ok(passage_legs(p, level, &[t], &EdsOptions::default())?[0].probability)
}

/// EDS legs and coupon: E[e^{−rτ_L}1{τ_L ≤ Tₙ}] / Σ e^{−rTᵢ}P(τ_L > Tᵢ).
pub fn eds_quote(p: &CevParams, s: &SwapSchedule, o: &EdsOptions) -> Result<SwapQuote> {
    s.validate()?;
    let level = s
        .trigger
        .ok_or_else(|| Error::Config("an EDS needs a trigger level".into()))?;
    if !(level < p.spot) {
        return Err(Error::Config(format!("trigger {level} must lie below the spot {}", p.spot)));
    }
    if p.rate == 0.0 {
        return eds_monte_carlo(p, s, level, o);
    }
    let legs = passage_legs(p, level, &s.dates, o)?;
    // enforce a valid distribution function across the schedule
    let mut probs: Vec<f64> = legs.iter().map(|l| l.probability).collect();
    for i in 1..probs.len() {
        probs[i] = probs[i].max(probs[i - 1]);
    }
    let annuity: f64 = s
        .dates
        .iter()
        .zip(&probs)
        .map(|(&t, &q)| (-p.rate * t).exp() * (1.0 - q))
        .sum();
    let last = legs.last().unwrap();
    let err = legs.iter().map(|l| l.error).fold(0.0, f64::max);
    quote(last.discounted, annuity, Method::Inversion, err)
}

pub fn eds_fair_coupon(p: &CevParams, s: &SwapSchedule) -> Result<f64> {
    Ok(eds_quote(p, s, &EdsOptions::default())?.coupon)
}

/// Per-path EDS legs from simulated first-passage times.
pub fn eds_legs_from_passage(rate: f64, dates: &[f64], taus: &[Option<f64>]) -> (Vec<f64>, Vec<f64>) {
    let tn = *dates.last().unwrap();
    let prot = taus
        .iter()
        .map(|t| match t {
            Some(t) if *t <= tn => (-rate * t).exp(),
            _ => 0.0,
        })
        .collect();
    let ann = taus
        .iter()
        .map(|t| {
            dates
                .iter()
                .filter(|&&d| t.is_none_or(|x| x > d))
                .map(|&d| (-rate * d).exp())
                .sum()
        })
        .collect();
    (prot, ann)
}

fn eds_monte_carlo(p: &CevParams, s: &SwapSchedule, level: f64, o: &EdsOptions) -> Result<SwapQuote> {
    let taus = cev_first_passage(p, level, s.maturity(), o.mc_steps, o.mc_paths, o.seed)?;
    let (prot, ann) = eds_legs_from_passage(p.rate, &s.dates, &taus);
    let r = ratio_estimate(&prot, &ann);
    let n = prot.len() as f64;
    quote(prot.iter().sum::<f64>() / n, ann.iter().sum::<f64>() / n, Method::MonteCarlo, r.std_error)
}

/// Estimate of E[e^{−λτ_L}] with its method, for the CLI and tests.
pub fn passage_transform(p: &CevParams, level: f64, lambda: f64) -> Result<Estimate> {
    let v = first_passage_laplace(p, level, Complex64::new(lambda, 0.0))?;
    Ok(Estimate::new(v.re, 1e-10 * v.re.abs(), Method::ClosedForm))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> CevParams {
        CevParams::new(1.0, 0.05, 0.5, 0.5)
    }

    #[test]
    fn default_leg_dual_methods() {
        let p = reference();
        for &t in &[0.5, 1.0, 5.0] {
            let a = discounted_default_leg(&p, t).unwrap();
            let b = discounted_default_leg_density(&p, t).unwrap();
            assert!((a - b).abs() < 1e-8, "{t}: {a} {b}");
            assert!(a > 0.0 && a < default_probability(&p, t).unwrap());
        }
        let z = CevParams { rate: 0.0, ..p };
        let v = discounted_default_leg(&z, 2.0).unwrap();
        assert!((v - default_probability(&z, 2.0).unwrap()).abs() < 1e-15);
        assert_eq!(discounted_default_leg(&p, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn cds_limits() {
        let p = reference();
        let s = SwapSchedule::periodic(5.0, 4, 1.0);
        assert_eq!(cds_fair_coupon(&p, &s).unwrap(), 0.0);
        let s = SwapSchedule::periodic(5.0, 4, 0.4);
        assert_eq!(s.dates.len(), 20);
        let c: Vec<f64> = [5.0, 10.0, 50.0]
            .iter()
            .map(|&s0| cds_fair_coupon(&CevParams { spot: s0, ..p }, &s).unwrap())
            .collect();
        assert!(c[0] > c[1] && c[1] > c[2] && c[2] >= 0.0, "{c:?}");
    }

    #[test]
    fn passage_transform_limits() {
        let p = reference();
        let one = first_passage_laplace(&p, 1.0, Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(one.re, 1.0);
        let v: Vec<f64> = [1.0, 10.0, 100.0]
            .iter()
            .map(|&l| passage_transform(&p, 0.5, l).unwrap().value)
            .collect();
        assert!(v[0] > v[1] && v[1] > v[2] && v[2] > 0.0 && v[2] < 1e-3, "{v:?}");
        assert!(v[0] < 1.0);
        // equal arguments give an exact ratio of one
        let r = first_passage_phi(&p, 0.7, 0.8).unwrap() / first_passage_phi(&p, 0.7, 0.8).unwrap();
        assert_eq!(r, 1.0);
    }

    #[test]
    fn phi_is_decreasing() {
        for &a in &[0.3, 0.5, 0.8] {
            for &r in &[0.05, -0.03] {
                let p = CevParams::new(1.0, r, 0.4, a);
                let xs: Vec<f64> = (1..12).map(|i| 0.2 * i as f64).collect();
                let v: Vec<f64> = xs.iter().map(|&x| first_passage_phi(&p, 1.0, x).unwrap()).collect();
                assert!(v.windows(2).all(|w| w[1] < w[0]), "a={a} r={r}: {v:?}");
            }
        }
    }

    #[test]
    fn eds_tends_to_cds_as_the_trigger_vanishes() {
        let p = reference();
        let s = SwapSchedule::periodic(3.0, 4, 0.0);
        let cds = cds_fair_coupon(&p, &s).unwrap();
        let gaps: Vec<f64> = [1e-2, 1e-4, 1e-6]
            .iter()
            .map(|&l| eds_fair_coupon(&p, &s.clone().with_trigger(l)).unwrap() / cds - 1.0)
            .collect();
        assert!(gaps.iter().all(|&g| g > 0.0), "{gaps:?}");
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] < 1e-4, "{gaps:?}");
    }

    #[test]
    fn passage_cdf_is_monotone() {
        let p = reference();
        let dates: Vec<f64> = (1..=12).map(|i| 0.25 * i as f64).collect();
        let legs = passage_legs(&p, 0.5, &dates, &EdsOptions::default()).unwrap();
        for w in legs.windows(2) {
            assert!(w[1].probability >= w[0].probability - 1e-9);
            assert!(w[1].discounted >= w[0].discounted - 1e-9);
        }
        assert!(legs.iter().all(|l| l.discounted <= l.probability + 1e-9));
    }
}
