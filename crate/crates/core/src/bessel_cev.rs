//! The CEV diffusion as a power of a time-changed squared Bessel process.
//!
//! Under dX = rX dt + σX^α dW with α ≠ 1,
//!
//!   X_t = e^{rt} · Y(c(t))^{1/(2(1−α))},
//!
//! where Y is a squared Bessel process of dimension δ = (2α−1)/(α−1) started
//! at S0^{2(1−α)} and c is the deterministic clock
//! c(t) = (1−α)σ² (1 − e^{−2(1−α)rt}) / (2r). Default probabilities, default
//! time laws and the loss of martingality for α > 1 all reduce to gamma
//! tails evaluated at ζ = Y₀ / (2c(t)).

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::specfun::gamma::{gamma_tail, ln_gamma};
use crate::specfun::ncchi2::ncchi2_density;

/// Below this |2(1−α)rt| the clock uses its Taylor expansion.
pub const SMALL_RATE_SWITCH: f64 = 1e-6;

/// Parameters of dS = rS dt + σ S^α dW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CevParams {
    pub spot: f64,
    pub rate: f64,
    pub sigma: f64,
    pub alpha: f64,
}

impl CevParams {
    pub fn new(spot: f64, rate: f64, sigma: f64, alpha: f64) -> Self {
        Self {
            spot,
            rate,
            sigma,
            alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spot > 0.0) || !self.spot.is_finite() {
            return domain(format!("spot must be positive, got {}", self.spot));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return domain(format!("sigma must be positive, got {}", self.sigma));
        }
        if !self.rate.is_finite() || !self.alpha.is_finite() {
            return domain("rate and alpha must be finite");
        }
        Ok(())
    }

    /// Checks the default-capable regime α < 1.
    pub fn validate_defaultable(&self) -> Result<()> {
        self.validate()?;
        if !(self.alpha < 1.0) {
            return domain(format!(
                "operation requires alpha < 1 (defaultable CEV), got {}",
                self.alpha
            ));
        }
        Ok(())
    }

    /// ν = 1/(2(1−α)), the gamma shape of the default law.
    pub fn default_shape(&self) -> f64 {
        1.0 / (2.0 * (1.0 - self.alpha))
    }
}

/// A squared Bessel process of dimension δ started at x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquaredBesselSpec {
    pub dimension: f64,
    pub start: f64,
}

impl SquaredBesselSpec {
    pub fn new(dimension: f64, start: f64) -> Self {
        Self { dimension, start }
    }

    /// ν = 1 − δ/2.
    pub fn hitting_index(&self) -> f64 {
        1.0 - 0.5 * self.dimension
    }

    /// P(T₀ ≤ t) = G(1 − δ/2, x/(2t)) for δ < 2.
    pub fn hitting_time_cdf(&self, t: f64) -> Result<f64> {
        if !(self.dimension < 2.0) {
            return domain("zero is never reached for dimension ≥ 2");
        }
        if t <= 0.0 {
            return Ok(0.0);
        }
        if self.start == 0.0 {
            return Ok(1.0);
        }
        gamma_tail(self.hitting_index(), self.start / (2.0 * t))
    }

    /// Density on (0,∞) at time t of the process absorbed at 0, for δ < 2:
    /// (y/x)^{−ν} times the transition density of dimension 4 − δ.
    pub fn absorbed_density(&self, y: f64, t: f64) -> Result<f64> {
        if !(self.dimension < 2.0) || !(t > 0.0) || !(y > 0.0) || !(self.start > 0.0) {
            return domain("absorbed_density: need δ < 2 and positive x, y, t");
        }
        let nu = self.hitting_index();
        let p = ncchi2_density(y / t, 4.0 - self.dimension, self.start / t)? / t;
        Ok((y / self.start).powf(-nu) * p)
    }

    /// Mass of the absorbed law on (0, ∞), computed as a truncated moment of
    /// the dual-dimension transition law.
    pub fn surviving_mass(&self, t: f64) -> Result<f64> {
        use crate::specfun::ncchi2::{ncchi2_truncated_moment, NoncentralChi2Args};
        if !(self.dimension < 2.0) || !(t > 0.0) || !(self.start > 0.0) {
            return domain("surviving_mass: need δ < 2 and positive x, t");
        }
        let nu = self.hitting_index();
        let m = ncchi2_truncated_moment(
            NoncentralChi2Args::new(0.0, 4.0 - self.dimension, self.start / t),
            -nu,
        )?;
        Ok((t / self.start).powf(-nu) * m)
    }
}

/// The CEV ↔ squared Bessel dictionary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BesselClockMap {
    pub dimension: f64,
    pub start: f64,
    pub power: f64,
    pub rate: f64,
    /// (1−α)²σ², the clock speed at t = 0.
    pub clock_speed: f64,
    /// 2(1−α)r, the exponential decay rate of the clock speed.
    pub clock_decay: f64,
}

/// (1 − e^{−ε})/ε with its Taylor limit near 0.
pub fn one_minus_exp_ratio(eps: f64) -> f64 {
    if eps.abs() < SMALL_RATE_SWITCH {
        1.0 - eps / 2.0 + eps * eps / 6.0
    } else {
        -(-eps).exp_m1() / eps
    }
}

/// ε/(e^{ε} − 1) with its Taylor limit near 0.
fn ratio_over_expm1(eps: f64) -> f64 {
    if eps.abs() < SMALL_RATE_SWITCH {
        1.0 - eps / 2.0 + eps * eps / 12.0
    } else {
        eps / eps.exp_m1()
    }
}

impl BesselClockMap {
    /// c(t) = ∫₀ᵗ (1−α)²σ² e^{−2(1−α)rs} ds.
    pub fn clock(&self, t: f64) -> f64 {
        let eps = self.clock_decay * t;
        self.clock_speed * t * one_minus_exp_ratio(eps)
    }

    /// c′(t)/c(t).
    pub fn clock_log_derivative(&self, t: f64) -> f64 {
        let eps = self.clock_decay * t;
        ratio_over_expm1(eps) / t
    }

    /// Calendar time at which the clock reaches `c`, or `None` when the
    /// clock stays below `c` forever.
    pub fn clock_inverse(&self, c: f64) -> Option<f64> {
        if c <= 0.0 {
            return Some(0.0);
        }
        let u = self.clock_decay * c / self.clock_speed;
        if u.abs() < SMALL_RATE_SWITCH {
            return Some(c / self.clock_speed * (1.0 + u / 2.0 + u * u / 3.0));
        }
        if u >= 1.0 {
            return None;
        }
        Some(-(-u).ln_1p() / self.clock_decay)
    }

    pub fn growth(&self, t: f64) -> f64 {
        (self.rate * t).exp()
    }

    /// ζ(t) = Y₀ / (2 c(t)).
    pub fn zeta(&self, t: f64) -> f64 {
        self.start / (2.0 * self.clock(t))
    }

    /// Stock value from a Bessel value at clock time: e^{rt} y^p.
    pub fn to_stock(&self, y: f64, t: f64) -> f64 {
        if y <= 0.0 {
            0.0
        } else {
            self.growth(t) * y.powf(self.power)
        }
    }

    pub fn bessel(&self) -> SquaredBesselSpec {
        SquaredBesselSpec::new(self.dimension, self.start)
    }
}

/// Maps CEV parameters to the squared Bessel dimension, start, clock and power.
pub fn cev_to_bessel(p: &CevParams) -> Result<BesselClockMap> {
    p.validate()?;
    if p.alpha == 1.0 {
        return domain("alpha = 1 is the lognormal model, which has no Bessel representation here");
    }
    let a = p.alpha;
    Ok(BesselClockMap {
        dimension: (2.0 * a - 1.0) / (a - 1.0),
        start: p.spot.powf(2.0 * (1.0 - a)),
        power: 1.0 / (2.0 * (1.0 - a)),
        rate: p.rate,
        clock_speed: (1.0 - a).powi(2) * p.sigma * p.sigma,
        clock_decay: 2.0 * (1.0 - a) * p.rate,
    })
}

/// Behaviour of the CEV process at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    ReachedReflecting,
    ReachedAbsorbing,
    Unreachable,
}

pub fn boundary_classification(p: &CevParams) -> Boundary {
    if p.alpha <= 0.5 {
        Boundary::ReachedReflecting
    } else if p.alpha < 1.0 {
        Boundary::ReachedAbsorbing
    } else {
        Boundary::Unreachable
    }
}

/// ζ_T = r S0^{2(1−α)} / ((1−α)σ²(1 − e^{−2(1−α)rT})).
pub fn zeta_t(p: &CevParams, t: f64) -> Result<f64> {
    Ok(cev_to_bessel(p)?.zeta(t))
}

/// P(τ ≤ T) = G(1/(2(1−α)), ζ_T).
pub fn default_probability(p: &CevParams, t: f64) -> Result<f64> {
    p.validate_defaultable()?;
    if t < 0.0 {
        return domain(format!("maturity must be nonnegative, got {t}"));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let m = cev_to_bessel(p)?;
    gamma_tail(p.default_shape(), m.zeta(t))
}

/// Density of the default time at t > 0.
pub fn default_time_density(p: &CevParams, t: f64) -> Result<f64> {
    p.validate_defaultable()?;
    if !(t > 0.0) {
        return domain(format!("default_time_density needs t > 0, got {t}"));
    }
    let m = cev_to_bessel(p)?;
    let z = m.zeta(t);
    let nu = p.default_shape();
    // ζ^ν e^{−ζ}/Γ(ν) · c′/c
    let ln = nu * z.ln() - z - ln_gamma(nu);
    Ok(ln.exp() * m.clock_log_derivative(t))
}

/// T₀ of BESQ^δ_x, drawn as x/(2Z) with Z ~ Gamma(1 − δ/2, 1).
pub fn hitting_time_sampler<R: Rng + ?Sized>(spec: &SquaredBesselSpec, rng: &mut R) -> Result<f64> {
    if !(spec.dimension < 2.0) {
        return domain("zero is never reached for dimension ≥ 2");
    }
    if !(spec.start > 0.0) {
        return domain("hitting time needs a positive start");
    }
    let g = Gamma::new(spec.hitting_index(), 1.0)
        .map_err(|e| Error::Domain(format!("gamma sampler: {e}")))?;
    let z: f64 = g.sample(rng);
    Ok(spec.start / (2.0 * z))
}

/// γ(t) = S0 · G(1/(2(α−1)), ζ_t), the expected loss of the discounted
/// stock relative to S0 when α > 1.
pub fn martingality_default(p: &CevParams, t: f64) -> Result<f64> {
    p.validate()?;
    if !(p.alpha > 1.0) {
        return domain(format!(
            "the discounted CEV is a true martingale for alpha ≤ 1 (got {})",
            p.alpha
        ));
    }
    if t <= 0.0 {
        return Ok(0.0);
    }
    let m = cev_to_bessel(p)?;
    Ok(p.spot * gamma_tail(1.0 / (2.0 * (p.alpha - 1.0)), m.zeta(t))?)
}

/// The same quantity through the dual dimension 4 − δ: S0 · P^{(4−δ)}(T₀ ≤ c(t)).
pub fn martingality_default_dual(p: &CevParams, t: f64) -> Result<f64> {
    let m = cev_to_bessel(p)?;
    if !(p.alpha > 1.0) {
        return domain("dual identity applies for alpha > 1");
    }
    let dual = SquaredBesselSpec::new(4.0 - m.dimension, m.start);
    Ok(p.spot * dual.hitting_time_cdf(m.clock(t))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, QuadOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reference() -> CevParams {
        CevParams::new(1.0, 0.05, 0.5, 0.5)
    }

    #[test]
    fn dictionary_half() {
        let m = cev_to_bessel(&CevParams::new(2.0, 0.03, 0.2, 0.5)).unwrap();
        assert_eq!(m.dimension, 0.0);
        assert_eq!(m.power, 1.0);
        assert!((m.start - 2.0).abs() < 1e-15);
        let z = cev_to_bessel(&CevParams::new(1.0, 0.0, 0.2, 0.5)).unwrap();
        assert!((z.clock(1.0) - 0.01).abs() < 1e-16);
        assert!(cev_to_bessel(&CevParams::new(1.0, 0.0, 0.2, 1.0)).is_err());
    }

    #[test]
    fn clock_inverse_round_trip() {
        for &(r, a) in &[(0.05, 0.5), (0.0, 0.3), (-0.02, 0.8), (0.04, 1.5)] {
            let m = cev_to_bessel(&CevParams::new(1.0, r, 0.4, a)).unwrap();
            for &t in &[0.01, 1.0, 7.0] {
                let back = m.clock_inverse(m.clock(t)).unwrap();
                assert!((back - t).abs() < 1e-10 * t.max(1.0), "{r} {a} {t}: {back}");
            }
        }
        let m = cev_to_bessel(&CevParams::new(1.0, 0.05, 0.5, 0.5)).unwrap();
        assert!(m.clock_inverse(m.clock_speed / m.clock_decay * 1.01).is_none());
    }

    #[test]
    fn clock_near_zero_rate_is_continuous() {
        let a = cev_to_bessel(&CevParams::new(1.0, 1e-9, 0.3, 0.8)).unwrap();
        let b = cev_to_bessel(&CevParams::new(1.0, 2e-6, 0.3, 0.8)).unwrap();
        let c0 = (0.2f64 * 0.3).powi(2) * 2.0;
        assert!((a.clock(2.0) - c0).abs() < 1e-11);
        assert!((b.clock(2.0) - c0).abs() < 1e-7);
    }

    #[test]
    fn clock_matches_direct_formula() {
        let p = CevParams::new(1.0, 0.03, 0.3, 0.8);
        let m = cev_to_bessel(&p).unwrap();
        let t = 2.0;
        let direct = (p.alpha - 1.0) * p.sigma * p.sigma / (2.0 * p.rate)
            * ((2.0 * (p.alpha - 1.0) * p.rate * t).exp() - 1.0);
        assert!((m.clock(t) - direct).abs() < 1e-15);
    }

    #[test]
    fn boundary_cases() {
        assert_eq!(boundary_classification(&CevParams::new(1.0, 0.0, 1.0, 0.3)), Boundary::ReachedReflecting);
        assert_eq!(boundary_classification(&CevParams::new(1.0, 0.0, 1.0, 0.7)), Boundary::ReachedAbsorbing);
        assert_eq!(boundary_classification(&CevParams::new(1.0, 0.0, 1.0, 1.5)), Boundary::Unreachable);
    }

    #[test]
    fn default_probability_half_is_exponential() {
        let p = reference();
        let z = zeta_t(&p, 1.0).unwrap();
        assert!((default_probability(&p, 1.0).unwrap() - (-z).exp()).abs() < 1e-15);
        let big = default_probability(&p, 1e4).unwrap();
        let lim = gamma_tail(1.0, p.rate / (0.5 * 0.25)).unwrap();
        assert!((big - lim).abs() < 1e-12);
    }

    #[test]
    fn density_integrates_to_probability() {
        let p = reference();
        let t = 3.0;
        let r = integrate(|s: f64| default_time_density(&p, s.max(1e-300)).unwrap_or(0.0), 0.0, t, QuadOptions::new(1e-14, 1e-13));
        assert!((r.value - default_probability(&p, t).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn density_half_is_derivative_of_exponential() {
        let p = reference();
        let t: f64 = 1.3;
        // ζ_t = r x/((1-α)σ²(1-e^{-2(1-α)rt})), d/dt e^{-ζ} = -ζ' e^{-ζ}
        let z = zeta_t(&p, t).unwrap();
        let k = p.rate / (0.5 * 0.25);
        let e = (-2.0 * 0.5 * p.rate * t).exp();
        let dz = -k * 2.0 * 0.5 * p.rate * e / (1.0 - e).powi(2);
        let want = -dz * (-z).exp();
        assert!((default_time_density(&p, t).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn absorbed_mass_accounting() {
        for &(d, x, t) in &[(0.0, 1.0, 0.6), (1.0, 0.8, 1.5), (-1.5, 2.0, 3.0), (1.6, 0.3, 0.2)] {
            let s = SquaredBesselSpec::new(d, x);
            let total = s.surviving_mass(t).unwrap() + s.hitting_time_cdf(t).unwrap();
            assert!((total - 1.0).abs() < 1e-10, "δ={d}: {total}");
            let q = crate::quad::integrate_to_infinity(|y: f64| s.absorbed_density(y.max(1e-300), t).unwrap_or(0.0), 0.0, QuadOptions::new(1e-13, 1e-11));
            assert!((q.value - s.surviving_mass(t).unwrap()).abs() < 1e-8, "δ={d}");
        }
    }

    #[test]
    fn sampler_is_exponential_for_dimension_zero() {
        let s = SquaredBesselSpec::new(0.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 40_000;
        let hits = (0..n).filter(|_| hitting_time_sampler(&s, &mut rng).unwrap() > 1.0).count();
        let p = 1.0 - (-0.5f64).exp();
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!(((hits as f64 / n as f64) - p).abs() < 3.0 * se);
    }

    #[test]
    fn martingality_defect_and_dual() {
        let p = CevParams::new(1.0, 0.05, 0.5, 1.5);
        assert_eq!(martingality_default(&p, 0.0).unwrap(), 0.0);
        let mut prev = 0.0;
        for &t in &[0.1, 0.5, 1.0, 2.0, 5.0] {
            let g = martingality_default(&p, t).unwrap();
            let d = martingality_default_dual(&p, t).unwrap();
            assert!((g - d).abs() < 1e-12);
            assert!(g >= prev && g <= p.spot);
            prev = g;
        }
        assert!(martingality_default(&reference(), 1.0).is_err());
    }
}
