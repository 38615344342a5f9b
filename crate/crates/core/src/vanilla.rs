//! European options on the stopped CEV stock and on time-changed Bessel
//! stocks conditional on the realized clock.

use serde::{Deserialize, Serialize};

use crate::bessel_cev::{cev_to_bessel, CevParams};
use crate::error::{domain, Result};
use crate::specfun::ncchi2::{ncchi2_cdf, ncchi2_q, NoncentralChi2Args};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionSide {
    Call,
    Put,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionContract {
    pub strike: f64,
    pub maturity: f64,
    pub side: OptionSide,
}

impl OptionContract {
    pub fn new(strike: f64, maturity: f64, side: OptionSide) -> Self {
        Self {
            strike,
            maturity,
            side,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strike > 0.0) || !self.strike.is_finite() {
            return domain(format!("strike must be positive, got {}", self.strike));
        }
        if !(self.maturity > 0.0) || !self.maturity.is_finite() {
            return domain(format!("maturity must be positive, got {}", self.maturity));
        }
        Ok(())
    }
}

/// A call and put pair at a common strike and maturity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CallPut {
    pub call: f64,
    pub put: f64,
}

impl CallPut {
    /// C − P − (S0 − K e^{−rT}).
    pub fn parity_residual(&self, spot: f64, discounted_strike: f64) -> f64 {
        self.call - self.put - (spot - discounted_strike)
    }
}

/// Realized value z of the correlation driver with ρ and E[e^{ρz}].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPair {
    pub rho: f64,
    pub z: f64,
    pub normalizer: f64,
}

impl CorrelationPair {
    /// e^{ρz}/E[e^{ρz}].
    pub fn multiplier(&self) -> f64 {
        (self.rho * self.z).exp() / self.normalizer
    }
}

/// Arguments of the conditional Bessel option kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselKernelArgs {
    /// Realized clock value.
    pub clock: f64,
    /// Squared Bessel dimension δ < 2.
    pub dimension: f64,
    pub strike: f64,
    pub maturity: f64,
    pub spot: f64,
    pub rate: f64,
    pub correlation: Option<CorrelationPair>,
}

/// Call and put on e^{rT} Y(x)^{(2−δ)/2}, Y a squared Bessel process of
/// dimension δ started at S0^{2/(2−δ)} and absorbed at 0, conditional on the
/// clock value x. With a correlation pair the stock is further multiplied by
/// m = e^{ρz}/E[e^{ρz}], which gives m · kernel(K/m).
pub fn bessel_kernel(a: &BesselKernelArgs) -> Result<CallPut> {
    if !(a.dimension < 2.0) {
        return domain(format!("kernel needs dimension < 2, got {}", a.dimension));
    }
    if !(a.spot > 0.0) || !(a.strike > 0.0) || !(a.maturity > 0.0) {
        return domain("kernel needs positive spot, strike and maturity");
    }
    let m = match a.correlation {
        Some(c) => {
            let m = c.multiplier();
            if !(m > 0.0) || !m.is_finite() {
                return domain(format!("correlation multiplier must be positive, got {m}"));
            }
            m
        }
        None => 1.0,
    };
    let kd = a.strike * (-a.rate * a.maturity).exp() / m;
    let s0 = a.spot;
    if !(a.clock > 0.0) {
        // no diffusion: the stock is its forward
        return Ok(CallPut {
            call: m * (s0 - kd).max(0.0),
            put: m * (kd - s0).max(0.0),
        });
    }
    let e = 2.0 - a.dimension;
    let pw = 2.0 / e;
    let xs = s0.powf(pw) / a.clock;
    let xk = kd.powf(pw) / a.clock;
    // Compute the out-of-the-money side directly and the other by parity.
    let cp = if kd >= s0 {
        let call = s0 * ncchi2_q(NoncentralChi2Args::new(xk, 4.0 - a.dimension, xs))?
            - kd * ncchi2_cdf(NoncentralChi2Args::new(xs, e, xk))?;
        let call = call.max(0.0);
        CallPut {
            call,
            put: call - s0 + kd,
        }
    } else {
        let put = kd * ncchi2_q(NoncentralChi2Args::new(xs, e, xk))?
            - s0 * ncchi2_cdf(NoncentralChi2Args::new(xk, 4.0 - a.dimension, xs))?;
        let put = put.max(0.0);
        CallPut {
            call: put + s0 - kd,
            put,
        }
    };
    Ok(CallPut {
        call: m * cp.call,
        put: m * cp.put,
    })
}

pub fn bessel_kernel_call(a: &BesselKernelArgs) -> Result<f64> {
    Ok(bessel_kernel(a)?.call)
}

pub fn bessel_kernel_put(a: &BesselKernelArgs) -> Result<f64> {
    Ok(bessel_kernel(a)?.put)
}

/// Call and put under the stopped CEV model.
pub fn cev_call_put(p: &CevParams, strike: f64, maturity: f64) -> Result<CallPut> {
    p.validate_defaultable()?;
    OptionContract::new(strike, maturity, OptionSide::Call).validate()?;
    let m = cev_to_bessel(p)?;
    bessel_kernel(&BesselKernelArgs {
        clock: m.clock(maturity),
        dimension: m.dimension,
        strike,
        maturity,
        spot: p.spot,
        rate: p.rate,
        correlation: None,
    })
}

pub fn cev_price(p: &CevParams, c: &OptionContract) -> Result<f64> {
    c.validate()?;
    let cp = cev_call_put(p, c.strike, c.maturity)?;
    Ok(match c.side {
        OptionSide::Call => cp.call,
        OptionSide::Put => cp.put,
    })
}

pub fn cev_call(p: &CevParams, strike: f64, maturity: f64) -> Result<f64> {
    Ok(cev_call_put(p, strike, maturity)?.call)
}

pub fn cev_put(p: &CevParams, strike: f64, maturity: f64) -> Result<f64> {
    Ok(cev_call_put(p, strike, maturity)?.put)
}

/// Volatility scale σ at which the CEV call matches `target`, by bisection on
/// log σ. Calls are increasing in σ.
pub fn implied_sigma(p: &CevParams, strike: f64, maturity: f64, target: f64) -> Result<f64> {
    let price = |s: f64| cev_call(&CevParams { sigma: s, ..*p }, strike, maturity);
    let (mut lo, mut hi) = (1e-4f64, 10.0f64);
    let (plo, phi) = (price(lo)?, price(hi)?);
    if !(target >= plo && target <= phi) {
        return domain(format!("target {target} outside attainable range [{plo}, {phi}]"));
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if price(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-13 {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel_cev::default_probability;

    fn reference() -> CevParams {
        CevParams::new(1.0, 0.05, 0.5, 0.5)
    }

    #[test]
    fn parity_on_grid() {
        for &a in &[0.2, 0.5, 0.8] {
            for &k in &[0.5, 1.0, 2.0] {
                for &t in &[0.25, 1.0, 5.0] {
                    let p = CevParams::new(1.0, 0.05, 0.5, a);
                    let cp = cev_call_put(&p, k, t).unwrap();
                    let r = cp.parity_residual(1.0, k * (-0.05 * t).exp());
                    assert!(r.abs() < 1e-10, "a={a} k={k} t={t}: {r}");
                    assert!(cp.call >= 0.0 && cp.put >= 0.0);
                }
            }
        }
    }

    #[test]
    fn printed_formula_agrees() {
        // C = S0 Q(z_T, 2+1/(1−α), 2ζ_T) − K e^{−rT}(1 − Q(2ζ_T, 1/(1−α), z_T))
        let p = CevParams::new(1.2, 0.04, 0.4, 0.6);
        let (k, t): (f64, f64) = (1.1, 2.0);
        let a = p.alpha;
        let eps = 2.0 * (1.0 - a) * p.rate * t;
        let zt = 2.0 * p.rate * k.powf(2.0 * (1.0 - a)) / (p.sigma.powi(2) * (1.0 - a) * (eps.exp() - 1.0));
        let zeta = p.rate * p.spot.powf(2.0 * (1.0 - a)) / ((1.0 - a) * p.sigma.powi(2) * (1.0 - (-eps).exp()));
        let q1 = ncchi2_q(NoncentralChi2Args::new(zt, 2.0 + 1.0 / (1.0 - a), 2.0 * zeta)).unwrap();
        let q2 = ncchi2_q(NoncentralChi2Args::new(2.0 * zeta, 1.0 / (1.0 - a), zt)).unwrap();
        let want = p.spot * q1 - k * (-p.rate * t).exp() * (1.0 - q2);
        let got = cev_call(&p, k, t).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn small_strike_limit() {
        let p = reference();
        let cp = cev_call_put(&p, 1e-12, 1.0).unwrap();
        assert!((cp.call - 1.0).abs() < 1e-10);
        assert!(cp.put.abs() < 1e-10);
    }

    #[test]
    fn call_monotone_convex_in_strike() {
        let p = reference();
        let ks: Vec<f64> = (1..60).map(|i| 0.05 * i as f64).collect();
        let c: Vec<f64> = ks.iter().map(|&k| cev_call(&p, k, 1.0).unwrap()).collect();
        for w in c.windows(2) {
            assert!(w[1] <= w[0] + 1e-14);
        }
        for w in c.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-9, "{:?}", w);
        }
    }

    #[test]
    fn put_dominates_default_payoff() {
        let p = reference();
        for &k in &[0.3, 1.0, 3.0] {
            for &t in &[0.5, 2.0, 5.0] {
                let put = cev_put(&p, k, t).unwrap();
                let floor = k * (-p.rate * t).exp() * default_probability(&p, t).unwrap();
                assert!(put >= floor - 1e-12);
            }
        }
    }

    #[test]
    fn kernel_matches_cev_and_ignores_zero_rho() {
        let p = reference();
        let m = cev_to_bessel(&p).unwrap();
        let base = BesselKernelArgs {
            clock: m.clock(1.0),
            dimension: m.dimension,
            strike: 0.9,
            maturity: 1.0,
            spot: 1.0,
            rate: 0.05,
            correlation: None,
        };
        let k = bessel_kernel(&base).unwrap();
        let c = cev_call_put(&p, 0.9, 1.0).unwrap();
        assert!((k.call - c.call).abs() < 1e-10);
        let z = BesselKernelArgs {
            correlation: Some(CorrelationPair {
                rho: 0.0,
                z: 3.7,
                normalizer: 1.0,
            }),
            ..base
        };
        assert_eq!(bessel_kernel(&z).unwrap(), k);
    }

    #[test]
    fn implied_sigma_roundtrip() {
        let p = reference();
        let target = cev_call(&p, 1.0, 1.0).unwrap();
        let s = implied_sigma(&CevParams { sigma: 0.2, ..p }, 1.0, 1.0, target).unwrap();
        assert!((s - 0.5).abs() < 1e-9);
    }
}
