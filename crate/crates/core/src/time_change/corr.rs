//! Correlation drivers z_t and their normalizers E[e^{ρz_t}].
//!
//! For the integrated CIR clock z_t = h_t + (κ − ρη²/2)H_t, so that
//! ρz_t = ρ(h0 + κθt) + ρη∫√h dW − (ρ²η²/2)H_t and e^{ρz_t} is an
//! exponential martingale up to a constant. For the Heston clock
//! z_t = h_t + (κ − 2r/(δ−2) − ρη²/2)H_t with δ the stock dimension. Its
//! rate weight changes in time, so e^{ρz_t} is not an exact exponential
//! martingale and the normalizer comes from the joint transform. For the
//! integrated OU clock the driver is the subordinator itself.

use serde::Serialize;

use super::{
    ln_heston_cesv_joint_laplace, ln_integrated_cir_joint_laplace, subordinator_mgf, TimeChangeSpec,
};
use crate::error::{domain, Result};
use crate::vanilla::CorrelationPair;

/// How z_t is built from the clock state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DriverKind {
    /// z_t = h_t + c·H_t.
    RateAndClock { clock_coefficient: f64 },
    /// z_t is the driving subordinator.
    Subordinator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationDriver {
    pub rho: f64,
    pub kind: DriverKind,
    pub clock: TimeChangeSpec,
}

/// The driver recipe of a clock at correlation ρ.
pub fn corr_driver_z(clock: &TimeChangeSpec, rho: f64) -> Result<CorrelationDriver> {
    clock.validate()?;
    if !(rho.abs() <= 1.0) {
        return domain(format!("correlation must lie in [−1, 1], got {rho}"));
    }
    let kind = match clock {
        TimeChangeSpec::IntegratedCir(s) => DriverKind::RateAndClock {
            clock_coefficient: s.kappa - 0.5 * rho * s.eta * s.eta,
        },
        TimeChangeSpec::HestonCesv(s) => DriverKind::RateAndClock {
            clock_coefficient: s.kappa - 2.0 * s.rate / (s.stock_dimension() - 2.0) - 0.5 * rho * s.eta * s.eta,
        },
        TimeChangeSpec::IntegratedOu(_) => DriverKind::Subordinator,
        TimeChangeSpec::PointMass { .. } | TimeChangeSpec::Deterministic { .. } | TimeChangeSpec::HullWhite(_) => {
            return domain(format!("no correlation driver for the {} clock", clock.name()));
        }
    };
    Ok(CorrelationDriver { rho, kind, clock: *clock })
}

impl CorrelationDriver {
    /// z_t from the clock rate h_t, the clock H_t and the subordinator level.
    pub fn value(&self, rate: f64, clock: f64, level: f64) -> f64 {
        match self.kind {
            DriverKind::RateAndClock { clock_coefficient } => rate + clock_coefficient * clock,
            DriverKind::Subordinator => level,
        }
    }

    /// ln E[e^{ρz_t}], from the joint transform at (λ, μ) = (−ρc, −ρ). The
    /// Heston transform is only available for nonnegative arguments.
    pub fn ln_normalizer(&self, t: f64) -> Result<f64> {
        if self.rho == 0.0 {
            return Ok(0.0);
        }
        let rho = self.rho;
        match (self.kind, &self.clock) {
            (DriverKind::RateAndClock { clock_coefficient: c }, TimeChangeSpec::IntegratedCir(s)) => {
                ln_integrated_cir_joint_laplace(s, -rho * c, -rho, t)
            }
            (DriverKind::RateAndClock { clock_coefficient: c }, TimeChangeSpec::HestonCesv(s)) => {
                if rho * c > 0.0 || rho > 0.0 {
                    return domain(format!(
                        "E[e^(rho z)] for the Heston clock lies outside the continuation domain at rho = {rho}"
                    ));
                }
                ln_heston_cesv_joint_laplace(s, -rho * c, -rho, t)
            }
            (DriverKind::Subordinator, TimeChangeSpec::IntegratedOu(s)) => Ok(subordinator_mgf(&s.subordinator, rho, t)?.ln()),
            _ => domain("driver and clock do not match"),
        }
    }

    pub fn normalizer(&self, t: f64) -> Result<f64> {
        Ok(self.ln_normalizer(t)?.exp())
    }

    /// The multiplier inputs for one realized state.
    pub fn pair(&self, rate: f64, clock: f64, level: f64, normalizer: f64) -> CorrelationPair {
        CorrelationPair {
            rho: self.rho,
            z: self.value(rate, clock, level),
            normalizer,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::cir::cir_path_weighted;
    use crate::mc::{run_paths, summarize};
    use crate::time_change::{HestonCesvSpec, IntegratedCirSpec};
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn zero_correlation_is_neutral() {
        let c = TimeChangeSpec::IntegratedCir(IntegratedCirSpec::new(1.0, 1.0, 0.5, 1.0));
        let d = corr_driver_z(&c, 0.0).unwrap();
        assert_eq!(d.normalizer(2.0).unwrap(), 1.0);
        assert_eq!(d.pair(0.3, 1.2, 0.0, 1.0).multiplier(), 1.0);
        assert!(corr_driver_z(&TimeChangeSpec::PointMass { value: 1.0 }, -0.5).is_err());
    }

    #[test]
    fn cir_normalizer_is_the_martingale_constant() {
        let s = IntegratedCirSpec::new(1.0, 1.0, 0.5, 1.0);
        for &rho in &[-0.7, -0.3, 0.4] {
            let d = corr_driver_z(&TimeChangeSpec::IntegratedCir(s), rho).unwrap();
            let want = rho * (s.y0 + s.kappa * s.theta * 2.0);
            let got = d.ln_normalizer(2.0).unwrap();
            assert!((got - want).abs() < 1e-12, "{rho}: {got} {want}");
        }
    }

    #[test]
    fn cir_normalizer_matches_monte_carlo() {
        let s = IntegratedCirSpec::new(1.0, 1.0, 0.5, 1.0);
        let d = corr_driver_z(&TimeChangeSpec::IntegratedCir(s), -0.5).unwrap();
        let times: Vec<f64> = (0..=400).map(|i| i as f64 / 200.0).collect();
        let p = run_paths(40_000, 41, |rng, _| cir_path_weighted(&s, &times, |_| 1.0, false, rng)).unwrap();
        let x: Vec<f64> = p.iter().map(|q| (d.rho * d.value(q.terminal, q.integral, 0.0)).exp()).collect();
        let r = summarize(&x, 0, x.len());
        assert!(r.covers(d.normalizer(2.0).unwrap(), 3.0, 1e-4), "{r:?}");
    }

    #[test]
    fn stochastic_exponential_has_unit_mean() {
        // Euler on the CIR rate with full truncation, and the exponent
        // ρη∫√h dW − (ρ²η²/2)∫h accumulated on the same increments
        let s = IntegratedCirSpec::new(1.0, 1.0, 0.5, 1.0);
        let (rho, t, n) = (-0.5, 1.0, 1000);
        let dt = t / n as f64;
        let x = run_paths(20_000, 42, |rng, _| {
            let mut h: f64 = s.y0;
            let mut e = 0.0;
            for _ in 0..n {
                let dw = dt.sqrt() * rng.sample::<f64, _>(StandardNormal);
                let hp = h.max(0.0);
                e += rho * s.eta * hp.sqrt() * dw - 0.5 * rho * rho * s.eta * s.eta * hp * dt;
                h += s.kappa * (s.theta - hp) * dt + s.eta * hp.sqrt() * dw;
            }
            Ok(e.exp())
        })
        .unwrap();
        let r = summarize(&x, 0, x.len());
        assert!(r.covers(1.0, 3.0, 0.0), "{r:?}");
    }

    #[test]
    fn heston_normalizer_matches_monte_carlo() {
        let s = HestonCesvSpec { kappa: 2.0, theta: 0.04, eta: 0.3, v0: 0.04, alpha: 0.5, rate: 0.03 };
        let d = corr_driver_z(&TimeChangeSpec::HestonCesv(s), -0.7).unwrap();
        let times: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
        let v = s.variance();
        let p = run_paths(40_000, 43, |rng, _| cir_path_weighted(&v, &times, |u| s.rate_weight(u), false, rng)).unwrap();
        let w = s.rate_weight(1.0);
        let x: Vec<f64> = p.iter().map(|q| (d.rho * d.value(w * q.terminal, q.integral, 0.0)).exp()).collect();
        let r = summarize(&x, 0, x.len());
        assert!(r.covers(d.normalizer(1.0).unwrap(), 3.0, 1e-6), "{r:?}");
        assert!(corr_driver_z(&TimeChangeSpec::HestonCesv(s), 0.3).unwrap().normalizer(1.0).is_err());
    }
}
