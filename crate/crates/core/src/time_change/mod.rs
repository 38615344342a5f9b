//! Laws of stochastic clocks H_t = ∫₀ᵗ h_s ds: Heston-type and Hull–White
//! variance clocks, integrated CIR, and integrated OU driven by a
//! subordinator, together with their joint laws with the correlation driver.

use serde::{Deserialize, Serialize};

use crate::bessel_cev::one_minus_exp_ratio;
use crate::error::{domain, Result};

pub mod cir;
pub mod corr;
pub mod heston;
pub mod hull_white;
pub mod iou;
pub mod laws;

pub use cir::{cir_marginal_laplace, integrated_cir_joint_laplace, integrated_cir_laplace, ln_integrated_cir_joint_laplace};
pub use iou::{
    iou_cf, iou_joint_cf, iou_joint_cf_quadrature, subordinator_exponent, subordinator_log_cf, subordinator_mgf,
};
pub use laws::{
    clock_cdf, clock_density, clock_density_value, clock_inversion, clock_ln_laplace, clock_support, clock_tail, has_laplace_inversion, LawValue,
};
pub use hull_white::{exponential_functional_density, hull_white_clock_density, DensityValue};
pub use corr::{corr_driver_z, CorrelationDriver, DriverKind};
pub use heston::{
    heston_cesv_joint_laplace, heston_cesv_laplace, ln_heston_cesv_joint_laplace, ln_heston_cesv_joint_laplace_riccati,
};

/// CIR rate dy = κ(θ − y)dt + η√y dW started at y0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratedCirSpec {
    pub kappa: f64,
    pub theta: f64,
    pub eta: f64,
    pub y0: f64,
}

impl IntegratedCirSpec {
    pub fn new(kappa: f64, theta: f64, eta: f64, y0: f64) -> Self {
        Self { kappa, theta, eta, y0 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("kappa", self.kappa), ("theta", self.theta), ("eta", self.eta), ("y0", self.y0)] {
            if !(v > 0.0) || !v.is_finite() {
                return domain(format!("CIR {name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    /// 2κθ/η² > 1, required by the correlated model.
    pub fn is_stable(&self) -> bool {
        2.0 * self.kappa * self.theta / (self.eta * self.eta) > 1.0
    }

    /// E[y_t].
    pub fn mean(&self, t: f64) -> f64 {
        self.theta + (self.y0 - self.theta) * (-self.kappa * t).exp()
    }

    /// E[∫₀ᵗ y ds].
    pub fn integral_mean(&self, t: f64) -> f64 {
        self.theta * t + (self.y0 - self.theta) * (-(-self.kappa * t).exp_m1()) / self.kappa
    }
}

/// CIR variance dσ² = κ(θ − σ²)dt + ησ dW with σ²₀ = v0, for a CEV
/// elasticity α and rate r. The clock is H_t = (1−α)² ∫ σ²_s e^{−2(1−α)rs} ds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonCesvSpec {
    pub kappa: f64,
    pub theta: f64,
    pub eta: f64,
    pub v0: f64,
    pub alpha: f64,
    pub rate: f64,
}

impl HestonCesvSpec {
    pub fn validate(&self) -> Result<()> {
        self.variance().validate()?;
        if !(self.alpha < 1.0) {
            return domain(format!("Heston clock needs alpha < 1, got {}", self.alpha));
        }
        if !self.rate.is_finite() {
            return domain("rate must be finite");
        }
        Ok(())
    }

    pub fn variance(&self) -> IntegratedCirSpec {
        IntegratedCirSpec::new(self.kappa, self.theta, self.eta, self.v0)
    }

    /// Weight w(s) with h_s = w(s) σ²_s.
    pub fn rate_weight(&self, s: f64) -> f64 {
        let a = 1.0 - self.alpha;
        a * a * (-2.0 * a * self.rate * s).exp()
    }

    /// Squared Bessel dimension 4κθ/η² of the variance after the space-time change.
    pub fn variance_dimension(&self) -> f64 {
        4.0 * self.kappa * self.theta / (self.eta * self.eta)
    }

    /// Stock Bessel dimension 2 − 1/(1−α).
    pub fn stock_dimension(&self) -> f64 {
        2.0 - 1.0 / (1.0 - self.alpha)
    }

    /// E[H_t].
    pub fn mean(&self, t: f64) -> f64 {
        let a = 1.0 - self.alpha;
        let c = 2.0 * a * self.rate;
        let k = self.kappa;
        let th = self.theta;
        // ∫ (θ + (v0−θ)e^{−κs}) e^{−cs} ds
        let e = |q: f64| if q.abs() < 1e-12 { t } else { -(-q * t).exp_m1() / q };
        a * a * (th * e(c) + (self.v0 - th) * e(c + k))
    }
}

/// Geometric variance dσ²/σ² = θ dt + η dW with σ²₀ = sigma0_sq.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullWhiteSpec {
    pub theta: f64,
    pub eta: f64,
    pub sigma0_sq: f64,
    pub alpha: f64,
    pub rate: f64,
}

impl HullWhiteSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !(self.sigma0_sq > 0.0) || !self.theta.is_finite() {
            return domain("Hull-White clock needs eta > 0, sigma0_sq > 0 and finite theta");
        }
        if !(self.alpha < 1.0) {
            return domain(format!("Hull-White clock needs alpha < 1, got {}", self.alpha));
        }
        Ok(())
    }

    /// Drift ν = (2/η²)(θ − η²/2 − 2(1−α)r) of the exponential functional.
    pub fn nu(&self) -> f64 {
        2.0 / (self.eta * self.eta) * (self.theta - 0.5 * self.eta * self.eta - 2.0 * (1.0 - self.alpha) * self.rate)
    }

    /// Scale c with H_t = c·A^ν_{η²t/4}.
    pub fn scale(&self) -> f64 {
        let a = 1.0 - self.alpha;
        4.0 * a * a * self.sigma0_sq / (self.eta * self.eta)
    }

    pub fn stock_dimension(&self) -> f64 {
        2.0 - 1.0 / (1.0 - self.alpha)
    }

    /// E[H_t] = c·(e^{(2ν+2)s} − 1)/(2ν+2) at s = η²t/4.
    pub fn mean(&self, t: f64) -> f64 {
        let s = self.eta * self.eta * t / 4.0;
        let q = 2.0 * self.nu() + 2.0;
        let m = if q.abs() < 1e-12 { s } else { (q * s).exp_m1() / q };
        self.scale() * m
    }
}

/// Lévy subordinators driving the integrated OU clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Subordinator {
    /// Poisson arrivals at `rate` of exponential jumps with mean `mean`.
    ExpJumpPoisson { rate: f64, mean: f64 },
    /// First passage of a Brownian motion with drift ν to 1.
    InverseGaussian { nu: f64 },
    StationaryInverseGaussian { nu: f64 },
}

impl Subordinator {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Subordinator::ExpJumpPoisson { rate, mean } => rate > 0.0 && mean > 0.0,
            Subordinator::InverseGaussian { nu } | Subordinator::StationaryInverseGaussian { nu } => nu > 0.0,
        };
        if !ok {
            return domain(format!("subordinator parameters must be positive: {self:?}"));
        }
        Ok(())
    }

    /// E[z_1].
    pub fn mean(&self) -> f64 {
        match *self {
            Subordinator::ExpJumpPoisson { rate, mean } => rate * mean,
            Subordinator::InverseGaussian { nu } => 1.0 / nu,
            Subordinator::StationaryInverseGaussian { nu } => 1.0 / nu,
        }
    }
}

/// dh = −λh dt + dz with h₀ = h0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratedOuSpec {
    pub lambda: f64,
    pub h0: f64,
    pub subordinator: Subordinator,
}

impl IntegratedOuSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !(self.h0 >= 0.0) {
            return domain("integrated OU needs lambda > 0 and h0 ≥ 0");
        }
        self.subordinator.validate()
    }

    /// (1 − e^{−λt})/λ.
    pub fn decay_integral(&self, t: f64) -> f64 {
        -(-self.lambda * t).exp_m1() / self.lambda
    }

    /// E[H_t].
    pub fn mean(&self, t: f64) -> f64 {
        let m = self.subordinator.mean();
        let d = self.decay_integral(t);
        self.h0 * d + m * (t - d) / self.lambda
    }
}

/// The stochastic clocks, plus a deterministic one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TimeChangeSpec {
    /// H_T equal to `value` almost surely at the pricing horizon; the clock
    /// is linear in time.
    PointMass { value: f64 },
    /// H_t = speed·(1 − e^{−decay·t})/decay, the clock of a CEV stock.
    Deterministic { speed: f64, decay: f64 },
    HestonCesv(HestonCesvSpec),
    HullWhite(HullWhiteSpec),
    IntegratedCir(IntegratedCirSpec),
    IntegratedOu(IntegratedOuSpec),
}

impl TimeChangeSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            TimeChangeSpec::PointMass { value } => {
                if !(*value >= 0.0) || !value.is_finite() {
                    return domain(format!("point-mass clock must be nonnegative, got {value}"));
                }
                Ok(())
            }
            TimeChangeSpec::Deterministic { speed, decay } => {
                if !(*speed > 0.0) || !speed.is_finite() || !decay.is_finite() {
                    return domain(format!("deterministic clock needs a positive speed, got {speed}"));
                }
                Ok(())
            }
            TimeChangeSpec::HestonCesv(s) => s.validate(),
            TimeChangeSpec::HullWhite(s) => s.validate(),
            TimeChangeSpec::IntegratedCir(s) => s.validate(),
            TimeChangeSpec::IntegratedOu(s) => s.validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TimeChangeSpec::PointMass { .. } => "point-mass",
            TimeChangeSpec::Deterministic { .. } => "deterministic",
            TimeChangeSpec::HestonCesv(_) => "heston-cesv",
            TimeChangeSpec::HullWhite(_) => "hull-white",
            TimeChangeSpec::IntegratedCir(_) => "integrated-cir",
            TimeChangeSpec::IntegratedOu(_) => "integrated-ou",
        }
    }

    /// The deterministic clock of a CEV stock.
    pub fn of_cev(m: &crate::bessel_cev::BesselClockMap) -> Self {
        TimeChangeSpec::Deterministic { speed: m.clock_speed, decay: m.clock_decay }
    }

    /// H_t for the clocks that are deterministic.
    pub fn deterministic_value(&self, t: f64) -> Option<f64> {
        match *self {
            TimeChangeSpec::PointMass { value } => Some(value),
            TimeChangeSpec::Deterministic { speed, decay } => Some(speed * t * one_minus_exp_ratio(decay * t)),
            _ => None,
        }
    }

    /// E[H_t].
    pub fn mean(&self, t: f64) -> f64 {
        match self {
            TimeChangeSpec::PointMass { .. } | TimeChangeSpec::Deterministic { .. } => self.deterministic_value(t).unwrap(),
            TimeChangeSpec::HestonCesv(s) => s.mean(t),
            TimeChangeSpec::HullWhite(s) => s.mean(t),
            TimeChangeSpec::IntegratedCir(s) => s.integral_mean(t),
            TimeChangeSpec::IntegratedOu(s) => s.mean(t),
        }
    }
}
