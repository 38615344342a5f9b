//! Hull–White variance clock. With s = η²t/4 the clock is H_t = c·A_s for
//! the exponential functional A_s = ∫₀ˢ e^{2(B_v + νv)} dv, whose density
//! is Yor's formula
//!
//!   f(u) = e^{π²/(2s) − ν²s/2 − 1/(2u)} / (u²√(2π³s))
//!          · ∫ dx e^{(ν+1)x} e^{−e^{2x}/(2u)} ψ_{e^x/u}(s),
//!   ψ_r(s) = ∫₀^∞ e^{−y²/(2s)} e^{−r cosh y} sinh y sin(πy/s) dy.
//!
//! The inner integral is a small difference of large oscillating lobes
//! amplified by e^{π²/(2s)}, so accuracy degrades quickly as s shrinks.

use std::f64::consts::PI;

use super::HullWhiteSpec;
use crate::error::{domain, Error, Result};
use crate::quad::{integrate, integrate_with, QuadOptions};

/// Density value with the propagated quadrature error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityValue {
    pub value: f64,
    pub error: f64,
}

fn inner_psi(r: f64, s: f64) -> (f64, f64) {
    // e^{−y²/(2s)}·e^{−r(cosh y − 1)} < e^{−40} beyond y_max
    let y_gauss = (80.0 * s).sqrt();
    let y_cosh = if r > 0.0 { (1.0 + 40.0 / r).acosh() } else { f64::INFINITY };
    let y_max = y_gauss.min(y_cosh).max(1e-3);
    let n = (y_max / s).ceil().min(400.0) as usize;
    let breaks: Vec<f64> = (1..n).map(|k| k as f64 * y_max / n as f64).collect();
    // e^{−r} is factored out for range
    let f = |y: f64| (-y * y / (2.0 * s) - r * (y.cosh() - 1.0)).exp() * y.sinh() * (PI * y / s).sin();
    let q = integrate_with(f, 0.0, y_max, &breaks, QuadOptions::new(1e-15, 1e-11));
    (q.value, q.error)
}

/// Density of A_s at u > 0.
pub fn exponential_functional_density(nu: f64, s: f64, u: f64) -> Result<DensityValue> {
    if !(s > 0.0) || !(u > 0.0) {
        return domain(format!("exponential functional density needs s, u > 0, got s={s}, u={u}"));
    }
    if !(nu > -2.0) {
        return domain(format!("density quadrature supports ν > −2, got {nu}"));
    }
    let pre_ln = PI * PI / (2.0 * s) - 0.5 * nu * nu * s - 1.0 / (2.0 * u) - 2.0 * u.ln() - 0.5 * (2.0 * PI.powi(3) * s).ln();
    // integrand in x behaves like e^{(ν+2)x} on the left and dies like
    // exp(−e^{2x}/(2u)) on the right
    let x_hi = 0.5 * (2.0 * u * 60.0).ln();
    let x_lo = x_hi.min(u.ln()) - 40.0 / (nu + 2.0);
    let err = std::cell::Cell::new(0.0);
    let evals = std::cell::Cell::new(0usize);
    let f = |x: f64| {
        let v = x.exp();
        let r = v / u;
        let (p, e) = inner_psi(r, s);
        let w = ((nu + 1.0) * x - v * v / (2.0 * u) - r).exp();
        err.set(err.get() + (w * e).abs());
        evals.set(evals.get() + 1);
        w * p
    };
    let scale = pre_ln.exp();
    // absolute floor of 1e-12 in density units; past it only roundoff is
    // being refined, so the segment count is capped as well
    let floor = if scale > 0.0 { (1e-12 / scale).max(1e-300) } else { 1e-300 };
    let q = integrate(f, x_lo, x_hi, QuadOptions { max_segments: 200, ..QuadOptions::new(floor, 1e-9) });
    let value = scale * q.value;
    // inner errors enter through ∫|w|·err dx, estimated by the node average
    let inner = err.get() / evals.get().max(1) as f64 * (x_hi - x_lo);
    let error = scale * (q.error + inner);
    Ok(DensityValue { value: value.max(0.0), error })
}

/// Density of H_t at h, clamped at 0. Fails with a tolerance error when the
/// error estimate exceeds `tol` (absolute, in density units of H).
pub fn hull_white_clock_density(spec: &HullWhiteSpec, h: f64, t: f64, tol: f64) -> Result<f64> {
    spec.validate()?;
    let c = spec.scale();
    let s = spec.eta * spec.eta * t / 4.0;
    let d = exponential_functional_density(spec.nu(), s, h / c)?;
    let (v, e) = (d.value / c, d.error / c);
    if e > tol {
        return Err(Error::Tolerance {
            what: "Hull-White clock density",
            estimate: e,
            target: tol,
        });
    }
    Ok(v)
}
