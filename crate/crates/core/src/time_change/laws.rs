//! Clock transforms at complex arguments and the law of H_t recovered from
//! them: density, distribution function and tail by Euler inversion.
//!
//! The integrated CIR transform is closed form. For the Heston clock the
//! Bessel representation is real-only, so complex arguments go through the
//! Riccati system with the rate weight frozen on short steps.

use num_complex::Complex64;

use super::{exponential_functional_density, iou_cf, HestonCesvSpec, IntegratedCirSpec, TimeChangeSpec};
use crate::error::{domain, Error, Result};
use crate::transform::{cdf_from_cf, density_from_cf, invert_laplace, CfInversion, EulerInversion};

/// E[e^{−sH_t}] of the integrated CIR clock for Re s > −κ²/(2η²).
///
/// Written with G = (g−κ)/(g+κ), |Ge^{−gt}| < 1 keeps every logarithm on
/// its principal branch.
pub fn ln_integrated_cir_laplace_complex(spec: &IntegratedCirSpec, s: Complex64, t: f64) -> Result<Complex64> {
    spec.validate()?;
    if !(t >= 0.0) {
        return domain(format!("horizon must be nonnegative, got {t}"));
    }
    let (k, th, e2) = (spec.kappa, spec.theta, spec.eta * spec.eta);
    let g = (k * k + 2.0 * e2 * s).sqrt();
    if !(g.re > 0.0) {
        return domain(format!("integrated CIR transform diverges at s = {s}"));
    }
    let e = (-g * t).exp();
    let big_g = (g - k) / (g + k);
    let den = (g + k) * (1.0 + big_g * e);
    let b = 2.0 * s * (1.0 - e) / den;
    let ln_base = ((g + k) / (2.0 * g)).ln() + (1.0 + big_g * e).ln();
    Ok(-2.0 * k * th * s * t / (g + k) - 2.0 * k * th / e2 * ln_base - spec.y0 * b)
}

/// One step of length h of dB/dτ = λ − κB − η²B²/2, dA/dτ = κθB from
/// (A, B), solved exactly for a frozen λ. This is the integrated CIR
/// transform with terminal weight B.
fn frozen_step(k: f64, th: f64, e2: f64, lam: Complex64, a: Complex64, b: Complex64, h: f64) -> (Complex64, Complex64) {
    let g = (k * k + 2.0 * e2 * lam).sqrt();
    let e = (-g * h).exp();
    let one_m = 1.0 - e;
    let km = k + b * e2;
    let den = g * (1.0 + e) + km * one_m;
    let nb = (b * (g * (1.0 + e) - k * one_m) + 2.0 * lam * one_m) / den;
    let gk = 2.0 * lam / (g + k) - b;
    let na = a + 2.0 * k * th * lam * h / (g + k) + 2.0 * k * th / e2 * (1.0 - gk * e2 * one_m / (2.0 * g)).ln();
    (na, nb)
}

/// ln E[e^{−sH_t}] of the Heston clock from `steps` exact steps with the
/// rate weight frozen at each midpoint.
fn heston_frozen(spec: &HestonCesvSpec, s: Complex64, t: f64, steps: usize) -> Complex64 {
    let (k, th, e2) = (spec.kappa, spec.theta, spec.eta * spec.eta);
    let h = t / steps as f64;
    let mut a = Complex64::new(0.0, 0.0);
    let mut b = Complex64::new(0.0, 0.0);
    for i in 0..steps {
        // τ runs backwards from t, so the i-th step covers calendar time
        // [t − (i+1)h, t − ih]
        let u = t - (i as f64 + 0.5) * h;
        (a, b) = frozen_step(k, th, e2, s * spec.rate_weight(u), a, b, h);
    }
    -a - b * spec.v0
}

/// Frozen steps per unit of 2(1−α)|r|t, the total relative change of the
/// rate weight.
const FROZEN_STEPS_PER_DECAY: f64 = 600.0;

/// ln E[e^{−sH_t}] of the Heston clock for Re s ≥ 0.
///
/// The scheme is symmetric and second order in the step, so three step
/// counts are combined by Romberg extrapolation. A constant weight (r = 0) is solved exactly.
pub fn ln_heston_cesv_laplace_complex(spec: &HestonCesvSpec, s: Complex64, t: f64) -> Result<Complex64> {
    spec.validate()?;
    if !(t >= 0.0) || !(s.re >= 0.0) {
        return domain(format!("Heston clock transform needs t ≥ 0 and Re s ≥ 0, got t={t}, s={s}"));
    }
    if t == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let decay = 2.0 * (1.0 - spec.alpha) * spec.rate.abs() * t;
    if decay == 0.0 {
        return Ok(heston_frozen(spec, s, t, 1));
    }
    let steps = ((decay * FROZEN_STEPS_PER_DECAY).ceil() as usize).clamp(4, 20_000);
    let a = heston_frozen(spec, s, t, steps);
    let b = heston_frozen(spec, s, t, 2 * steps);
    let c = heston_frozen(spec, s, t, 4 * steps);
    let ab = b + (b - a) / 3.0;
    let bc = c + (c - b) / 3.0;
    Ok(bc + (bc - ab) / 15.0)
}

/// ln E[e^{−sH_t}] for the clocks with a complex Laplace transform.
pub fn clock_ln_laplace(clock: &TimeChangeSpec, s: Complex64, t: f64) -> Result<Complex64> {
    match clock {
        TimeChangeSpec::PointMass { .. } | TimeChangeSpec::Deterministic { .. } => Ok(-s * clock.deterministic_value(t).unwrap()),
        TimeChangeSpec::IntegratedCir(c) => ln_integrated_cir_laplace_complex(c, s, t),
        TimeChangeSpec::HestonCesv(c) => ln_heston_cesv_laplace_complex(c, s, t),
        TimeChangeSpec::HullWhite(_) | TimeChangeSpec::IntegratedOu(_) => {
            domain(format!("no Laplace transform at complex arguments for the {} clock", clock.name()))
        }
    }
}

/// Whether the law of H_t is recovered by Laplace inversion.
pub fn has_laplace_inversion(clock: &TimeChangeSpec) -> bool {
    matches!(clock, TimeChangeSpec::IntegratedCir(_) | TimeChangeSpec::HestonCesv(_))
}

/// Euler terms for clock laws. Fewer terms leave a discretization error
/// near 1e-7 in the density mass.
pub const CLOCK_INVERSION_TERMS: usize = 18;

pub fn clock_inversion() -> EulerInversion {
    EulerInversion::with_terms(CLOCK_INVERSION_TERMS)
}

/// A law value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LawValue {
    pub value: f64,
    pub error: f64,
}

fn inverted<F: Fn(Complex64) -> Complex64>(f: F, x: f64, inv: &EulerInversion) -> Result<LawValue> {
    let a = invert_laplace(&f, x, inv)?;
    let finer = EulerInversion { m: inv.m + 4, ..*inv };
    let b = invert_laplace(&f, x, &finer)?;
    Ok(LawValue { value: b, error: (a - b).abs() })
}

fn expm1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-3 {
        z * (1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0)))
    } else {
        z.exp() - 1.0
    }
}

fn continuous_only(clock: &TimeChangeSpec) -> Result<()> {
    if clock.deterministic_value(0.0).is_some() {
        return domain(format!("the {} clock has no density", clock.name()));
    }
    Ok(())
}

/// Density of H_t at x > 0.
pub fn clock_density(clock: &TimeChangeSpec, x: f64, t: f64, inv: &EulerInversion) -> Result<LawValue> {
    continuous_only(clock)?;
    if !(x > 0.0) || !(t > 0.0) {
        return domain(format!("clock density needs x, t > 0, got x={x}, t={t}"));
    }
    match clock {
        TimeChangeSpec::HullWhite(h) => {
            h.validate()?;
            let c = h.scale();
            let d = exponential_functional_density(h.nu(), h.eta * h.eta * t / 4.0, x / c)?;
            Ok(LawValue { value: d.value / c, error: d.error / c })
        }
        TimeChangeSpec::IntegratedOu(o) => {
            let v = density_from_cf(|u| iou_cf(o, u, t).unwrap_or(Complex64::new(f64::NAN, 0.0)), x, &CfInversion::default())?;
            Ok(LawValue { value: v.value, error: v.error })
        }
        _ => {
            let v = inverted(|s| clock_ln_laplace(clock, s, t).map(|l| l.exp()).unwrap_or(Complex64::new(f64::NAN, 0.0)), x, inv)?;
            Ok(LawValue { value: v.value.max(0.0), ..v })
        }
    }
}

/// Density of a Laplace-inverted clock from a single inversion with the
/// terms of `inv`, without an error estimate.
pub fn clock_density_value(clock: &TimeChangeSpec, x: f64, t: f64, inv: &EulerInversion) -> Result<f64> {
    if !has_laplace_inversion(clock) {
        return Ok(clock_density(clock, x, t, inv)?.value);
    }
    if !(x > 0.0) || !(t > 0.0) {
        return domain(format!("clock density needs x, t > 0, got x={x}, t={t}"));
    }
    let v = invert_laplace(|s| clock_ln_laplace(clock, s, t).map(|l| l.exp()).unwrap_or(Complex64::new(f64::NAN, 0.0)), x, inv)?;
    Ok(v.max(0.0))
}

/// P(H_t ≤ x).
pub fn clock_cdf(clock: &TimeChangeSpec, x: f64, t: f64, inv: &EulerInversion) -> Result<LawValue> {
    if let Some(v) = clock.deterministic_value(t) {
        return Ok(LawValue { value: if x >= v { 1.0 } else { 0.0 }, error: 0.0 });
    }
    if !(x > 0.0) {
        return Ok(LawValue { value: 0.0, error: 0.0 });
    }
    match clock {
        TimeChangeSpec::IntegratedOu(o) => {
            let v = cdf_from_cf(|u| iou_cf(o, u, t).unwrap_or(Complex64::new(f64::NAN, 0.0)), x, &CfInversion::default())?;
            Ok(LawValue { value: v.value, error: v.error })
        }
        TimeChangeSpec::HullWhite(_) => domain("the Hull-White clock distribution function is not implemented; integrate the density"),
        _ => {
            let v = inverted(
                |s| clock_ln_laplace(clock, s, t).map(|l| l.exp() / s).unwrap_or(Complex64::new(f64::NAN, 0.0)),
                x,
                inv,
            )?;
            Ok(LawValue { value: v.value.clamp(0.0, 1.0), ..v })
        }
    }
}

/// P(H_t > x), inverted directly from (1 − E[e^{−sH}])/s so that small
/// tails keep their absolute accuracy.
pub fn clock_tail(clock: &TimeChangeSpec, x: f64, t: f64, inv: &EulerInversion) -> Result<LawValue> {
    if !has_laplace_inversion(clock) {
        let c = clock_cdf(clock, x, t, inv)?;
        return Ok(LawValue { value: 1.0 - c.value, error: c.error });
    }
    if !(x > 0.0) {
        return Ok(LawValue { value: 1.0, error: 0.0 });
    }
    let v = inverted(
        |s| clock_ln_laplace(clock, s, t).map(|l| -expm1(l) / s).unwrap_or(Complex64::new(f64::NAN, 0.0)),
        x,
        inv,
    )?;
    Ok(LawValue { value: v.value.clamp(0.0, 1.0), ..v })
}

/// [lo, hi] carrying all but `tail` of the law of H_t on each side, found
/// by widening around the mean.
pub fn clock_support(clock: &TimeChangeSpec, t: f64, tail: f64, inv: &EulerInversion) -> Result<(f64, f64)> {
    if !has_laplace_inversion(clock) {
        return domain(format!("support search needs a Laplace transform, not the {} clock", clock.name()));
    }
    let m = clock.mean(t);
    if !(m > 0.0) {
        return Err(Error::Degenerate(format!("clock mean {m} is not positive")));
    }
    let mut hi = 2.0 * m;
    let mut k = 0;
    while clock_tail(clock, hi, t, inv)?.value > tail {
        hi = m + 2.0 * (hi - m);
        k += 1;
        if k > 60 {
            return Err(Error::Convergence { what: "clock support (upper)", iterations: k });
        }
    }
    let mut lo = 0.5 * m;
    k = 0;
    while lo > 1e-300 && clock_cdf(clock, lo, t, inv)?.value > tail {
        lo *= 0.5;
        k += 1;
        if k > 60 {
            lo = 0.0;
            break;
        }
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::gauss_legendre_on;
    use crate::time_change::{heston_cesv_laplace, integrated_cir_laplace};

    fn heston() -> HestonCesvSpec {
        HestonCesvSpec { kappa: 2.0, theta: 0.04, eta: 0.3, v0: 0.04, alpha: 0.5, rate: 0.03 }
    }

    #[test]
    fn complex_transforms_extend_the_real_ones() {
        let c = IntegratedCirSpec::new(1.0, 1.0, 0.5, 1.0);
        let h = heston();
        for &l in &[0.0, 0.7, 5.0, 300.0] {
            let a = ln_integrated_cir_laplace_complex(&c, Complex64::new(l, 0.0), 2.0).unwrap();
            assert!((a.exp().re - integrated_cir_laplace(&c, l, 2.0).unwrap()).abs() < 1e-14);
            assert!(a.im.abs() < 1e-15);
            let b = ln_heston_cesv_laplace_complex(&h, Complex64::new(l, 0.0), 1.0).unwrap();
            let want = heston_cesv_laplace(&h, l, 1.0).unwrap().ln();
            assert!((b.re - want).abs() < 1e-10 * (1.0 + want.abs()), "{l}: {b} {want}");
        }
        // conjugate symmetry and |E e^{−sH}| ≤ E e^{−Re s H}
        let s = Complex64::new(2.0, 30.0);
        let a = ln_integrated_cir_laplace_complex(&c, s, 2.0).unwrap();
        let b = ln_integrated_cir_laplace_complex(&c, s.conj(), 2.0).unwrap();
        assert!((a - b.conj()).norm() < 1e-13);
        assert!(a.re <= integrated_cir_laplace(&c, 2.0, 2.0).unwrap().ln() + 1e-13);
    }

    #[test]
    fn cir_riccati_matches_the_closed_form_at_complex_points() {
        // α = 0, r = 0 makes the Heston clock an integrated CIR clock
        let h = HestonCesvSpec { alpha: 0.0, rate: 0.0, ..heston() };
        let c = h.variance();
        for &s in &[Complex64::new(1.0, 4.0), Complex64::new(20.0, -300.0), Complex64::new(0.1, 2000.0)] {
            let a = ln_heston_cesv_laplace_complex(&h, s, 1.0).unwrap();
            let b = ln_integrated_cir_laplace_complex(&c, s, 1.0).unwrap();
            assert!((a - b).norm() < 1e-11 * (1.0 + b.norm()), "{s}: {a} {b}");
        }
    }

    #[test]
    fn inverted_laws_are_coherent() {
        let inv = clock_inversion();
        let clocks = [
            TimeChangeSpec::IntegratedCir(IntegratedCirSpec::new(1.0, 1.0, 0.5, 1.0)),
            TimeChangeSpec::HestonCesv(heston()),
        ];
        for c in clocks {
            let t = 1.0;
            let (lo, hi) = clock_support(&c, t, 1e-10, &inv).unwrap();
            let (x, w) = gauss_legendre_on(257, lo, hi);
            let d: Vec<f64> = x.iter().map(|&x| clock_density(&c, x, t, &inv).unwrap().value).collect();
            let mass: f64 = d.iter().zip(&w).map(|(a, b)| a * b).sum();
            let mean: f64 = d.iter().zip(&w).zip(&x).map(|((a, b), x)| a * b * x).sum();
            assert!((mass - 1.0).abs() < 1e-9, "{}: {mass}", c.name());
            assert!((mean - c.mean(t)).abs() < 1e-8 * c.mean(t), "{}: {mean}", c.name());
            let m = c.mean(t);
            let f = clock_cdf(&c, m, t, &inv).unwrap().value;
            let g = clock_tail(&c, m, t, &inv).unwrap().value;
            assert!((f + g - 1.0).abs() < 1e-9);
        }
    }
}
