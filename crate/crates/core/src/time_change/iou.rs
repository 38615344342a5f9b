//! Integrated OU clock H_t = ∫₀ᵗ h_s ds with dh = −λh dt + dz.
//!
//! For real a, b the joint characteristic function is
//!
//!   E[e^{iaH_t + ibz_t}] = exp(ia h0 (1 − e^{−λt})/λ) · exp(∫_b^{x_t} ψ(x)/(a + λb − λx) dx),
//!
//! with x_t = b + a(1 − e^{−λt})/λ and ψ the Lévy exponent of z₁. The
//! exponent integral has elementary antiderivatives for the three
//! subordinators; a direct quadrature is kept as an independent route.

use num_complex::Complex64;

use super::{IntegratedOuSpec, Subordinator};
use crate::error::{domain, Result};
use crate::quad::{integrate_with, QuadOptions};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Path samples used to follow the logarithm branch of the antiderivatives.
const BRANCH_STEPS: usize = 64;

/// ln E[e^{iwz₁}] for complex w in the strip where it is finite.
pub fn subordinator_exponent(sub: &Subordinator, w: Complex64) -> Complex64 {
    match *sub {
        Subordinator::ExpJumpPoisson { rate, mean } => I * w * rate * mean / (1.0 - I * w * mean),
        Subordinator::InverseGaussian { nu } => nu - (nu * nu - 2.0 * I * w).sqrt(),
        Subordinator::StationaryInverseGaussian { nu } => I * w / (nu * nu - 2.0 * I * w).sqrt(),
    }
}

/// ψ_z(x) for real x. The principal square root has nonnegative real part,
/// so |e^{ψ}| ≤ 1.
pub fn subordinator_log_cf(sub: &Subordinator, x: f64) -> Complex64 {
    subordinator_exponent(sub, Complex64::new(x, 0.0))
}

/// E[e^{ρz_t}] = e^{tψ(−iρ)}, the normalizer of the correlation driver.
pub fn subordinator_mgf(sub: &Subordinator, rho: f64, t: f64) -> Result<f64> {
    let e = subordinator_exponent(sub, Complex64::new(0.0, -rho));
    let ok = match *sub {
        Subordinator::ExpJumpPoisson { mean, .. } => rho * mean < 1.0,
        Subordinator::InverseGaussian { nu } | Subordinator::StationaryInverseGaussian { nu } => 2.0 * rho < nu * nu,
    };
    if !ok {
        return domain(format!("E[e^(rho z)] is infinite at rho = {rho}"));
    }
    Ok((t * e.re).exp())
}

fn path_end(spec: &IntegratedOuSpec, a: f64, b: f64, t: f64) -> f64 {
    b + a * spec.decay_integral(t)
}

/// Change of (s − β)/(s + β) logarithm along the path, summed from
/// principal logarithms of successive ratios.
fn log_ratio_increment(nu: f64, beta: Complex64, x0: f64, x1: f64) -> Complex64 {
    let q = |x: f64| {
        let s = (nu * nu - 2.0 * I * x).sqrt();
        (s - beta) / (s + beta)
    };
    let mut acc = Complex64::new(0.0, 0.0);
    let mut prev = q(x0);
    for k in 1..=BRANCH_STEPS {
        let x = x0 + (x1 - x0) * k as f64 / BRANCH_STEPS as f64;
        let cur = q(x);
        acc += (cur / prev).ln();
        prev = cur;
    }
    acc
}

/// ∫_b^{x_t} ψ(x)/(c − λx) dx, c = a + λb, from the antiderivatives.
pub fn iou_exponent_closed_form(spec: &IntegratedOuSpec, a: f64, b: f64, t: f64) -> Result<Complex64> {
    spec.validate()?;
    let lam = spec.lambda;
    let c = a + lam * b;
    let (x0, x1) = (b, path_end(spec, a, b, t));
    if a == 0.0 || t == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    // c − λx keeps the sign of a along the path
    let ln_lin = ((c - lam * x1) / (c - lam * x0)).ln();
    Ok(match spec.subordinator {
        Subordinator::ExpJumpPoisson { rate, mean } => {
            let p = I * mean;
            let ln_one = ((1.0 - p * x1) / (1.0 - p * x0)).ln();
            rate / (p * c - lam) * (-ln_one + p * c / lam * ln_lin)
        }
        Subordinator::InverseGaussian { nu } => {
            let s0 = (nu * nu - 2.0 * I * x0).sqrt();
            let s1 = (nu * nu - 2.0 * I * x1).sqrt();
            let beta = (nu * nu - 2.0 * I * c / lam).sqrt();
            let dl = log_ratio_increment(nu, beta, x0, x1);
            -nu / lam * ln_lin + 2.0 / lam * ((s1 - s0) + 0.5 * beta * dl)
        }
        Subordinator::StationaryInverseGaussian { nu } => {
            let s0 = (nu * nu - 2.0 * I * x0).sqrt();
            let s1 = (nu * nu - 2.0 * I * x1).sqrt();
            let b2 = nu * nu - 2.0 * I * c / lam;
            let beta = b2.sqrt();
            let dl = log_ratio_increment(nu, beta, x0, x1);
            ((s1 - s0) + (b2 - nu * nu) / (2.0 * beta) * dl) / lam
        }
    })
}

/// The same integral by adaptive quadrature. The denominator only vanishes
/// at the limit t → ∞, so a break point is placed near the far end where
/// the integrand steepens.
pub fn iou_exponent_quadrature(spec: &IntegratedOuSpec, a: f64, b: f64, t: f64) -> Result<Complex64> {
    spec.validate()?;
    let lam = spec.lambda;
    let c = a + lam * b;
    let (x0, x1) = (b, path_end(spec, a, b, t));
    if a == 0.0 || t == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let f = |x: f64| subordinator_log_cf(&spec.subordinator, x) / (c - lam * x);
    let (lo, hi, sign) = if x1 > x0 { (x0, x1, 1.0) } else { (x1, x0, -1.0) };
    let breaks: Vec<f64> = (1..8).map(|k| hi - (hi - lo) * 0.5f64.powi(k)).collect();
    let q = integrate_with(f, lo, hi, &breaks, QuadOptions::new(1e-15, 1e-13)).require("IOU exponent", 1e-12)?;
    Ok(sign * q)
}

fn phase(spec: &IntegratedOuSpec, a: f64, t: f64) -> Complex64 {
    I * a * spec.h0 * spec.decay_integral(t)
}

/// E[e^{iaH_t + ibz_t}].
pub fn iou_joint_cf(spec: &IntegratedOuSpec, a: f64, b: f64, t: f64) -> Result<Complex64> {
    if !(t >= 0.0) {
        return domain(format!("horizon must be nonnegative, got {t}"));
    }
    let drift = t * subordinator_log_cf(&spec.subordinator, b);
    // the b-part of the exponent has no path in x when a = 0
    let e = if a == 0.0 { drift } else { iou_exponent_closed_form(spec, a, b, t)? };
    Ok((phase(spec, a, t) + e).exp())
}

/// E[e^{iaH_t}].
pub fn iou_cf(spec: &IntegratedOuSpec, a: f64, t: f64) -> Result<Complex64> {
    iou_joint_cf(spec, a, 0.0, t)
}

/// iou_joint_cf through quadrature of the exponent.
pub fn iou_joint_cf_quadrature(spec: &IntegratedOuSpec, a: f64, b: f64, t: f64) -> Result<Complex64> {
    let drift = t * subordinator_log_cf(&spec.subordinator, b);
    let e = if a == 0.0 { drift } else { iou_exponent_quadrature(spec, a, b, t)? };
    Ok((phase(spec, a, t) + e).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{empirical_cf, simulate_iou, simulate_subordinator, PathConfig};

    fn subs() -> [Subordinator; 3] {
        [
            Subordinator::ExpJumpPoisson { rate: 2.0, mean: 0.5 },
            Subordinator::InverseGaussian { nu: 1.5 },
            Subordinator::StationaryInverseGaussian { nu: 1.5 },
        ]
    }

    fn spec(sub: Subordinator) -> IntegratedOuSpec {
        IntegratedOuSpec { lambda: 0.8, h0: 0.3, subordinator: sub }
    }

    #[test]
    fn exponent_basics() {
        for s in subs() {
            assert_eq!(subordinator_log_cf(&s, 0.0), Complex64::new(0.0, 0.0));
            let h = 1e-6;
            let d = (subordinator_log_cf(&s, h) - subordinator_log_cf(&s, -h)) / (2.0 * h);
            assert!((d - I * s.mean()).norm() < 1e-8, "{s:?}: {d}");
            for &x in &[-30.0, -1.0, 0.5, 8.0, 200.0] {
                assert!(subordinator_log_cf(&s, x).re <= 1e-15);
            }
        }
    }

    #[test]
    fn closed_form_matches_quadrature() {
        for s in subs() {
            let sp = spec(s);
            for &(a, b, t) in &[(1.0, 0.0, 1.5), (-2.5, 0.0, 3.0), (7.0, 0.4, 0.5), (0.3, -3.0, 10.0), (-4.0, 2.0, 2.0), (40.0, 0.0, 1.0)] {
                let x = iou_joint_cf(&sp, a, b, t).unwrap();
                let y = iou_joint_cf_quadrature(&sp, a, b, t).unwrap();
                assert!((x - y).norm() < 1e-10, "{s:?} ({a},{b},{t}): {x} {y}");
                assert!(x.norm() <= 1.0 + 1e-12);
            }
            assert_eq!(iou_joint_cf(&sp, 0.0, 0.0, 1.0).unwrap(), Complex64::new(1.0, 0.0));
            assert_eq!(iou_joint_cf(&sp, 1.3, 0.0, 1.0).unwrap(), iou_cf(&sp, 1.3, 1.0).unwrap());
        }
    }

    #[test]
    fn vanishing_jump_rate_is_a_pure_phase() {
        let sp = spec(Subordinator::ExpJumpPoisson { rate: 1e-12, mean: 1.0 });
        let v = iou_cf(&sp, 2.0, 1.0).unwrap();
        let want = (I * 2.0 * sp.h0 * sp.decay_integral(1.0)).exp();
        assert!((v - want).norm() < 1e-10);
    }

    #[test]
    fn empirical_characteristic_functions() {
        for s in subs() {
            let z = simulate_subordinator(&s, &PathConfig::new(1.0, 1, 40_000, 21)).unwrap();
            for &u in &[0.7, 2.0] {
                let e = empirical_cf(&z, u);
                let w = subordinator_log_cf(&s, u).exp();
                assert!(e.re.covers(w.re, 3.0, 0.0) && e.im.covers(w.im, 3.0, 0.0), "{s:?} {u}: {e:?} {w}");
            }
            let sp = spec(s);
            let v = simulate_iou(&sp, &PathConfig::new(1.5, 8, 20_000, 22)).unwrap();
            let h: Vec<f64> = v.iter().map(|q| q.integral).collect();
            let e = empirical_cf(&h, 1.2);
            let w = iou_cf(&sp, 1.2, 1.5).unwrap();
            assert!(e.re.covers(w.re, 3.0, 0.0) && e.im.covers(w.im, 3.0, 0.0), "{s:?}: {e:?} {w}");
        }
    }

    #[test]
    fn moment_generating_normalizer() {
        for s in subs() {
            let z = simulate_subordinator(&s, &PathConfig::new(2.0, 1, 40_000, 23)).unwrap();
            let rho = -0.5;
            let x: Vec<f64> = z.iter().map(|v| (rho * v).exp()).collect();
            let r = crate::mc::summarize(&x, 0, x.len());
            assert!(r.covers(subordinator_mgf(&s, rho, 2.0).unwrap(), 3.0, 0.0), "{s:?}: {r:?}");
            assert_eq!(subordinator_mgf(&s, 0.0, 2.0).unwrap(), 1.0);
        }
    }
}
