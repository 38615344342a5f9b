//! Numerical inversion of Laplace transforms and characteristic functions.
//!
//! Laplace transforms are inverted with the Euler-summed Bromwich series of
//! Abate and Whitt. Characteristic functions are inverted with the
//! Gil-Pelaez formulas on an adaptively growing frequency range.

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::quad::{integrate, QuadOptions};

/// Parameters of the Euler inversion: 2M+1 Bromwich terms and an optional
/// shift σ of the contour for transforms singular at the origin half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerInversion {
    pub m: usize,
    pub shift: f64,
}

impl Default for EulerInversion {
    fn default() -> Self {
        Self { m: 15, shift: 0.0 }
    }
}

impl EulerInversion {
    pub fn with_terms(m: usize) -> Self {
        Self { m, shift: 0.0 }
    }

    fn weights(&self) -> Vec<f64> {
        let m = self.m;
        let mut xi = vec![0.0; 2 * m + 1];
        xi[0] = 0.5;
        for x in xi.iter_mut().take(m + 1).skip(1) {
            *x = 1.0;
        }
        let two_m = 0.5f64.powi(m as i32);
        xi[2 * m] = two_m;
        let mut binom = 1.0;
        for k in 1..m {
            binom *= (m - k + 1) as f64 / k as f64;
            xi[2 * m - k] = xi[2 * m - k + 1] + two_m * binom;
        }
        xi.iter()
            .enumerate()
            .map(|(k, x)| if k % 2 == 0 { *x } else { -*x })
            .collect()
    }

    /// Evaluation abscissae β_k/t together with their weights, such that
    /// f(t) ≈ Σ w_k Re F(s_k).
    pub fn nodes(&self, t: f64) -> Vec<(Complex64, f64)> {
        let m = self.m as f64;
        let a = m * std::f64::consts::LN_10 / 3.0;
        let pre = 10f64.powf(m / 3.0) / t * (self.shift * t).exp();
        self.weights()
            .into_iter()
            .enumerate()
            .map(|(k, eta)| {
                let beta = Complex64::new(a, std::f64::consts::PI * k as f64);
                (beta / t + self.shift, pre * eta)
            })
            .collect()
    }
}

/// A Laplace transform s ↦ F(s), finite to the right of `abscissa`.
pub struct LaplaceTransform<F: Fn(Complex64) -> Complex64> {
    pub eval: F,
    pub abscissa: f64,
}

/// f(t) from its Laplace transform.
pub fn invert_laplace<F>(f: F, t: f64, params: &EulerInversion) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    if !(t > 0.0) || !t.is_finite() {
        return domain(format!("invert_laplace: t must be positive, got {t}"));
    }
    let mut acc = 0.0;
    for (s, w) in params.nodes(t) {
        let v = f(s);
        if !v.re.is_finite() {
            return Err(Error::Overflow(format!(
                "Laplace transform not finite at s = {s}"
            )));
        }
        acc += w * v.re;
    }
    Ok(acc)
}

/// Inversion with an error estimate from a second run with more terms.
/// Fails with a tolerance error when the two disagree by more than `tol`.
pub fn invert_laplace_checked<F>(f: F, t: f64, params: &EulerInversion, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(Complex64) -> Complex64,
{
    let v = invert_laplace(&f, t, params)?;
    let finer = EulerInversion {
        m: params.m + 4,
        ..*params
    };
    let w = invert_laplace(&f, t, &finer)?;
    let err = (v - w).abs();
    if err > tol {
        return Err(Error::Tolerance {
            what: "Laplace inversion",
            estimate: err,
            target: tol,
        });
    }
    Ok((v, err))
}

/// P(τ ≤ t) from the transform λ ↦ E[e^{−λτ}] of a nonnegative time.
pub fn cdf_from_laplace<F>(f: F, t: f64, params: &EulerInversion) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    let v = invert_laplace(|s| f(s) / s, t, params)?;
    Ok(v.clamp(0.0, 1.0))
}

/// Clamps to [0, 1] and sorts, which is the monotone rearrangement of a
/// CDF tabulated on an increasing grid.
pub fn monotone_rearrange(values: &mut [f64]) {
    for v in values.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
}

/// Tolerances of characteristic-function inversion.
#[derive(Debug, Clone, Copy)]
pub struct CfInversion {
    /// |φ(u)| below which the tail is considered negligible.
    pub cutoff: f64,
    /// Initial frequency range.
    pub u0: f64,
    /// Largest frequency range tried before the oscillation-averaged tail
    /// estimate is used.
    pub u_max: f64,
    pub abs_tol: f64,
}

impl Default for CfInversion {
    fn default() -> Self {
        Self {
            cutoff: 1e-12,
            u0: 4.0,
            u_max: 4096.0,
            abs_tol: 1e-12,
        }
    }
}

/// Result of a characteristic-function inversion.
#[derive(Debug, Clone, Copy)]
pub struct CfValue {
    pub value: f64,
    pub error: f64,
    /// Frequency at which the integration stopped.
    pub reach: f64,
}

fn cf_integral<G, P>(g: G, phi_abs: P, opts: &CfInversion) -> CfValue
where
    G: Fn(f64) -> f64,
    P: Fn(f64) -> f64,
{
    let q = QuadOptions {
        abs_tol: opts.abs_tol,
        rel_tol: 1e-12,
        max_segments: 4000,
    };
    let r = integrate(&g, 0.0, opts.u0, q);
    let mut total = r.value;
    let mut err = r.error;
    let mut lo = opts.u0;
    while lo < opts.u_max {
        if phi_abs(lo) < opts.cutoff {
            return CfValue {
                value: total,
                error: err,
                reach: lo,
            };
        }
        let hi = 2.0 * lo;
        if hi >= opts.u_max {
            // average the partial integrals across the last block, which
            // suppresses the oscillating remainder of non-decaying integrands
            let n = 64;
            let h = (hi - lo) / n as f64;
            let mut cum = total;
            let mut mean = 0.0;
            let mut spread: f64 = 0.0;
            for j in 0..n {
                let a = lo + j as f64 * h;
                let piece = integrate(&g, a, a + h, q);
                cum += piece.value;
                err += piece.error;
                mean += cum / n as f64;
                spread = spread.max((cum - total).abs());
            }
            return CfValue {
                value: mean,
                error: err + spread / n as f64 + phi_abs(hi) / hi,
                reach: hi,
            };
        }
        let r = integrate(&g, lo, hi, q);
        total += r.value;
        err += r.error;
        lo = hi;
    }
    CfValue {
        value: total,
        error: err,
        reach: lo,
    }
}

/// Density at x of the law with characteristic function φ, clamped at 0.
pub fn density_from_cf<F>(phi: F, x: f64, opts: &CfInversion) -> Result<CfValue>
where
    F: Fn(f64) -> Complex64,
{
    let g = |u: f64| (Complex64::new(0.0, -u * x).exp() * phi(u)).re;
    let v = cf_integral(g, |u| phi(u).norm(), opts);
    let value = (v.value / std::f64::consts::PI).max(0.0);
    Ok(CfValue {
        value,
        error: v.error / std::f64::consts::PI,
        reach: v.reach,
    })
}

/// Gil-Pelaez CDF P(X ≤ x) = ½ − (1/π) ∫₀^∞ Im(e^{−iux} φ(u))/u du.
pub fn cdf_from_cf<F>(phi: F, x: f64, opts: &CfInversion) -> Result<CfValue>
where
    F: Fn(f64) -> Complex64,
{
    let g = |u: f64| {
        if u == 0.0 {
            // limit: Im(φ'(0)) − x, by a central difference
            let h = 1e-6;
            let d = (phi(h) - phi(-h)) / (2.0 * h);
            return d.im - x;
        }
        (Complex64::new(0.0, -u * x).exp() * phi(u)).im / u
    };
    let v = cf_integral(g, |u| phi(u).norm() / u.max(1e-300), opts);
    let value = (0.5 - v.value / std::f64::consts::PI).clamp(0.0, 1.0);
    Ok(CfValue {
        value,
        error: v.error / std::f64::consts::PI,
        reach: v.reach,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euler_on_elementary_pairs() {
        let p = EulerInversion::default();
        let one = invert_laplace(|s| 1.0 / s, 3.0, &p).unwrap();
        assert!((one - 1.0).abs() < 1e-8);
        let e = invert_laplace(|s| 1.0 / (s + 0.7), 2.0, &p).unwrap();
        assert!((e - (-1.4f64).exp()).abs() < 1e-8);
        let ramp = invert_laplace(|s| 1.0 / (s * s), 1.5, &p).unwrap();
        assert!((ramp - 1.5).abs() < 1e-8);
    }

    #[test]
    fn weights_sum_structure() {
        // Σ η_k for the Euler weights equals ½ up to 2^{-M} corrections
        let w = EulerInversion::default().weights();
        assert_eq!(w.len(), 31);
        assert_eq!(w[0], 0.5);
        assert!(w[30] > 0.0 && w[30] < 1e-4);
    }

    #[test]
    fn cdf_of_point_mass_and_exponential() {
        let p = EulerInversion::default();
        let c = 1.0;
        let lo = cdf_from_laplace(|s| (-s * c).exp(), 0.5, &p).unwrap();
        let hi = cdf_from_laplace(|s| (-s * c).exp(), 2.0, &p).unwrap();
        assert!(lo < 1e-6 && hi > 1.0 - 1e-6, "{lo} {hi}");
        let e = cdf_from_laplace(|s| 1.0 / (1.0 + s), 1.0, &p).unwrap();
        assert!((e - (1.0 - (-1f64).exp())).abs() < 1e-8);
    }

    #[test]
    fn checked_inversion_reports_error() {
        let p = EulerInversion::default();
        let (v, err) = invert_laplace_checked(|s| 1.0 / (s + 1.0), 1.0, &p, 1e-6).unwrap();
        assert!((v - (-1f64).exp()).abs() < 1e-8 && err < 1e-8);
        assert!(invert_laplace(|s| 1.0 / s, 0.0, &p).is_err());
    }

    #[test]
    fn gil_pelaez_normal() {
        let o = CfInversion::default();
        let phi = |u: f64| Complex64::new((-0.5 * u * u).exp(), 0.0);
        let d = density_from_cf(phi, 0.0, &o).unwrap();
        assert!((d.value - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-10);
        let c = cdf_from_cf(phi, 0.0, &o).unwrap();
        assert!((c.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gil_pelaez_point_mass() {
        let o = CfInversion::default();
        let c = 2.0;
        let phi = |u: f64| Complex64::new(0.0, u * c).exp();
        let lo = cdf_from_cf(phi, c - 1.0, &o).unwrap().value;
        let hi = cdf_from_cf(phi, c + 1.0, &o).unwrap().value;
        assert!(lo < 1e-6, "{lo}");
        assert!(hi > 1.0 - 1e-6, "{hi}");
    }

    #[test]
    fn rearrangement_is_monotone() {
        let mut v = vec![0.1, 0.3, 0.29, 1.2, -0.1];
        monotone_rearrange(&mut v);
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(v[0], 0.0);
        assert_eq!(v[4], 1.0);
    }
}
