//! Heston-type variance clock H_t = (1−α)² ∫₀ᵗ σ²_s e^{−2(1−α)rs} ds.
//!
//! Writing σ²_t = e^{−κt} X(l(t)) with X a squared Bessel process of
//! dimension δ = 4κθ/η² and l(t) = η²(e^{κt} − 1)/(4κ), the clock becomes
//! ∫₀^{l(t)} f(u) X_u du with f(u) = (a/2)(bu + 1)^n, where
//! a = 8((1−α)/η)², b = 4κ/η², n = −2((1−α)r/κ + 1). The Pitman–Yor
//! formula then needs the solutions of φ″ = 2λfφ, which are
//! √w Z_ν(c w^{q/2}) with w = bu + 1, q = n + 2, ν = 1/|q|,
//! c = 2√(λa)/(b|q|) and Z ∈ {I, K}. For q = 0 they are powers of w.

use super::HestonCesvSpec;
use crate::error::{domain, Error, Result};
use crate::specfun::bessel_ik;

const Q_FLAT: f64 = 1e-8;

/// Log value and log-derivative (in u) of one basis solution at w.
#[derive(Debug, Clone, Copy)]
struct Branch {
    ln: f64,
    d: f64,
}

struct Basis {
    b: f64,
    q: f64,
    lambda_a: f64,
}

impl Basis {
    fn new(spec: &HestonCesvSpec, lambda: f64) -> Self {
        let a1 = 1.0 - spec.alpha;
        let e2 = spec.eta * spec.eta;
        let a = 8.0 * a1 * a1 / e2;
        let b = 4.0 * spec.kappa / e2;
        let n = -2.0 * (a1 * spec.rate / spec.kappa + 1.0);
        // for |q| below the threshold the Bessel order 1/|q| is so large that
        // cancellation between the log terms costs more than dropping q
        let q = n + 2.0;
        Self {
            b,
            q: if q.abs() < Q_FLAT { 0.0 } else { q },
            lambda_a: lambda * a,
        }
    }

    /// Wronskian y₁y₂′ − y₂y₁′, constant in u.
    fn wronskian(&self) -> f64 {
        if self.q == 0.0 {
            self.b * 2.0 * (0.25 + self.lambda_a / (self.b * self.b)).sqrt()
        } else {
            0.5 * self.b * self.q.abs()
        }
    }

    /// (decreasing solution y₁, increasing solution y₂) at w.
    fn eval(&self, w: f64) -> Result<(Branch, Branch)> {
        let (b, q) = (self.b, self.q);
        if q == 0.0 {
            let r = (0.25 + self.lambda_a / (b * b)).sqrt();
            let (s1, s2) = (0.5 - r, 0.5 + r);
            return Ok((
                Branch { ln: s1 * w.ln(), d: s1 * b / w },
                Branch { ln: s2 * w.ln(), d: s2 * b / w },
            ));
        }
        let nu = 1.0 / q.abs();
        let z = 2.0 * self.lambda_a.sqrt() / (b * q.abs()) * w.powf(0.5 * q);
        if !z.is_finite() || z > 1e300 {
            return Err(Error::Overflow(format!("Bessel argument {z} beyond the scaled range")));
        }
        let ik = bessel_ik(nu, z)?;
        let half = 0.5 * w.ln();
        let scale = b / (2.0 * w);
        let ib = Branch {
            ln: half + ik.ln_i,
            d: scale * (1.0 + q * z * ik.di),
        };
        let kb = Branch {
            ln: half + ik.ln_k,
            d: scale * (1.0 + q * z * ik.dk),
        };
        // with q < 0 the argument falls as w grows, so I is the bounded one
        Ok(if q < 0.0 { (ib, kb) } else { (kb, ib) })
    }
}

/// l(t) = η²(e^{κt} − 1)/(4κ).
pub fn bessel_time(spec: &HestonCesvSpec, t: f64) -> f64 {
    spec.eta * spec.eta * (spec.kappa * t).exp_m1() / (4.0 * spec.kappa)
}

/// ln E[exp(−λH_t − μh_t)] with h_t = (1−α)²σ²_t e^{−2(1−α)rt}.
///
/// The terminal term is μh_t = g X(l) with g = μ(1−α)² w_l^{n+1}. The
/// Pitman–Yor formula gives
/// (ψ′(l) + 2gψ(l))^{−δ/2} exp((x/2)(φ′(0) − (φ′(l) + 2gφ(l))/(ψ′(l) + 2gψ(l))))
/// where φ is the decreasing solution with φ(0) = 1 and ψ the one with
/// ψ(0) = 0, ψ′(0) = 1. Both are assembled from the log-form basis so
/// that the exponentially large and small parts never meet in linear form.
pub fn ln_heston_cesv_joint_laplace(spec: &HestonCesvSpec, lambda: f64, mu: f64, t: f64) -> Result<f64> {
    spec.validate()?;
    if !(lambda >= 0.0) || !(mu >= 0.0) {
        return domain(format!("Heston clock transform needs λ, μ ≥ 0, got ({lambda}, {mu})"));
    }
    if !(t >= 0.0) {
        return domain(format!("horizon must be nonnegative, got {t}"));
    }
    let a1 = 1.0 - spec.alpha;
    let x = spec.v0;
    let delta = spec.variance_dimension();
    let l = bessel_time(spec, t);
    let basis = Basis::new(spec, lambda);
    let wl = basis.b * l + 1.0;
    let g = mu * a1 * a1 * wl.powf(basis.q - 1.0);
    if t == 0.0 {
        return Ok(-mu * a1 * a1 * x);
    }
    if lambda == 0.0 {
        // φ ≡ 1 and ψ(u) = u
        let q = 1.0 + 2.0 * g * l;
        return Ok(-0.5 * delta * q.ln() - g * x / q);
    }
    let (y1_0, y2_0) = basis.eval(1.0)?;
    let (y1_l, y2_l) = basis.eval(wl)?;
    let w0 = basis.wronskian();
    let t1 = y1_0.ln + y2_l.ln;
    let t2 = y2_0.ln + y1_l.ln;
    let ratio = (t2 - t1).exp();
    // (ψ′(l) + 2gψ(l)) e^{−t1} W0
    let bracket = (y2_l.d + 2.0 * g) - ratio * (y1_l.d + 2.0 * g);
    if !(bracket > 0.0) {
        return Err(Error::Degenerate(format!("Sturm-Liouville bracket {bracket} is not positive")));
    }
    let ln_den = t1 + bracket.ln() - w0.ln();
    // (φ′(l) + 2gφ(l)) / (ψ′(l) + 2gψ(l))
    let tail = w0 * (y1_l.ln - 2.0 * y1_0.ln - y2_l.ln).exp() * (y1_l.d + 2.0 * g) / bracket;
    Ok(-0.5 * delta * ln_den + 0.5 * x * (y1_0.d - tail))
}

pub fn heston_cesv_joint_laplace(spec: &HestonCesvSpec, lambda: f64, mu: f64, t: f64) -> Result<f64> {
    Ok(ln_heston_cesv_joint_laplace(spec, lambda, mu, t)?.exp())
}

/// E[e^{−λH_t}].
pub fn heston_cesv_laplace(spec: &HestonCesvSpec, lambda: f64, t: f64) -> Result<f64> {
    heston_cesv_joint_laplace(spec, lambda, 0.0, t)
}

/// The same transform from the affine Riccati system in calendar time,
/// integrated backwards from t with classical Runge–Kutta:
/// B′ = κB + η²B²/2 − λw(s), A′ = −κθB, B(t) = μw(t), A(t) = 0, where
/// w(s) = (1−α)²e^{−2(1−α)rs}. Returns ln E = −A(0) − B(0)v0.
pub fn ln_heston_cesv_joint_laplace_riccati(
    spec: &HestonCesvSpec,
    lambda: f64,
    mu: f64,
    t: f64,
    steps: usize,
) -> Result<f64> {
    spec.validate()?;
    if steps == 0 || !(t > 0.0) {
        return domain("Riccati solve needs t > 0 and at least one step");
    }
    let (k, th, e2) = (spec.kappa, spec.theta, spec.eta * spec.eta);
    let rhs = |s: f64, b: f64| -> (f64, f64) { (k * b + 0.5 * e2 * b * b - lambda * spec.rate_weight(s), -k * th * b) };
    let h = t / steps as f64;
    let mut b = mu * spec.rate_weight(t);
    let mut a = 0.0;
    for i in 0..steps {
        let s = t - i as f64 * h;
        // step from s to s − h
        let (k1b, k1a) = rhs(s, b);
        let (k2b, k2a) = rhs(s - 0.5 * h, b - 0.5 * h * k1b);
        let (k3b, k3a) = rhs(s - 0.5 * h, b - 0.5 * h * k2b);
        let (k4b, k4a) = rhs(s - h, b - h * k3b);
        b -= h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
        a -= h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
    }
    Ok(-a - b * spec.v0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::cir::cir_path_weighted;
    use crate::mc::{run_paths, summarize, PathConfig};

    pub(crate) fn reference() -> HestonCesvSpec {
        HestonCesvSpec {
            kappa: 2.0,
            theta: 0.04,
            eta: 0.3,
            v0: 0.04,
            alpha: 0.5,
            rate: 0.03,
        }
    }

    #[test]
    fn agrees_with_riccati_oracle() {
        let s = reference();
        for &(lam, mu, t) in &[(1.0, 0.0, 1.0), (5.0, 0.0, 2.0), (40.0, 3.0, 1.0), (0.3, 10.0, 0.5)] {
            let a = ln_heston_cesv_joint_laplace(&s, lam, mu, t).unwrap();
            let b = ln_heston_cesv_joint_laplace_riccati(&s, lam, mu, t, 4000).unwrap();
            assert!((a.exp() - b.exp()).abs() < 1e-10, "({lam},{mu},{t}): {a} {b}");
        }
        for &r in &[0.0, -0.02, 1e-9, 1e-6] {
            let s = HestonCesvSpec { rate: r, ..reference() };
            let a = ln_heston_cesv_joint_laplace(&s, 2.0, 1.0, 1.5).unwrap();
            let b = ln_heston_cesv_joint_laplace_riccati(&s, 2.0, 1.0, 1.5, 4000).unwrap();
            // digits lost to Bessel orders near 1/|q| grow as the rate shrinks
            assert!((a - b).abs() < 1e-8, "r={r}: {a} {b}");
        }
    }

    #[test]
    fn limits_and_shape() {
        let s = reference();
        assert!((heston_cesv_laplace(&s, 1e-12, 1.0).unwrap() - 1.0).abs() < 1e-12);
        let m = heston_cesv_laplace(&s, 1.0, 1.0).unwrap();
        assert_eq!(m, heston_cesv_joint_laplace(&s, 1.0, 0.0, 1.0).unwrap());
        let v: Vec<f64> = (1..30)
            .map(|i| ln_heston_cesv_joint_laplace(&s, 0.5 * i as f64, 0.0, 1.0).unwrap())
            .collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]));
        assert!(v.windows(3).all(|w| w[0] + w[2] - 2.0 * w[1] >= -1e-12));
        // mean from the slope at 0
        let h = 1e-5;
        let d = -(heston_cesv_laplace(&s, h, 1.0).unwrap() - 1.0) / h;
        assert!((d - s.mean(1.0)).abs() < 1e-5 * s.mean(1.0).max(1.0), "{d} {}", s.mean(1.0));
        assert!(ln_heston_cesv_joint_laplace(&s, 1e8, 0.0, 30.0).unwrap().is_finite());
    }

    #[test]
    fn matches_monte_carlo() {
        let s = reference();
        let cfg = PathConfig::new(1.0, 200, 40_000, 17);
        let times = cfg.times();
        let v = s.variance();
        let p = run_paths(cfg.paths, cfg.seed, |rng, _| cir_path_weighted(&v, &times, |u| s.rate_weight(u), false, rng)).unwrap();
        let w = s.rate_weight(1.0);
        let x: Vec<f64> = p.iter().map(|q| (-q.integral - 2.0 * w * q.terminal).exp()).collect();
        let r = summarize(&x, 0, x.len());
        let want = heston_cesv_joint_laplace(&s, 1.0, 2.0, 1.0).unwrap();
        assert!(r.covers(want, 3.0, 1e-6), "{r:?} vs {want}");
    }
}
