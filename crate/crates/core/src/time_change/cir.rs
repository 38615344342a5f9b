//! Integrated CIR clock: E[exp(−λ∫₀ᵗ y ds − μ y_t)] in closed form.

use super::IntegratedCirSpec;
use crate::error::{domain, Result};

/// ln E[exp(−λ∫₀ᵗ y ds − μ y_t)].
///
/// With γ = √(κ² + 2η²λ), c = cosh(γt/2), s = sinh(γt/2), the transform is
/// e^{κ²θt/η²} (c + ((κ+μη²)/γ) s)^{−2κθ/η²} e^{−y0 B} with
/// B = (μ(γc − κs) + 2λs)/(γc + (κ+μη²)s). Everything is evaluated after
/// dividing by e^{γt/2}, so large γt does not overflow. Negative arguments
/// are accepted while γ is real and both denominators stay positive.
pub fn ln_integrated_cir_joint_laplace(spec: &IntegratedCirSpec, lambda: f64, mu: f64, t: f64) -> Result<f64> {
    spec.validate()?;
    if !(t >= 0.0) {
        return domain(format!("horizon must be nonnegative, got {t}"));
    }
    if t == 0.0 {
        return Ok(-mu * spec.y0);
    }
    let (k, th, eta) = (spec.kappa, spec.theta, spec.eta);
    let e2 = eta * eta;
    let g2 = k * k + 2.0 * e2 * lambda;
    if !(g2 > 0.0) {
        return domain(format!("transform diverges: κ² + 2η²λ = {g2} ≤ 0"));
    }
    let g = g2.sqrt();
    let e = (-g * t).exp();
    let one_m = -(-g * t).exp_m1();
    let km = k + mu * e2;
    let den = g * (1.0 + e) + km * one_m;
    let base = (g + km) + (g - km) * e;
    if !(den > 0.0) || !(base > 0.0) {
        return domain(format!("transform diverges at (λ, μ) = ({lambda}, {mu}), t = {t}"));
    }
    let num = mu * (g * (1.0 + e) - k * one_m) + 2.0 * lambda * one_m;
    let b = num / den;
    // γ − κ = 2η²λ/(γ + κ) and base − 2γ = (γ − κ − μη²)(e − 1) keep the
    // small-η limit free of cancellation
    let gk = 2.0 * lambda / (g + k) - mu;
    let ln_base = (gk * e2 * (e - 1.0) / (2.0 * g)).ln_1p();
    Ok(-2.0 * k * th * lambda * t / (g + k) - 2.0 * k * th / e2 * ln_base - spec.y0 * b)
}

pub fn integrated_cir_joint_laplace(spec: &IntegratedCirSpec, lambda: f64, mu: f64, t: f64) -> Result<f64> {
    Ok(ln_integrated_cir_joint_laplace(spec, lambda, mu, t)?.exp())
}

/// E[exp(−λ∫₀ᵗ y ds)].
pub fn integrated_cir_laplace(spec: &IntegratedCirSpec, lambda: f64, t: f64) -> Result<f64> {
    integrated_cir_joint_laplace(spec, lambda, 0.0, t)
}

/// E[e^{−μy_t}] from the noncentral chi-square transition:
/// (1 + 2μc)^{−d/2} exp(−μ y0 e^{−κt}/(1 + 2μc)), c = η²(1 − e^{−κt})/(4κ).
pub fn cir_marginal_laplace(spec: &IntegratedCirSpec, mu: f64, t: f64) -> Result<f64> {
    spec.validate()?;
    let k = spec.kappa;
    let c = spec.eta * spec.eta * (-(-k * t).exp_m1()) / (4.0 * k);
    let d = 4.0 * k * spec.theta / (spec.eta * spec.eta);
    let q = 1.0 + 2.0 * mu * c;
    if !(q > 0.0) {
        return domain(format!("CIR transform diverges at μ = {mu}"));
    }
    Ok((-0.5 * d * q.ln() - mu * spec.y0 * (-k * t).exp() / q).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{simulate_cir, summarize, PathConfig};

    fn reference() -> IntegratedCirSpec {
        IntegratedCirSpec::new(1.0, 1.0, 0.5, 1.0)
    }

    #[test]
    fn reductions() {
        let s = reference();
        assert_eq!(integrated_cir_laplace(&s, 0.0, 2.0).unwrap(), 1.0);
        for &mu in &[0.1, 1.0, 7.0] {
            let a = integrated_cir_joint_laplace(&s, 0.0, mu, 2.0).unwrap();
            let b = cir_marginal_laplace(&s, mu, 2.0).unwrap();
            assert!((a - b).abs() < 1e-14, "{a} {b}");
        }
        // vanishing volatility leaves the deterministic clock
        let d = IntegratedCirSpec { eta: 1e-5, ..s };
        let y = d.integral_mean(2.0);
        let a = integrated_cir_laplace(&d, 0.7, 2.0).unwrap();
        assert!((a - (-0.7 * y).exp()).abs() < 1e-8);
    }

    #[test]
    fn large_arguments_stay_finite() {
        let s = reference();
        let v = ln_integrated_cir_joint_laplace(&s, 1e6, 1e3, 50.0).unwrap();
        assert!(v.is_finite() && v < -1e4);
        assert!(integrated_cir_laplace(&s, -3.0, 1.0).is_err());
    }

    #[test]
    fn decreasing_and_log_convex() {
        let s = reference();
        let v: Vec<f64> = (0..40)
            .map(|i| ln_integrated_cir_joint_laplace(&s, 0.25 * i as f64, 0.0, 2.0).unwrap())
            .collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]));
        assert!(v.windows(3).all(|w| w[0] + w[2] - 2.0 * w[1] >= -1e-12));
    }

    #[test]
    fn matches_monte_carlo() {
        let s = reference();
        let cfg = PathConfig::new(2.0, 400, 50_000, 31);
        let p = simulate_cir(&s, &cfg).unwrap();
        let lam = 0.7;
        let mu = 0.4;
        let a: Vec<f64> = p.iter().map(|q| (-lam * q.integral).exp()).collect();
        let b: Vec<f64> = p.iter().map(|q| (-lam * q.integral - mu * q.terminal).exp()).collect();
        let ra = summarize(&a, 0, a.len());
        let rb = summarize(&b, 0, b.len());
        assert!(ra.covers(integrated_cir_laplace(&s, lam, 2.0).unwrap(), 3.0, 1e-5), "{ra:?}");
        assert!(rb.covers(integrated_cir_joint_laplace(&s, lam, mu, 2.0).unwrap(), 3.0, 1e-5), "{rb:?}");
    }
}
