//! Noncentral chi-square tail probabilities and truncated moments.
//!
//! Both quantities are Poisson mixtures of gamma tails. The sums start at the
//! Poisson mode and walk outwards, so very large noncentralities cost
//! O(√nc) terms instead of O(nc).

use crate::error::{domain, Error, Result};
use crate::quad::KahanSum;
use crate::specfun::gamma::{gamma_tail, ln_gamma};


/// Relative size of the certified remainder at which a series stops.
pub const SERIES_TOL: f64 = 1e-14;
/// Hard cap on the number of series terms.
pub const SERIES_CAP: usize = 1_000_000;

/// Arguments of the noncentral chi-square law V with `dof` degrees of
/// freedom and noncentrality `noncentrality`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoncentralChi2Args {
    pub threshold: f64,
    pub dof: f64,
    pub noncentrality: f64,
}

impl NoncentralChi2Args {
    pub fn new(threshold: f64, dof: f64, noncentrality: f64) -> Self {
        Self {
            threshold,
            dof,
            noncentrality,
        }
    }
}

/// G(x, y) continued to negative non-integer shapes through
/// G(x, y) = G(x+1, y) − y^x e^{−y}/Γ(x+1).
pub fn gamma_tail_continued(x: f64, y: f64) -> Result<f64> {
    if x > 0.0 {
        return gamma_tail(x, y);
    }
    if x == x.floor() {
        return domain(format!("gamma tail undefined at nonpositive integer shape {x}"));
    }
    if !(y > 0.0) {
        return domain("continued gamma tail needs a positive threshold");
    }
    let up = gamma_tail_continued(x + 1.0, y)?;
    let g = crate::specfun::gamma::gamma(x + 1.0);
    Ok(up - (x * y.ln() - y).exp() / g)
}

/// Σ_n w_n·h(n) over n ≥ 0 with Poisson(κ) weights w_n and h slowly varying.
///
/// Summation starts at the mode and walks outwards with the weights built by
/// recurrence relative to the mode. The sum is normalised by the accumulated
/// weight mass, which removes the rounding error of the mode weight itself
/// (large for big κ). Each direction stops once geometric bounds on both the
/// remaining weights and the remaining terms fall below `SERIES_TOL`.
pub(crate) fn poisson_mixture<F>(kappa: f64, what: &'static str, mut h: F) -> Result<f64>
where
    F: FnMut(usize) -> Result<f64>,
{
    if kappa == 0.0 {
        return h(0);
    }
    let mode = kappa.floor() as usize;
    let mut sum = KahanSum::new();
    let mut wsum = KahanSum::new();
    let mut count = 0usize;
    let cap = || Error::Convergence {
        what,
        iterations: SERIES_CAP,
    };
    let done = |t: f64, prev: f64, q: f64, w: f64, sum: &KahanSum, wsum: &KahanSum| -> bool {
        if q >= 1.0 {
            return false;
        }
        let wtail = w * q / (1.0 - q);
        if wtail > SERIES_TOL * wsum.value() {
            return false;
        }
        if t == 0.0 {
            return prev == 0.0 || wtail == 0.0;
        }
        let r = t.abs() / prev.abs();
        r < 1.0 && t.abs() * r / (1.0 - r) < SERIES_TOL * sum.value().abs().max(1e-300)
    };

    // upward from the mode
    let mut w = 1.0;
    let mut n = mode;
    let mut prev = f64::INFINITY;
    loop {
        let t = w * h(n)?;
        sum.add(t);
        wsum.add(w);
        count += 1;
        if count > SERIES_CAP {
            return Err(cap());
        }
        let q = kappa / (n as f64 + 1.0);
        if n > mode && done(t, prev, q, w, &sum, &wsum) {
            break;
        }
        prev = t;
        w *= q;
        n += 1;
    }

    // downward from the mode
    let mut w = 1.0;
    let mut n = mode;
    let mut prev = f64::INFINITY;
    while n > 0 {
        w *= n as f64 / kappa;
        n -= 1;
        let t = w * h(n)?;
        sum.add(t);
        wsum.add(w);
        count += 1;
        if count > SERIES_CAP {
            return Err(cap());
        }
        let q = n as f64 / kappa;
        if done(t, prev, q, w, &sum, &wsum) {
            break;
        }
        prev = t;
    }
    Ok(sum.value() / wsum.value())
}

fn check(args: &NoncentralChi2Args) -> Result<()> {
    if !(args.threshold >= 0.0) {
        return domain(format!("noncentral chi-square: threshold {} < 0", args.threshold));
    }
    if !(args.noncentrality >= 0.0) {
        return domain(format!(
            "noncentral chi-square: noncentrality {} < 0",
            args.noncentrality
        ));
    }
    if !args.dof.is_finite() || args.dof == 0.0 {
        return domain(format!("noncentral chi-square: invalid dof {}", args.dof));
    }
    if args.dof < 0.0 && (args.dof / 2.0) == (args.dof / 2.0).floor() {
        return domain(format!(
            "noncentral chi-square: dof {} has a nonpositive integer half",
            args.dof
        ));
    }
    Ok(())
}

/// P(V > threshold), V ~ χ'²(dof, noncentrality).
///
/// For negative non-integer `dof/2` the same series is evaluated with the
/// analytically continued gamma tail. This is the form in which the
/// complementary identities of the noncentral law remain valid.
pub fn ncchi2_q(args: NoncentralChi2Args) -> Result<f64> {
    check(&args)?;
    if args.threshold == 0.0 && args.dof > 0.0 {
        return Ok(1.0);
    }
    let s = 0.5 * args.dof;
    let y = 0.5 * args.threshold;
    let kappa = 0.5 * args.noncentrality;
    if args.dof > 0.0 {
        let v = poisson_mixture(kappa, "noncentral chi-square tail", |n| {
            gamma_tail(s + n as f64, y)
        })?;
        Ok(v.clamp(0.0, 1.0))
    } else {
        poisson_mixture(kappa, "noncentral chi-square tail", |n| {
            gamma_tail_continued(s + n as f64, y)
        })
    }
}

/// P(V ≤ threshold).
pub fn ncchi2_cdf(args: NoncentralChi2Args) -> Result<f64> {
    check(&args)?;
    if args.dof <= 0.0 {
        return Ok(1.0 - ncchi2_q(args)?);
    }
    let s = 0.5 * args.dof;
    let y = 0.5 * args.threshold;
    let kappa = 0.5 * args.noncentrality;
    let v = poisson_mixture(kappa, "noncentral chi-square cdf", |n| {
        crate::specfun::gamma::gamma_head(s + n as f64, y)
    })?;
    Ok(v.clamp(0.0, 1.0))
}

/// E[V^c 1{V ≥ threshold}].
pub fn ncchi2_truncated_moment(args: NoncentralChi2Args, c: f64) -> Result<f64> {
    check(&args)?;
    if args.dof <= 0.0 || !(0.5 * args.dof + c > 0.0) {
        return domain(format!(
            "truncated moment needs dof/2 + c > 0 (dof {}, c {c})",
            args.dof
        ));
    }
    let s = 0.5 * args.dof;
    let y = 0.5 * args.threshold;
    let kappa = 0.5 * args.noncentrality;
    let ln2c = c * std::f64::consts::LN_2;
    poisson_mixture(kappa, "noncentral chi-square moment", |n| {
        let sn = s + n as f64;
        let ratio = (ln2c + ln_gamma(sn + c) - ln_gamma(sn)).exp();
        Ok(ratio * gamma_tail(sn + c, y)?)
    })
}

/// Density of χ'²(dof, noncentrality) at v > 0, as a Poisson mixture of
/// central chi-square densities.
pub fn ncchi2_density(v: f64, dof: f64, noncentrality: f64) -> Result<f64> {
    if !(v > 0.0) || !(dof > 0.0) || !(noncentrality >= 0.0) {
        return domain("noncentral chi-square density: invalid arguments");
    }
    let kappa = 0.5 * noncentrality;
    let y = 0.5 * v;
    poisson_mixture(kappa, "noncentral chi-square density", |n| {
        let s = 0.5 * dof + n as f64;
        Ok(0.5 * ((s - 1.0) * y.ln() - y - ln_gamma(s)).exp())
    })
}
