//! The acceptance battery: oracle comparisons and invariants grouped into
//! eight criteria. The integration tests run it at full path counts and the
//! `selftest` command at reduced ones.

use std::fmt::Write as _;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::bessel_cev::{default_probability, martingality_default, martingality_default_dual, CevParams};
use crate::credit_swaps::{
    cds_fair_coupon, discounted_default_leg, discounted_default_leg_density, eds_fair_coupon, eds_legs_from_passage,
    eds_quote, passage_transform, EdsOptions, SwapSchedule,
};
use crate::error::{Error, Result};
use crate::mc::cev::cev_first_passage;
use crate::mc::tc::clock_path;
use crate::mc::{
    empirical_cf, mean_and_se, ratio_estimate, run_paths, simulate_cev, simulate_cir, simulate_iou,
    simulate_tc_stock, summarize, PathConfig, SimResult,
};
use crate::quad::{integrate_to_infinity, integrate_with, QuadOptions};
use crate::specfun::bessel::{bessel_i_scaled, bessel_ik, bessel_k};
use crate::specfun::gamma::{gamma_tail, gamma_tail_density};
use crate::specfun::ncchi2::{ncchi2_q, NoncentralChi2Args};
use crate::specfun::whittaker::whittaker_w;
use crate::sv_pricing::{tc_call_put, tc_cds_quote, tc_default_probability, TcModelSpec, TcOptions};
use crate::time_change::{
    clock_density, clock_inversion, heston_cesv_laplace, integrated_cir_joint_laplace, integrated_cir_laplace,
    iou_cf, iou_joint_cf, iou_joint_cf_quadrature, ln_heston_cesv_joint_laplace_riccati, HestonCesvSpec,
    HullWhiteSpec, IntegratedCirSpec, IntegratedOuSpec, Subordinator, TimeChangeSpec,
};
use crate::transform::{cdf_from_cf, density_from_cf, invert_laplace, CfInversion, EulerInversion};
use crate::vanilla::cev_call_put;

/// Seed and path scale of a battery run, with an optional perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryConfig {
    pub seed: u64,
    /// Multiplies every Monte Carlo path count.
    pub path_scale: f64,
    /// Checks whose name contains this text get their value shifted by
    /// 1e-3 relative, so that a sound battery must report them as failing.
    pub perturb: Option<String>,
}

impl BatteryConfig {
    pub fn full(seed: u64) -> Self {
        Self { seed, path_scale: 1.0, perturb: None }
    }

    pub fn reduced(seed: u64) -> Self {
        Self { seed, path_scale: 0.25, perturb: None }
    }

    fn paths(&self, n: usize) -> usize {
        ((n as f64 * self.path_scale).round() as usize).max(2000)
    }

    /// A seed per use site, so that no two estimators share streams.
    fn seed(&self, site: u64) -> u64 {
        self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(site)
    }
}

/// One comparison: |value − reference| ≤ bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    pub bound: f64,
    pub pass: bool,
    /// Fails for a documented reason that no numerical setting removes.
    pub known_gap: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Check {
    pub fn close(name: impl Into<String>, value: f64, reference: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            reference,
            bound,
            pass: (value - reference).abs() <= bound,
            known_gap: false,
            reason: None,
        }
    }

    pub fn relative(name: impl Into<String>, value: f64, reference: f64, tol: f64) -> Self {
        Self::close(name, value, reference, tol * reference.abs())
    }

    /// `reference` within k standard errors of a simulated estimate.
    pub fn within_se(name: impl Into<String>, sim: &SimResult, reference: f64, k: f64) -> Self {
        Self::close(name, sim.estimate, reference, k * sim.std_error)
    }

    /// Two independent estimates within three joint standard errors.
    pub fn joint(name: impl Into<String>, a: &SimResult, b: &SimResult) -> Self {
        Self::close(name, a.estimate, b.estimate, 3.0 * a.std_error.hypot(b.std_error))
    }

    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::close(name, value.abs(), 0.0, bound)
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::close(name, if ok { 1.0 } else { 0.0 }, 1.0, 0.0)
    }

    pub fn failed(name: impl Into<String>, e: &Error) -> Self {
        Self {
            reason: Some(format!("{}: {e}", e.reason())),
            ..Self::close(name, f64::NAN, f64::NAN, 0.0)
        }
    }

    fn gap(self) -> Self {
        Self { known_gap: true, ..self }
    }

    fn perturbed(self) -> Self {
        let value = self.value + 1e-3 * self.value.abs().max(1.0);
        Self { pass: (value - self.reference).abs() <= self.bound, value, ..self }
    }
}

/// The outcome of one criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub checks: Vec<Check>,
    /// Wall-clock budget in seconds.
    pub budget: f64,
    #[serde(skip)]
    pub elapsed: f64,
}

impl Criterion {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Every failure is a documented gap.
    pub fn passed_except_gaps(&self) -> bool {
        self.checks.iter().all(|c| c.pass || c.known_gap)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn in_budget(&self) -> bool {
        self.elapsed <= self.budget
    }

    pub fn status_line(&self) -> String {
        let ok = self.checks.iter().filter(|c| c.pass).count();
        let gaps = self.checks.iter().filter(|c| !c.pass && c.known_gap).count();
        let verdict = if self.passed() && self.in_budget() { "PASS" } else { "FAIL" };
        let mut s = format!(
            "criterion {}: {verdict} {} ({ok}/{} checks, {:.1} s of {:.0} s)",
            self.id,
            self.title,
            self.checks.len(),
            self.elapsed,
            self.budget
        );
        if gaps > 0 {
            let _ = write!(s, ", {gaps} documented gap{}", if gaps > 1 { "s" } else { "" });
        }
        s
    }
}

/// Check details with every float in round-trip form. Timings are left out
/// so that equal seeds give byte-identical text.
pub fn report(criteria: &[Criterion]) -> String {
    let mut s = String::new();
    for c in criteria {
        let verdict = if c.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "criterion {} {verdict}: {}", c.id, c.title);
        for k in &c.checks {
            let tag = match (k.pass, k.known_gap) {
                (true, _) => "pass",
                (false, true) => "gap ",
                (false, false) => "FAIL",
            };
            let _ = write!(
                s,
                "  {tag} {}: value {:.16e} reference {:.16e} bound {:.16e}",
                k.name, k.value, k.reference, k.bound
            );
            if let Some(r) = &k.reason {
                let _ = write!(s, " ({r})");
            }
            s.push('\n');
        }
    }
    s
}

struct Recorder<'a> {
    cfg: &'a BatteryConfig,
    checks: Vec<Check>,
}

impl<'a> Recorder<'a> {
    fn add(&mut self, c: Check) {
        let hit = self.cfg.perturb.as_deref().is_some_and(|p| c.name.contains(p));
        self.checks.push(if hit { c.perturbed() } else { c });
    }

    /// Runs a group of checks, recording one failed check if it errs.
    fn group<F: FnOnce(&mut Self) -> Result<()>>(&mut self, name: &str, f: F) {
        if let Err(e) = f(self) {
            self.add(Check::failed(name, &e));
        }
    }
}

fn run<F: FnOnce(&mut Recorder)>(id: u8, title: &'static str, budget: f64, cfg: &BatteryConfig, f: F) -> Criterion {
    let start = Instant::now();
    let mut r = Recorder { cfg, checks: Vec::new() };
    f(&mut r);
    Criterion { id, title, checks: r.checks, budget, elapsed: start.elapsed().as_secs_f64() }
}

fn reference_cev() -> CevParams {
    CevParams::new(1.0, 0.05, 0.5, 0.5)
}

fn reference_heston() -> HestonCesvSpec {
    HestonCesvSpec { kappa: 2.0, theta: 0.04, eta: 0.3, v0: 0.04, alpha: 0.5, rate: 0.03 }
}

fn reference_cir() -> IntegratedCirSpec {
    IntegratedCirSpec::new(1.0, 1.0, 0.5, 1.0)
}

fn reference_hull_white() -> HullWhiteSpec {
    HullWhiteSpec { theta: 0.1, eta: 2.0, sigma0_sq: 0.2, alpha: 0.5, rate: 0.03 }
}

fn subordinators() -> [Subordinator; 3] {
    [
        Subordinator::ExpJumpPoisson { rate: 2.0, mean: 0.5 },
        Subordinator::InverseGaussian { nu: 1.5 },
        Subordinator::StationaryInverseGaussian { nu: 1.5 },
    ]
}

fn reference_iou(sub: Subordinator) -> IntegratedOuSpec {
    IntegratedOuSpec { lambda: 0.8, h0: 0.3, subordinator: sub }
}

fn sub_name(s: &Subordinator) -> &'static str {
    match s {
        Subordinator::ExpJumpPoisson { .. } => "exp-jump Poisson",
        Subordinator::InverseGaussian { .. } => "inverse Gaussian",
        Subordinator::StationaryInverseGaussian { .. } => "stationary inverse Gaussian",
    }
}

/// ∫ f over [a, ∞) to near machine precision.
fn tail_integral<F: FnMut(f64) -> f64>(f: F, a: f64) -> Result<f64> {
    integrate_to_infinity(f, a, QuadOptions::new(1e-15, 1e-14)).require("oracle quadrature", 1e-11)
}

/// Σ_{n≥1} g(n + a, κ)·G(n + b, z), summed until the weights are spent.
fn poisson_gamma_series(a: f64, b: f64, kappa: f64, z: f64) -> Result<f64> {
    let mut sum = 0.0;
    let mut mass = 0.0;
    for n in 1..2000 {
        let w = gamma_tail_density(n as f64 + a, kappa)?;
        sum += w * crate::specfun::ncchi2::gamma_tail_continued(n as f64 + b, z)?;
        mass += w;
        if n as f64 > kappa + a && w < 1e-18 * mass.max(1e-300) {
            return Ok(sum);
        }
    }
    Err(Error::Convergence { what: "Poisson-gamma series", iterations: 2000 })
}

/// Criterion 1: special-function identities.
pub fn criterion_1(cfg: &BatteryConfig) -> Criterion {
    run(1, "special-function identities", 5.0, cfg, |r| {
        for &z in &[0.5, 2.0] {
            for &nu in &[0.75, 1.5] {
                for &kappa in &[0.2, 3.0] {
                    let tag = format!("(z={z}, nu={nu}, kappa={kappa})");
                    r.group(&format!("complementary identities {tag}"), |r| {
                        // P(V > 2z) for V ~ χ'²(2ν, 2κ) by quadrature of the Bessel-form density
                        let (a, b) = (2.0 * nu, 2.0 * kappa);
                        let density = |v: f64| {
                            let s = (b * v).sqrt();
                            0.5 * (-(v + b) / 2.0 + s).exp()
                                * (v / b).powf(0.5 * (0.5 * a - 1.0))
                                * bessel_i_scaled(0.5 * a - 1.0, s).unwrap_or(f64::NAN)
                        };
                        let oracle = tail_integral(density, 2.0 * z)?;
                        let q = ncchi2_q(NoncentralChi2Args::new(2.0 * z, a, b))?;
                        let series = poisson_gamma_series(0.0, nu - 1.0, kappa, z)?;
                        r.add(Check::close(format!("first identity, series {tag}"), series, oracle, 1e-10));
                        r.add(Check::close(format!("first identity, tail {tag}"), q, oracle, 1e-10));
                        // Σ g(n+ν−1, κ) g(n, u) = e^{−κ−u}(κ/u)^{(ν−1)/2} I_{ν−1}(2√(κu))
                        let mixed = |u: f64| {
                            let s = 2.0 * (kappa * u).sqrt();
                            (-(u.sqrt() - kappa.sqrt()).powi(2)).exp()
                                * (kappa / u).powf(0.5 * (nu - 1.0))
                                * bessel_i_scaled(nu - 1.0, s).unwrap_or(f64::NAN)
                        };
                        let oracle = tail_integral(mixed, z)?;
                        let lhs = 1.0 - ncchi2_q(NoncentralChi2Args::new(2.0 * kappa, 2.0 * nu - 2.0, 2.0 * z))?;
                        let series = poisson_gamma_series(nu - 1.0, 0.0, kappa, z)?;
                        r.add(Check::close(format!("second identity, series {tag}"), series, oracle, 1e-10));
                        r.add(Check::close(format!("second identity, tail {tag}"), lhs, oracle, 1e-10));
                        Ok(())
                    });
                }
            }
        }
        r.group("Wronskian", |r| {
            let mut worst: f64 = 0.0;
            for &nu in &[0.0, 0.3, 1.0, 2.5, 7.0, 24.9, 25.0, 40.0, 120.0] {
                for &x in &[0.05, 0.7, 1.9, 2.1, 9.0, 35.0, 80.0, 3000.0] {
                    let b = bessel_ik(nu, x)?;
                    let w = x * (b.ln_i + b.ln_k).exp() * (b.di - b.dk);
                    worst = worst.max((w - 1.0).abs());
                }
            }
            r.add(Check::below("Wronskian x(I'K - IK') - 1 over 72 points", worst, 1e-10));
            Ok(())
        });
        r.group("Whittaker closed forms", |r| {
            let mut worst: f64 = 0.0;
            for &m in &[0.25, 0.6, 1.3] {
                for &z in &[0.5, 1.0, 3.0] {
                    let w = whittaker_w(m + 0.5, m, z)?;
                    let want = z.powf(m + 0.5) * (-0.5 * z).exp();
                    worst = worst.max((w - want).abs() / want);
                }
            }
            r.add(Check::below("W(m+1/2, m; z) = z^(m+1/2) e^(-z/2), relative", worst, 1e-12));
            let mut worst: f64 = 0.0;
            for &m in &[0.3, 0.75, 1.2] {
                for &z in &[0.7, 2.0, 5.0] {
                    let w = whittaker_w(0.0, m, z)?;
                    let want = (z / std::f64::consts::PI).sqrt() * bessel_k(m, z / 2.0)?;
                    worst = worst.max((w - want).abs() / want);
                }
            }
            r.add(Check::below("W(0, m; z) = sqrt(z/pi) K_m(z/2), relative", worst, 1e-12));
            Ok(())
        });
    })
}

/// Criterion 2: Laplace and characteristic-function inversion.
pub fn criterion_2(cfg: &BatteryConfig) -> Criterion {
    run(2, "transform inversion", 5.0, cfg, |r| {
        let p = EulerInversion::default();
        let grid: Vec<f64> = (1..=50).map(|i| 0.1 * i as f64).collect();
        r.group("Laplace pairs", |r| {
            let mut e1: f64 = 0.0;
            let mut e2: f64 = 0.0;
            let mut e3: f64 = 0.0;
            let c = (2.0 / std::f64::consts::PI).sqrt();
            for &t in &grid {
                let v = invert_laplace(|s| 1.0 / (s + 1.0), t, &p)?;
                e1 = e1.max((v - (-t).exp()).abs());
                let v = invert_laplace(|s| 1.0 / ((s + 1.0) * (s + 1.0)), t, &p)?;
                e2 = e2.max((v - t * (-t).exp()).abs());
                // half-normal transform ∫ e^{−su} √(2/π) e^{−u²/2} du by quadrature
                let fail = std::cell::Cell::new(None);
                let f = |s: Complex64| {
                    let g = |u: f64| (-s * u).exp() * (c * (-0.5 * u * u).exp());
                    match integrate_with(g, 0.0, 40.0, &[0.5, 1.0, 2.0, 4.0, 8.0], QuadOptions::new(1e-15, 1e-14))
                        .require("half-normal transform", 1e-12)
                    {
                        Ok(v) => v,
                        Err(e) => {
                            fail.set(Some(e));
                            Complex64::new(f64::NAN, 0.0)
                        }
                    }
                };
                let v = invert_laplace(f, t, &p)?;
                if let Some(e) = fail.take() {
                    return Err(e);
                }
                e3 = e3.max((v - c * (-0.5 * t * t).exp()).abs());
            }
            r.add(Check::below("exponential pair, max error on t = 0.1..5", e1, 1e-8));
            r.add(Check::below("gamma(2) pair, max error on t = 0.1..5", e2, 1e-8));
            r.add(Check::below("half-normal pair, max error on t = 0.1..5", e3, 1e-8));
            Ok(())
        });
        r.group("Gil-Pelaez normal", |r| {
            let o = CfInversion::default();
            let phi = |u: f64| Complex64::new((-0.5 * u * u).exp(), 0.0);
            let mut ed: f64 = 0.0;
            let mut ec: f64 = 0.0;
            for &x in &[-3.0, -1.5, -0.5, 0.0, 0.7, 2.0, 3.5] {
                let d = density_from_cf(phi, x, &o)?.value;
                ed = ed.max((d - (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()).abs());
                let c = cdf_from_cf(phi, x, &o)?.value;
                // Φ(x) from the gamma tail: P(|Z| > a) = G(1/2, a²/2)
                let tail = 0.5 * gamma_tail(0.5, 0.5 * x * x)?;
                let want = if x < 0.0 { tail } else { 1.0 - tail };
                ec = ec.max((c - want).abs());
            }
            r.add(Check::below("normal density recovered", ed, 1e-8));
            r.add(Check::below("normal distribution function recovered", ec, 1e-8));
            Ok(())
        });
    })
}

/// Criterion 3: stopped-CEV coherence.
pub fn criterion_3(cfg: &BatteryConfig) -> Criterion {
    run(3, "stopped-CEV coherence", 120.0, cfg, |r| {
        r.group("parity grid", |r| {
            let mut worst: f64 = 0.0;
            let mut small: f64 = 0.0;
            for &alpha in &[0.2, 0.5, 0.8] {
                let p = CevParams { alpha, ..reference_cev() };
                for &k in &[0.5, 1.0, 2.0] {
                    for &t in &[0.25, 1.0, 5.0] {
                        let cp = cev_call_put(&p, k, t)?;
                        worst = worst.max(cp.parity_residual(p.spot, k * (-p.rate * t).exp()).abs());
                    }
                }
                for &t in &[0.25, 1.0, 5.0] {
                    small = small.max((cev_call_put(&p, 1e-12, t)?.call - p.spot).abs());
                }
            }
            r.add(Check::below("parity residual on the 27-point grid", worst, 1e-10));
            r.add(Check::below("call at K = 1e-12 minus S0", small, 1e-10));
            Ok(())
        });
        r.group("default probability by simulation", |r| {
            let p = reference_cev();
            for (i, &t) in [1.0, 5.0].iter().enumerate() {
                let paths = simulate_cev(&p, &PathConfig::new(t, 1, cfg.paths(200_000), cfg.seed(30 + i as u64)))?;
                let d: Vec<f64> = paths.iter().map(|q| if q.default_time.is_some() { 1.0 } else { 0.0 }).collect();
                let sim = summarize(&d, d.iter().filter(|&&x| x > 0.0).count(), d.len());
                r.add(Check::within_se(format!("default probability T={t}"), &sim, default_probability(&p, t)?, 3.0));
            }
            Ok(())
        });
        r.group("discounted default leg", |r| {
            let p = reference_cev();
            for &t in &[0.5, 1.0, 5.0] {
                let a = discounted_default_leg(&p, t)?;
                let b = discounted_default_leg_density(&p, t)?;
                r.add(Check::close(format!("default leg by parts vs density T={t}"), a, b, 1e-8));
            }
            Ok(())
        });
    })
}

/// Criterion 4: first passage and equity default swaps.
pub fn criterion_4(cfg: &BatteryConfig) -> Criterion {
    run(4, "first passage and EDS", 300.0, cfg, |r| {
        let p = reference_cev();
        r.group("passage transform by simulation", |r| {
            let horizon = 40.0;
            let taus = cev_first_passage(&p, 0.5, horizon, 4000, cfg.paths(100_000), cfg.seed(40))?;
            for &lam in &[0.5, 1.0, 2.0] {
                let x: Vec<f64> = taus.iter().map(|t| t.map_or(0.0, |t| (-lam * t).exp())).collect();
                let sim = summarize(&x, 0, x.len());
                let want = passage_transform(&p, 0.5, lam)?.value;
                r.add(Check::within_se(format!("E[exp(-lambda tau)] at L=0.5, lambda={lam}"), &sim, want, 3.0));
            }
            Ok(())
        });
        r.group("EDS coupon by simulation", |r| {
            let s = SwapSchedule::periodic(3.0, 4, 0.0).with_trigger(0.5);
            let q = eds_quote(&p, &s, &EdsOptions::default())?;
            let taus = cev_first_passage(&p, 0.5, s.maturity(), 2000, cfg.paths(100_000), cfg.seed(41))?;
            let (prot, ann) = eds_legs_from_passage(p.rate, &s.dates, &taus);
            let sim = ratio_estimate(&prot, &ann);
            r.add(Check::within_se("EDS coupon at L=0.5, quarterly 3y", &sim, q.coupon, 3.0));
            Ok(())
        });
        r.group("EDS to CDS as the trigger vanishes", |r| {
            let s = SwapSchedule::periodic(3.0, 4, 0.0);
            let cds = cds_fair_coupon(&p, &s)?;
            let eds = eds_fair_coupon(&p, &s.clone().with_trigger(1e-3))?;
            r.add(Check::relative("EDS(L=1e-3) vs CDS(R=0), relative", eds, cds, 1e-3).gap());
            let gaps: Vec<f64> = [1e-4, 1e-5, 1e-6]
                .iter()
                .map(|&l| Ok(eds_fair_coupon(&p, &s.clone().with_trigger(l))? / cds - 1.0))
                .collect::<Result<_>>()?;
            r.add(Check::holds("relative gap shrinks toward zero at L = 1e-4, 1e-5, 1e-6", gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] > 0.0 && gaps[2] < 1e-3));
            for (l, g) in [1e-4, 1e-5, 1e-6].iter().zip(&gaps) {
                r.add(Check::close(format!("relative gap at L={l:e} (recorded)"), *g, *g, 0.0));
            }
            Ok(())
        });
    })
}

/// Criterion 5: laws of the clocks.
pub fn criterion_5(cfg: &BatteryConfig) -> Criterion {
    run(5, "time-change laws", 600.0, cfg, |r| {
        let hs = reference_heston();
        r.group("Heston clock", |r| {
            let a = heston_cesv_laplace(&hs, 1.0, 1.0)?;
            let b = ln_heston_cesv_joint_laplace_riccati(&hs, 1.0, 0.0, 1.0, 4000)?.exp();
            r.add(Check::close("Heston transform vs ODE oracle at lambda=1, t=1", a, b, 1e-6));
            let cfg_p = PathConfig::new(1.0, 200, cfg.paths(40_000), cfg.seed(50));
            let times = cfg_p.times();
            let clock = TimeChangeSpec::HestonCesv(hs);
            let h = run_paths(cfg_p.paths, cfg_p.seed, |rng, _| Ok(*clock_path(&clock, &times, rng)?.clock.last().unwrap()))?;
            for &lam in &[1.0, 5.0] {
                let x: Vec<f64> = h.iter().map(|h| (-lam * h).exp()).collect();
                let want = heston_cesv_laplace(&hs, lam, 1.0)?;
                r.add(Check::within_se(format!("Heston transform by simulation, lambda={lam}"), &summarize(&x, 0, x.len()), want, 3.0));
            }
            Ok(())
        });
        r.group("integrated CIR clock", |r| {
            let s = reference_cir();
            let p = simulate_cir(&s, &PathConfig::new(2.0, 400, cfg.paths(50_000), cfg.seed(51)))?;
            let (lam, mu) = (0.7, 0.4);
            let a: Vec<f64> = p.iter().map(|q| (-lam * q.integral).exp()).collect();
            let b: Vec<f64> = p.iter().map(|q| (-lam * q.integral - mu * q.terminal).exp()).collect();
            r.add(Check::within_se("CIR transform by simulation", &summarize(&a, 0, a.len()), integrated_cir_laplace(&s, lam, 2.0)?, 3.0));
            r.add(Check::within_se("joint CIR transform by simulation", &summarize(&b, 0, b.len()), integrated_cir_joint_laplace(&s, lam, mu, 2.0)?, 3.0));
            let mut worst: f64 = 0.0;
            for &l in &[0.1, 0.7, 3.0, 20.0] {
                worst = worst.max((integrated_cir_joint_laplace(&s, l, 0.0, 2.0)? - integrated_cir_laplace(&s, l, 2.0)?).abs());
            }
            r.add(Check::below("joint CIR transform at mu=0 reduces to the marginal", worst, 1e-12));
            Ok(())
        });
        for sub in subordinators() {
            let name = sub_name(&sub);
            r.group(&format!("integrated OU clock, {name}"), |r| {
                let sp = reference_iou(sub);
                let mut worst: f64 = 0.0;
                for &(a, b, t) in &[(1.0, 0.0, 1.5), (-2.5, 0.0, 3.0), (7.0, 0.4, 0.5), (0.3, -3.0, 10.0), (-4.0, 2.0, 2.0), (40.0, 0.0, 1.0)] {
                    worst = worst.max((iou_joint_cf(&sp, a, b, t)? - iou_joint_cf_quadrature(&sp, a, b, t)?).norm());
                }
                r.add(Check::below(format!("IOU cf closed form vs quadrature, {name}"), worst, 1e-8));
                let v = simulate_iou(&sp, &PathConfig::new(1.5, 8, cfg.paths(20_000), cfg.seed(52)))?;
                let h: Vec<f64> = v.iter().map(|q| q.integral).collect();
                for &u in &[0.5, 1.2] {
                    let e = empirical_cf(&h, u);
                    let w = iou_cf(&sp, u, 1.5)?;
                    r.add(Check::within_se(format!("IOU empirical cf real part, {name}, u={u}"), &e.re, w.re, 3.0));
                    r.add(Check::within_se(format!("IOU empirical cf imaginary part, {name}, u={u}"), &e.im, w.im, 3.0));
                }
                Ok(())
            });
        }
        r.group("Hull-White clock", |r| {
            let hw = reference_hull_white();
            let clock = TimeChangeSpec::HullWhite(hw);
            let t = 1.0;
            let times: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
            let h = run_paths(cfg.paths(20_000), cfg.seed(53), |rng, _| Ok(*clock_path(&clock, &times, rng)?.clock.last().unwrap()))?;
            r.add(Check::within_se("Hull-White clock mean by simulation", &summarize(&h, 0, h.len()), hw.mean(t), 3.0));
            let inv = clock_inversion();
            let m = hw.mean(t);
            let f = |z: f64| {
                let x = z.exp();
                x * clock_density(&clock, x, t, &inv).map_or(f64::NAN, |d| d.value)
            };
            let (lo, hi) = (m.ln() - 14.0, m.ln() + 8.0);
            let breaks: Vec<f64> = (1..44).map(|i| lo + i as f64 * (hi - lo) / 44.0).collect();
            let mass = integrate_with(f, lo, hi, &breaks, QuadOptions::new(1e-10, 1e-8)).value;
            r.add(Check::close("Hull-White clock density mass", mass, 1.0, 1e-4));
            Ok(())
        });
    })
}

fn cir_model() -> TcModelSpec {
    TcModelSpec::new(0.0, 1.0, 0.05, TimeChangeSpec::IntegratedCir(reference_cir()))
}

/// A Heston clock fast enough for defaults to be seen by simulation.
fn heston_model() -> TcModelSpec {
    let h = HestonCesvSpec { kappa: 2.0, theta: 1.0, eta: 1.0, v0: 1.0, alpha: 0.5, rate: 0.03 };
    TcModelSpec::new(h.stock_dimension(), 1.0, h.rate, TimeChangeSpec::HestonCesv(h))
}

fn every_clock() -> Vec<(String, TcModelSpec, bool)> {
    let hw = reference_hull_white();
    let mut v = vec![
        ("point mass".to_string(), TcModelSpec::new(0.0, 1.0, 0.03, TimeChangeSpec::PointMass { value: 0.3 }), false),
        ("deterministic".to_string(), TcModelSpec::from_cev(&reference_cev()).expect("reference CEV"), false),
        ("integrated CIR".to_string(), cir_model(), true),
        ("Heston".to_string(), heston_model(), true),
        ("Hull-White".to_string(), TcModelSpec::new(hw.stock_dimension(), 1.0, hw.rate, TimeChangeSpec::HullWhite(hw)), false),
    ];
    for sub in subordinators() {
        let m = TcModelSpec::new(0.0, 1.0, 0.03, TimeChangeSpec::IntegratedOu(reference_iou(sub)));
        v.push((format!("integrated OU, {}", sub_name(&sub)), m, true));
    }
    v
}

/// Criterion 6: time-changed pricing.
pub fn criterion_6(cfg: &BatteryConfig) -> Criterion {
    run(6, "time-changed pricing", 900.0, cfg, |r| {
        let o = TcOptions { paths: cfg.paths(100_000), seed: cfg.seed(60), ..TcOptions::default() };
        r.group("point-mass clock", |r| {
            let mut worst: f64 = 0.0;
            for &alpha in &[0.2, 0.5, 0.8] {
                let p = CevParams { alpha, ..reference_cev() };
                let det = TcModelSpec::from_cev(&p)?;
                let map = crate::bessel_cev::cev_to_bessel(&p)?;
                for &t in &[0.25, 1.0, 5.0] {
                    let pm = TcModelSpec { clock: TimeChangeSpec::PointMass { value: map.clock(t) }, ..det };
                    for &k in &[0.5, 1.0, 2.0] {
                        let a = tc_call_put(&pm, k, t, &o)?;
                        let b = cev_call_put(&p, k, t)?;
                        worst = worst.max((a.call - b.call).abs()).max((a.put - b.put).abs());
                    }
                    worst = worst.max((tc_default_probability(&pm, t)?.value - default_probability(&p, t)?).abs());
                }
            }
            r.add(Check::below("point-mass prices and default probabilities vs CEV", worst, 1e-10));
            Ok(())
        });
        for (name, m, site) in [("integrated CIR", cir_model(), 61), ("Heston", heston_model(), 62)] {
            r.group(&format!("{name} clock vs simulation"), |r| {
                let (k, t) = (1.0, 1.0);
                let a = tc_call_put(&m, k, t, &o)?;
                let d = tc_default_probability(&m, t)?;
                let sim = simulate_tc_stock(&m, &PathConfig::new(t, 100, cfg.paths(100_000), cfg.seed(site)))?;
                r.add(Check::within_se(format!("{name} call K=1, T=1"), &sim.call(k), a.call, 3.0));
                r.add(Check::within_se(format!("{name} put K=1, T=1"), &sim.put(k), a.put, 3.0));
                r.add(Check::within_se(format!("{name} default probability T=1"), &sim.default_fraction(), d.value, 3.0));
                r.add(Check::below(format!("{name} parity residual"), a.parity_residual, 1e-6));
                Ok(())
            });
        }
        r.group("Heston CDS vs simulation", |r| {
            let m = heston_model();
            let s = SwapSchedule::periodic(2.0, 4, 0.4);
            let q = tc_cds_quote(&m, &s, &o)?;
            let sim = simulate_tc_stock(&m, &PathConfig::new(s.maturity(), 200, cfg.paths(100_000), cfg.seed(63)))?;
            let taus: Vec<Option<f64>> = sim.paths.iter().map(|p| p.default_time).collect();
            let (prot, ann) = eds_legs_from_passage(m.rate, &s.dates, &taus);
            let prot: Vec<f64> = prot.iter().map(|x| (1.0 - s.recovery) * x).collect();
            let est = ratio_estimate(&prot, &ann);
            r.add(Check::within_se("Heston CDS coupon, quarterly 2y, R=0.4", &est, q.coupon, 3.0));
            Ok(())
        });
        r.group("parity, small strike and zero correlation", |r| {
            let o = TcOptions { paths: cfg.paths(20_000), ..o };
            for (name, m, correlated) in every_clock() {
                let a = tc_call_put(&m, 1.0, 1.0, &o)?;
                r.add(Check::below(format!("{name} parity residual"), a.parity_residual, 1e-6));
                let z = tc_call_put(&m, 1e-10, 1.0, &o)?;
                r.add(Check::close(format!("{name} call at K=1e-10 vs S0"), z.call, m.spot(), 1e-6));
                if correlated {
                    let c = tc_call_put(&m.with_correlation(0.0), 1.0, 1.0, &o)?;
                    let diff = (c.call - a.call).abs().max((c.put - a.put).abs());
                    r.add(Check::below(format!("{name} rho=0 through the correlation driver"), diff, 1e-9));
                    let c = tc_call_put(&m.with_correlation(-0.5), 1.0, 1.0, &o)?;
                    r.add(Check::below(format!("{name} correlated parity residual, rho=-0.5"), c.parity_residual, 1e-6));
                }
            }
            Ok(())
        });
        r.group("martingale by simulation", |r| {
            for (i, (name, m, correlated)) in every_clock().into_iter().enumerate() {
                let rhos: &[f64] = if correlated { &[0.0, -0.3, -0.7] } else { &[0.0] };
                for (j, &rho) in rhos.iter().enumerate() {
                    let mm = if correlated { m.with_correlation(rho) } else { m };
                    let sim = simulate_tc_stock(&mm, &PathConfig::new(1.0, 50, cfg.paths(40_000), cfg.seed(100 + 10 * i as u64 + j as u64)))?;
                    r.add(Check::within_se(format!("{name} E[exp(-rT) S_T] = S0, rho={rho}"), &sim.discounted_mean(), mm.spot(), 3.0));
                }
            }
            Ok(())
        });
        r.group("correlated mixture vs full simulation", |r| {
            let m = cir_model().with_correlation(-0.5);
            let a = tc_call_put(&m, 1.0, 1.0, &o)?;
            let mix = SimResult { estimate: a.call, std_error: a.error_estimate, paths: a.evaluations, absorbed: 0 };
            let sim = simulate_tc_stock(&m, &PathConfig::new(1.0, 100, cfg.paths(100_000), cfg.seed(64)))?;
            r.add(Check::joint("integrated CIR call, rho=-0.5", &mix, &sim.call(1.0)));
            Ok(())
        });
    })
}

/// Criterion 7: loss of martingality for α > 1.
pub fn criterion_7(cfg: &BatteryConfig) -> Criterion {
    run(7, "loss of martingality", 120.0, cfg, |r| {
        let p = CevParams { alpha: 1.5, ..reference_cev() };
        r.group("corrected parity", |r| {
            for (i, &t) in [1.0, 5.0].iter().enumerate() {
                let gamma = martingality_default(&p, t)?;
                let paths = simulate_cev(&p, &PathConfig::new(t, 1, cfg.paths(200_000), cfg.seed(70 + i as u64)))?;
                let df = (-p.rate * t).exp();
                for &k in &[0.5, 1.0, 1.5] {
                    let x: Vec<f64> = paths
                        .iter()
                        .map(|q| {
                            let s = df * q.terminal;
                            (s - k).max(0.0) - (k - s).max(0.0) + gamma
                        })
                        .collect();
                    let (mean, se) = mean_and_se(&x);
                    let sim = SimResult { estimate: mean, std_error: se, paths: x.len(), absorbed: 0 };
                    r.add(Check::within_se(format!("C - P + gamma = S0 - K at K={k}, T={t}"), &sim, p.spot - k, 3.0));
                }
            }
            Ok(())
        });
        r.group("dual-dimension identity", |r| {
            let mut worst: f64 = 0.0;
            for &t in &[0.1, 0.5, 1.0, 2.0, 5.0, 20.0] {
                for &sigma in &[0.2, 0.5, 1.0] {
                    let q = CevParams { sigma, ..p };
                    worst = worst.max((martingality_default(&q, t)? - martingality_default_dual(&q, t)?).abs());
                }
            }
            r.add(Check::below("gamma vs S0 P(T0 <= c(t)) in dimension 4 - delta", worst, 1e-10));
            Ok(())
        });
    })
}

fn bits(xs: impl IntoIterator<Item = f64>) -> Vec<u64> {
    xs.into_iter().map(f64::to_bits).collect()
}

/// Criterion 8: reproducibility of every sampler.
pub fn criterion_8(cfg: &BatteryConfig) -> Criterion {
    run(8, "reproducibility", 600.0, cfg, |r| {
        r.group("samplers", |r| {
            let n = 4000;
            let seed = cfg.seed(80);
            let p = reference_cev();
            let cev = |s| -> Result<Vec<u64>> { Ok(bits(simulate_cev(&p, &PathConfig::new(1.0, 4, n, s))?.iter().map(|q| q.terminal))) };
            r.add(Check::holds("CEV exact scheme, same seed", cev(seed)? == cev(seed)?));
            r.add(Check::holds("CEV exact scheme, other seed differs", cev(seed)? != cev(seed + 1)?));
            let s = reference_cir();
            let cir = |s0| -> Result<Vec<u64>> { Ok(bits(simulate_cir(&s, &PathConfig::new(1.0, 50, n, s0))?.iter().map(|q| q.integral))) };
            r.add(Check::holds("integrated CIR, same seed", cir(seed)? == cir(seed)?));
            for sub in subordinators() {
                let sp = reference_iou(sub);
                let iou = |s0| -> Result<Vec<u64>> { Ok(bits(simulate_iou(&sp, &PathConfig::new(1.0, 8, n, s0))?.iter().map(|q| q.integral))) };
                r.add(Check::holds(format!("integrated OU {}, same seed", sub_name(&sub)), iou(seed)? == iou(seed)?));
            }
            let taus = |s0| -> Result<Vec<u64>> { Ok(bits(cev_first_passage(&p, 0.5, 2.0, 200, n, s0)?.iter().map(|t| t.unwrap_or(-1.0)))) };
            r.add(Check::holds("first passage, same seed", taus(seed)? == taus(seed)?));
            for (name, m, correlated) in every_clock() {
                let m = if correlated { m.with_correlation(-0.3) } else { m };
                let tc = |s0| -> Result<Vec<u64>> { Ok(bits(simulate_tc_stock(&m, &PathConfig::new(1.0, 20, n, s0))?.paths.iter().map(|q| q.terminal))) };
                r.add(Check::holds(format!("time-changed stock, {name}, same seed"), tc(seed)? == tc(seed)?));
            }
            let m = cir_model().with_correlation(-0.5);
            let o = TcOptions { paths: n, seed, ..TcOptions::default() };
            let a = tc_call_put(&m, 1.0, 1.0, &o)?;
            let b = tc_call_put(&m, 1.0, 1.0, &o)?;
            r.add(Check::holds("correlated mixture price, same seed", a.call.to_bits() == b.call.to_bits()));
            Ok(())
        });
    })
}

pub fn criterion(id: u8, cfg: &BatteryConfig) -> Option<Criterion> {
    Some(match id {
        1 => criterion_1(cfg),
        2 => criterion_2(cfg),
        3 => criterion_3(cfg),
        4 => criterion_4(cfg),
        5 => criterion_5(cfg),
        6 => criterion_6(cfg),
        7 => criterion_7(cfg),
        8 => criterion_8(cfg),
        _ => return None,
    })
}

pub fn run_battery(cfg: &BatteryConfig) -> Vec<Criterion> {
    (1..=8).filter_map(|i| criterion(i, cfg)).collect()
}
