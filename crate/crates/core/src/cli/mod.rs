//! Command-line front end: options, default curves, swaps, clock laws and
//! simulations, with JSON result documents and optional CSV tables.

pub mod config;
pub mod json;

use std::fmt::Write as _;
use std::time::Instant;

use num_complex::Complex64;
use serde_json::Value;

use crate::bessel_cev::{default_probability, CevParams};
use crate::credit_swaps::{cds_quote, eds_quote, EdsOptions, SwapQuote, SwapSchedule};
use crate::error::{Error, Result};
use crate::mc::cev::simulate_cev_paths;
use crate::mc::{simulate_cev, simulate_tc_stock_with, summarize, PathConfig, Scheme, SimResult};
use crate::method::Method;
use crate::sv_pricing::{tc_call_put, tc_cds_quote, tc_default_curve, TcModelSpec, TcOptions};
use crate::time_change::{
    clock_cdf, clock_density, clock_inversion, clock_ln_laplace, clock_tail, iou_cf, TimeChangeSpec,
};
use crate::transform::EulerInversion;
use crate::vanilla::{cev_call_put, implied_sigma};

pub use config::{Config, RunArgs};
pub use json::Json;

/// Exit status for a failed run: 1 for invalid input, 2 for numerical failures.
pub fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

/// What a command computed, before it is wrapped in the result document.
struct Output {
    result: Json,
    method: Method,
    error_estimate: f64,
    csv: Option<String>,
}

enum Model {
    Cev(CevParams),
    Tc(TcModelSpec),
}

fn clock_needs_stock(kind: &str) -> bool {
    matches!(kind, "heston-cesv" | "hull-white")
}

/// The clock from `clock` (its kind) and the `clock.*` keys. Heston and
/// Hull–White clocks take alpha and rate from the model unless given.
fn clock_spec(c: &Config) -> Result<TimeChangeSpec> {
    let kind = c.text("clock")?.ok_or_else(|| Error::Config("missing required key `clock`".into()))?;
    let mut obj = serde_json::Map::new();
    obj.insert("kind".into(), Value::String(kind.clone()));
    let mut given = Vec::new();
    for (k, v) in c.section("clock") {
        given.push(k.clone());
        match k.split_once('.') {
            Some(("subordinator", field)) => {
                let sub = obj.entry("subordinator").or_insert_with(|| Value::Object(Default::default()));
                if let Value::Object(m) = sub {
                    m.insert(field.to_string(), v);
                }
            }
            Some(_) => return Err(Error::Config(format!("unknown key `clock.{k}`"))),
            None if k == "subordinator" => {
                let sub = obj.entry("subordinator").or_insert_with(|| Value::Object(Default::default()));
                if let Value::Object(m) = sub {
                    m.insert("kind".into(), v);
                }
            }
            None => {
                obj.insert(k, v);
            }
        }
    }
    if clock_needs_stock(&kind) {
        for key in ["alpha", "rate"] {
            if !obj.contains_key(key) {
                let v = c.require(key)?;
                obj.insert(key.into(), serde_json::json!(v));
            }
        }
    }
    let spec: TimeChangeSpec = serde_json::from_value(Value::Object(obj))
        .map_err(|e| Error::Config(format!("invalid {kind} clock: {e}")))?;
    // serde drops fields the clock does not have, so compare against its echo
    let echo = serde_json::to_value(spec).map_err(|e| Error::Config(e.to_string()))?;
    for k in given {
        let found = match k.split_once('.') {
            Some((head, field)) => echo.get(head).and_then(|s| s.get(field)).is_some(),
            None => echo.get(&k).is_some(),
        };
        if !found {
            return Err(Error::Config(format!("unknown key `clock.{k}` for the {kind} clock")));
        }
    }
    spec.validate()?;
    Ok(spec)
}

fn model(c: &Config) -> Result<Model> {
    let kind = c.text("model")?.unwrap_or_else(|| "cev".into());
    let spot = c.num_or("spot", 1.0)?;
    match kind.as_str() {
        "cev" => {
            let p = CevParams::new(spot, c.require("rate")?, c.require("sigma")?, c.require("alpha")?);
            p.validate_defaultable()?;
            Ok(Model::Cev(p))
        }
        "tc" => {
            let clock = clock_spec(c)?;
            let dimension = match (c.num("dimension")?, c.num("alpha")?) {
                (Some(_), Some(_)) => return Err(Error::Config("give either `dimension` or `alpha`, not both".into())),
                (Some(d), None) => d,
                (None, Some(a)) if a < 1.0 => 2.0 - 1.0 / (1.0 - a),
                (None, Some(a)) => return Err(Error::Domain(format!("alpha must be below 1, got {a}"))),
                (None, None) => return Err(Error::Config("missing required key `alpha` or `dimension`".into())),
            };
            let mut m = TcModelSpec::new(dimension, spot, c.require("rate")?, clock);
            if let Some(rho) = c.num("correlation")? {
                m = m.with_correlation(rho);
            }
            m.validate()?;
            Ok(Model::Tc(m))
        }
        other => Err(Error::Config(format!("model must be cev or tc, got `{other}`"))),
    }
}

fn tc_options(c: &Config) -> Result<TcOptions> {
    let d = TcOptions::default();
    Ok(TcOptions {
        nodes: c.count("nodes")?.unwrap_or(d.nodes),
        max_nodes: c.count("max_nodes")?.unwrap_or(d.max_nodes),
        stability: c.num_or("stability", d.stability)?,
        tail: c.num_or("tail", d.tail)?,
        paths: c.count("paths")?.unwrap_or(d.paths),
        steps_per_year: c.num_or("steps_per_year", d.steps_per_year)?,
        seed: c.seed("seed")?.unwrap_or(d.seed),
    })
}

/// One or more values from `key` (single) or `keys` (list).
fn points(c: &Config, one: &str, many: &str) -> Result<Vec<f64>> {
    match (c.num(one)?, c.list(many)?) {
        (Some(_), Some(_)) => Err(Error::Config(format!("give either `{one}` or `{many}`, not both"))),
        (Some(x), None) => Ok(vec![x]),
        (None, Some(v)) if !v.is_empty() => Ok(v),
        _ => Err(Error::Config(format!("missing required key `{one}` or `{many}`"))),
    }
}

fn worst(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn price(c: &Config) -> Result<Output> {
    let m = model(c)?;
    let strikes = points(c, "strike", "strikes")?;
    let maturities = points(c, "maturity", "maturities")?;
    let target = c.num("target")?;
    let o = match m {
        Model::Tc(_) => Some(tc_options(c)?),
        Model::Cev(_) => None,
    };
    let mut rows = Vec::new();
    let mut csv = String::from("K,T,call,put,parity_residual\n");
    let mut method = Method::ClosedForm;
    let mut err: f64 = 0.0;
    let mut implied = None;
    for &t in &maturities {
        for &k in &strikes {
            let (call, put, res, e) = match &m {
                Model::Cev(p) => {
                    let cp = cev_call_put(p, k, t)?;
                    (cp.call, cp.put, cp.parity_residual(p.spot, k * (-p.rate * t).exp()), 0.0)
                }
                Model::Tc(s) => {
                    let q = tc_call_put(s, k, t, o.as_ref().unwrap())?;
                    if q.method == Method::MonteCarlo || method == Method::ClosedForm {
                        method = q.method;
                    }
                    (q.call, q.put, q.parity_residual, q.error_estimate)
                }
            };
            err = worst(err, e);
            let _ = writeln!(csv, "{k:.16e},{t:.16e},{call:.16e},{put:.16e},{res:.16e}");
            rows.push(Json::obj([
                ("strike", k.into()),
                ("maturity", t.into()),
                ("call", call.into()),
                ("put", put.into()),
                ("parity_residual", res.into()),
            ]));
        }
    }
    if let Some(v) = target {
        let Model::Cev(p) = &m else {
            return Err(Error::Config("`target` (implied sigma) needs the cev model".into()));
        };
        if rows.len() != 1 {
            return Err(Error::Config("`target` needs a single strike and maturity".into()));
        }
        implied = Some(implied_sigma(p, strikes[0], maturities[0], v)?);
    }
    let mut result = if rows.len() == 1 { rows.pop().unwrap() } else { Json::obj([("rows", Json::Arr(rows))]) };
    if let (Some(s), Json::Obj(f)) = (implied, &mut result) {
        f.push(("implied_sigma".into(), s.into()));
    }
    Ok(Output { result, method, error_estimate: err, csv: Some(csv) })
}

fn curve_times(c: &Config) -> Result<Vec<f64>> {
    let t = match (c.grid("grid")?, c.list("maturities")?) {
        (Some(_), Some(_)) => return Err(Error::Config("give either `grid` or `maturities`, not both".into())),
        (Some(g), None) | (None, Some(g)) => g,
        (None, None) => return Err(Error::Config("missing required key `grid` (a:b:step) or `maturities`".into())),
    };
    if t.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Domain("default curve times must be nonnegative".into()));
    }
    Ok(t)
}

fn default_curve(c: &Config) -> Result<Output> {
    let m = model(c)?;
    let times = curve_times(c)?;
    let (probs, errs, method): (Vec<f64>, Vec<f64>, Method) = match &m {
        Model::Cev(p) => {
            let v = times.iter().map(|&t| default_probability(p, t)).collect::<Result<Vec<_>>>()?;
            let n = v.len();
            (v, vec![0.0; n], Method::ClosedForm)
        }
        Model::Tc(s) => {
            let o = tc_options(c)?;
            let est = tc_default_curve(s, &times, &o)?;
            let method = est.iter().map(|e| e.method).find(|&m| m == Method::MonteCarlo).unwrap_or(est.first().map_or(Method::ClosedForm, |e| e.method));
            (est.iter().map(|e| e.value).collect(), est.iter().map(|e| e.error).collect(), method)
        }
    };
    let mut csv = String::from("T,probability\n");
    let mut rows = Vec::new();
    for ((t, p), e) in times.iter().zip(&probs).zip(&errs) {
        let _ = writeln!(csv, "{t:.16e},{p:.16e}");
        rows.push(Json::obj([("T", (*t).into()), ("probability", (*p).into()), ("error", (*e).into())]));
    }
    let err = errs.iter().copied().fold(0.0, worst);
    Ok(Output { result: Json::obj([("rows", Json::Arr(rows))]), method, error_estimate: err, csv: Some(csv) })
}

fn schedule(c: &Config, recovery: f64) -> Result<SwapSchedule> {
    let t = c.require("maturity")?;
    let f = c.count("frequency")?.unwrap_or(4);
    if f == 0 || !(t > 0.0) {
        return Err(Error::Config("maturity and frequency must be positive".into()));
    }
    let s = SwapSchedule::periodic(t, f, recovery);
    s.validate()?;
    Ok(s)
}

fn quote_output(q: SwapQuote, s: &SwapSchedule) -> Output {
    let result = Json::obj([
        ("coupon", q.coupon.into()),
        ("protection", q.protection.into()),
        ("annuity", q.annuity.into()),
        ("dates", Json::Arr(s.dates.iter().map(|&d| d.into()).collect())),
    ]);
    Output { result, method: q.method, error_estimate: q.error_estimate, csv: None }
}

fn cds(c: &Config) -> Result<Output> {
    let m = model(c)?;
    let s = schedule(c, c.num_or("recovery", 0.4)?)?;
    let q = match &m {
        Model::Cev(p) => cds_quote(p, &s)?,
        Model::Tc(spec) => tc_cds_quote(spec, &s, &tc_options(c)?)?,
    };
    Ok(quote_output(q, &s))
}

fn eds(c: &Config) -> Result<Output> {
    let Model::Cev(p) = model(c)? else {
        return Err(Error::Config("an equity default swap needs the cev model".into()));
    };
    let level = c.require("trigger")?;
    let s = schedule(c, 0.0)?.with_trigger(level);
    let d = EdsOptions::default();
    let o = EdsOptions {
        inversion: EulerInversion::with_terms(c.count("terms")?.unwrap_or(d.inversion.m)),
        tolerance: c.num_or("tolerance", d.tolerance)?,
        mc_paths: c.count("paths")?.unwrap_or(d.mc_paths),
        mc_steps: c.count("steps")?.unwrap_or(d.mc_steps),
        seed: c.seed("seed")?.unwrap_or(d.seed),
    };
    let q = eds_quote(&p, &s, &o)?;
    Ok(quote_output(q, &s))
}

fn transform(c: &Config) -> Result<Output> {
    let clock = clock_spec(c)?;
    let t = c.require("maturity")?;
    if !(t > 0.0) {
        return Err(Error::Domain(format!("maturity must be positive, got {t}")));
    }
    let quantity = c.text("quantity")?.unwrap_or_else(|| "laplace".into());
    let at = match c.list("at")? {
        Some(v) => v,
        None if quantity == "mean" => Vec::new(),
        None => return Err(Error::Config("missing required key `at`".into())),
    };
    let inv = clock_inversion();
    let mut rows = Vec::new();
    let mut err: f64 = 0.0;
    let method = match quantity.as_str() {
        "mean" => {
            let m = clock.mean(t);
            return Ok(Output { result: Json::obj([("mean", m.into())]), method: Method::ClosedForm, error_estimate: 0.0, csv: None });
        }
        "laplace" => {
            for &x in &at {
                let v = clock_ln_laplace(&clock, Complex64::new(x, 0.0), t)?.exp().re;
                rows.push(Json::obj([("at", x.into()), ("value", v.into())]));
            }
            Method::ClosedForm
        }
        "cf" => {
            for &u in &at {
                let v = match &clock {
                    TimeChangeSpec::IntegratedOu(o) => iou_cf(o, u, t)?,
                    _ => clock_ln_laplace(&clock, Complex64::new(0.0, -u), t)?.exp(),
                };
                rows.push(Json::obj([("at", u.into()), ("re", v.re.into()), ("im", v.im.into())]));
            }
            Method::ClosedForm
        }
        "density" | "cdf" | "tail" => {
            for &x in &at {
                let v = match quantity.as_str() {
                    "density" => clock_density(&clock, x, t, &inv)?,
                    "cdf" => clock_cdf(&clock, x, t, &inv)?,
                    _ => clock_tail(&clock, x, t, &inv)?,
                };
                err = worst(err, v.error);
                rows.push(Json::obj([("at", x.into()), ("value", v.value.into()), ("error", v.error.into())]));
            }
            match clock {
                TimeChangeSpec::HullWhite(_) => Method::Quadrature,
                TimeChangeSpec::PointMass { .. } | TimeChangeSpec::Deterministic { .. } => Method::ClosedForm,
                _ => Method::Inversion,
            }
        }
        other => {
            return Err(Error::Config(format!("quantity must be laplace, cf, density, cdf, tail or mean, got `{other}`")))
        }
    };
    Ok(Output { result: Json::obj([("quantity", Json::str(quantity)), ("rows", Json::Arr(rows))]), method, error_estimate: err, csv: None })
}

fn sim_json(s: &SimResult) -> Json {
    Json::obj([
        ("estimate", s.estimate.into()),
        ("std_error", s.std_error.into()),
        ("paths", s.paths.into()),
        ("absorbed", s.absorbed.into()),
    ])
}

fn simulate(c: &Config, want_csv: bool) -> Result<Output> {
    let m = model(c)?;
    let t = c.require("maturity")?;
    let mut cfg = PathConfig::new(t, c.count("steps")?.unwrap_or(100), c.count("paths")?.unwrap_or(10_000), c.seed("seed")?.unwrap_or(1));
    let strike = c.num("strike")?;
    let mut fields = Vec::new();
    let mut csv = None;
    let martingale = match &m {
        Model::Cev(p) => {
            if let Some(s) = c.text("scheme")? {
                cfg = cfg.with_scheme(match s.as_str() {
                    "exact" => Scheme::Exact,
                    "euler" => Scheme::Euler,
                    other => return Err(Error::Config(format!("scheme must be exact or euler, got `{other}`"))),
                });
            }
            let paths = if want_csv { simulate_cev_paths(p, &cfg)? } else { simulate_cev(p, &cfg)? };
            let d = (-p.rate * t).exp();
            let absorbed = paths.iter().filter(|q| q.default_time.is_some()).count();
            let n = paths.len();
            let stat = |f: &dyn Fn(f64) -> f64| {
                let x: Vec<f64> = paths.iter().map(|q| f(q.terminal)).collect();
                summarize(&x, absorbed, n)
            };
            let mean = stat(&|s| d * s);
            let dflt: Vec<f64> = paths.iter().map(|q| q.default_time.is_some() as u8 as f64).collect();
            fields.push(("default_fraction", sim_json(&summarize(&dflt, absorbed, n))));
            if let Some(k) = strike {
                fields.push(("call", sim_json(&stat(&|s| d * (s - k).max(0.0)))));
                fields.push(("put", sim_json(&stat(&|s| d * (k - s).max(0.0)))));
                fields.push(("parity_residual", sim_json(&stat(&|s| d * (s - k) - (p.spot - k * d)))));
            }
            if want_csv {
                let times = cfg.times();
                let mut w = String::from("path,time,value,absorbed\n");
                for (i, q) in paths.iter().enumerate() {
                    for (tt, v) in times.iter().zip(q.values.as_deref().unwrap_or(&[])) {
                        let hit = q.default_time.is_some_and(|d| d <= *tt);
                        let _ = writeln!(w, "{i},{tt:.16e},{v:.16e},{}", hit as u8);
                    }
                }
                csv = Some(w);
            }
            mean
        }
        Model::Tc(s) => {
            let sim = simulate_tc_stock_with(s, &cfg, want_csv)?;
            fields.push(("default_fraction", sim_json(&sim.default_fraction())));
            if let Some(k) = strike {
                fields.push(("call", sim_json(&sim.call(k))));
                fields.push(("put", sim_json(&sim.put(k))));
                fields.push(("parity_residual", sim_json(&sim.parity_residual(k))));
            }
            fields.push(("coarse_paths", sim.coarse_paths.into()));
            if want_csv {
                let mut w = String::from("path,time,value,absorbed\n");
                for (i, q) in sim.paths.iter().enumerate() {
                    for (tt, v) in sim.times.iter().zip(q.values.as_deref().unwrap_or(&[])) {
                        let hit = q.default_time.is_some_and(|d| d <= *tt);
                        let _ = writeln!(w, "{i},{tt:.16e},{v:.16e},{}", hit as u8);
                    }
                }
                csv = Some(w);
            }
            sim.discounted_mean()
        }
    };
    let err = martingale.std_error;
    fields.insert(0, ("discounted_mean", sim_json(&martingale)));
    Ok(Output { result: Json::obj(fields), method: Method::MonteCarlo, error_estimate: err, csv })
}

fn inputs(c: &Config) -> Json {
    Json::Obj(c.entries().iter().map(|(k, v)| (k.clone(), Json::from_value(v))).collect())
}

/// Runs one command and returns its result document; writes the CSV table
/// when one was requested.
pub fn execute(command: &str, run: &RunArgs) -> Result<Json> {
    let start = Instant::now();
    let c = &run.config;
    let out = match command {
        "price" => price(c),
        "default-curve" => default_curve(c),
        "cds" => cds(c),
        "eds" => eds(c),
        "transform" => transform(c),
        "simulate" => simulate(c, run.csv.is_some()),
        other => Err(Error::Config(format!("unknown command `{other}`"))),
    }?;
    c.finish()?;
    if let Some(path) = &run.csv {
        let table = out
            .csv
            .as_ref()
            .ok_or_else(|| Error::Config(format!("`{command}` has no CSV table")))?;
        std::fs::write(path, table).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(Json::obj([
        ("command", Json::str(command)),
        ("inputs", inputs(c)),
        ("result", out.result),
        ("method", out.method.as_str().into()),
        ("error_estimate", out.error_estimate.into()),
        ("runtime_ms", (start.elapsed().as_millis() as usize).into()),
    ]))
}

/// The document written in place of a result when a command fails.
pub fn error_document(command: &str, reason: &str, message: &str, code: u8) -> Json {
    Json::obj([
        ("command", Json::str(command)),
        ("error", Json::obj([("reason", Json::str(reason)), ("message", Json::str(message))])),
        ("exit_code", (code as usize).into()),
    ])
}
