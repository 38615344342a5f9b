//! Flat key/value run configuration: a JSON object from a file, overridden
//! by `--set key=value` and `--key value` pairs. Every key must be read by
//! the command, so misspelled or irrelevant keys are rejected.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use serde_json::Value;

use crate::error::{Error, Result};

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

/// Parsed key/value pairs with a record of the keys that were read.
#[derive(Debug, Default)]
pub struct Config {
    entries: BTreeMap<String, Value>,
    used: RefCell<BTreeSet<String>>,
}

/// Config plus the output destinations taken from the command line.
#[derive(Debug, Default)]
pub struct RunArgs {
    pub config: Config,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

fn flatten(prefix: &str, v: &Value, out: &mut BTreeMap<String, Value>) {
    match v {
        Value::Object(o) => {
            for (k, v) in o {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        _ => {
            out.insert(prefix.to_string(), v.clone());
        }
    }
}

/// A command-line value: JSON when it parses, a string otherwise.
fn literal(s: &str) -> Value {
    serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.to_string()))
}

impl RunArgs {
    /// Reads `--config FILE`, `--set k=v`, `--out FILE`, `--csv FILE` and
    /// `--key value` from the arguments after the subcommand.
    pub fn parse(args: &[String]) -> Result<Self> {
        let mut file = None;
        let mut overrides = Vec::new();
        let mut run = RunArgs::default();
        let mut it = args.iter();
        while let Some(a) = it.next() {
            let Some(flag) = a.strip_prefix("--") else {
                return config_err(format!("unexpected argument `{a}`; options take the form --key value"));
            };
            let (name, inline) = match flag.split_once('=') {
                Some((n, v)) if n != "set" => (n, Some(v.to_string())),
                _ => (flag, None),
            };
            let mut value = || -> Result<String> {
                match inline.clone() {
                    Some(v) => Ok(v),
                    None => it.next().cloned().ok_or_else(|| Error::Config(format!("--{name} needs a value"))),
                }
            };
            match name {
                "config" => file = Some(PathBuf::from(value()?)),
                "out" => run.out = Some(PathBuf::from(value()?)),
                "csv" => run.csv = Some(PathBuf::from(value()?)),
                "set" => {
                    let kv = value()?;
                    let Some((k, v)) = kv.split_once('=') else {
                        return config_err(format!("--set expects key=value, got `{kv}`"));
                    };
                    overrides.push((k.trim().to_string(), literal(v.trim())));
                }
                "" => return config_err("empty option name"),
                key => overrides.push((key.to_string(), literal(&value()?))),
            }
        }
        let mut entries = BTreeMap::new();
        if let Some(path) = file {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let v: Value = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{} is not valid JSON: {e}", path.display())))?;
            if !v.is_object() {
                return config_err("the config file must hold a JSON object");
            }
            flatten("", &v, &mut entries);
        }
        for (k, v) in overrides {
            entries.insert(k, v);
        }
        run.config = Config { entries, used: RefCell::default() };
        Ok(run)
    }
}

impl Config {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, Value)>) -> Self {
        Self { entries: pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect(), used: RefCell::default() }
    }

    pub fn entries(&self) -> &BTreeMap<String, Value> {
        &self.entries
    }

    fn raw(&self, key: &str) -> Option<&Value> {
        let v = self.entries.get(key);
        if v.is_some() {
            self.used.borrow_mut().insert(key.to_string());
        }
        v
    }

    /// Keys under `prefix.`, marked as read, with the prefix removed.
    pub fn section(&self, prefix: &str) -> Vec<(String, Value)> {
        let p = format!("{prefix}.");
        let out: Vec<(String, Value)> = self
            .entries
            .iter()
            .filter_map(|(k, v)| k.strip_prefix(&p).map(|s| (s.to_string(), v.clone())))
            .collect();
        let mut used = self.used.borrow_mut();
        for (k, _) in &out {
            used.insert(format!("{p}{k}"));
        }
        out
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn num(&self, key: &str) -> Result<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Number(n)) => Ok(n.as_f64()),
            Some(Value::String(s)) => match s.trim().parse::<f64>() {
                Ok(x) => Ok(Some(x)),
                Err(_) => config_err(format!("`{key}` must be a number, got `{s}`")),
            },
            Some(v) => config_err(format!("`{key}` must be a number, got {v}")),
        }
    }

    pub fn num_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.num(key)?.unwrap_or(default))
    }

    pub fn require(&self, key: &str) -> Result<f64> {
        self.num(key)?.ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    pub fn count(&self, key: &str) -> Result<Option<usize>> {
        match self.num(key)? {
            None => Ok(None),
            Some(x) if x >= 0.0 && x.fract() == 0.0 && x <= 1e15 => Ok(Some(x as usize)),
            Some(x) => config_err(format!("`{key}` must be a nonnegative integer, got {x}")),
        }
    }

    pub fn seed(&self, key: &str) -> Result<Option<u64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Number(n)) if n.as_u64().is_some() => Ok(n.as_u64()),
            Some(Value::String(s)) if s.trim().parse::<u64>().is_ok() => Ok(s.trim().parse().ok()),
            Some(v) => config_err(format!("`{key}` must be a nonnegative integer, got {v}")),
        }
    }

    pub fn text(&self, key: &str) -> Result<Option<String>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(v) => config_err(format!("`{key}` must be a string, got {v}")),
        }
    }

    /// A list given as a JSON array, a comma-separated string or one number.
    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let bad = |v: &dyn std::fmt::Display| Error::Config(format!("`{key}` must be a list of numbers, got {v}"));
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Number(n)) => Ok(Some(vec![n.as_f64().unwrap_or(f64::NAN)])),
            Some(Value::Array(a)) => a.iter().map(|x| x.as_f64().ok_or_else(|| bad(x))).collect::<Result<_>>().map(Some),
            Some(Value::String(s)) => {
                s.split(',').map(|p| p.trim().parse::<f64>().map_err(|_| bad(s))).collect::<Result<_>>().map(Some)
            }
            Some(v) => Err(bad(v)),
        }
    }

    /// `a:b:step`, inclusive of b up to rounding.
    pub fn grid(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(s) = self.text(key)? else {
            return Ok(None);
        };
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Config(format!("`{key}` must look like a:b:step, got `{s}`")))?;
        let [a, b, h] = parts[..] else {
            return config_err(format!("`{key}` must look like a:b:step, got `{s}`"));
        };
        if !(h > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
            return config_err(format!("`{key}` needs a ≤ b and step > 0, got `{s}`"));
        }
        let n = ((b - a) / h + 1e-9).floor() as usize;
        if n > 1_000_000 {
            return config_err(format!("`{key}` has too many points"));
        }
        Ok(Some((0..=n).map(|i| a + i as f64 * h).collect()))
    }

    /// Fails on the first key no reader asked for.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self.entries.keys().filter(|k| !used.contains(*k)).map(String::as_str).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            config_err(format!("unknown key{} for this command: {}", if unknown.len() > 1 { "s" } else { "" }, unknown.join(", ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(a: &[&str]) -> Vec<String> {
        a.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn overrides_and_unused_keys() {
        let r = RunArgs::parse(&args(&["--spot", "1.5", "--set", "clock.kind=cir", "--grid=0.5:2:0.5", "--out", "x.json"])).unwrap();
        let c = &r.config;
        assert_eq!(c.num("spot").unwrap(), Some(1.5));
        assert_eq!(c.grid("grid").unwrap().unwrap(), vec![0.5, 1.0, 1.5, 2.0]);
        assert_eq!(r.out.as_deref(), Some(std::path::Path::new("x.json")));
        assert!(c.finish().is_err());
        assert_eq!(c.section("clock").len(), 1);
        assert!(c.finish().is_ok());
    }

    #[test]
    fn lists_and_bad_values() {
        let r = RunArgs::parse(&args(&["--strikes", "0.8,1,1.2", "--maturity", "abc"])).unwrap();
        assert_eq!(r.config.list("strikes").unwrap().unwrap(), vec![0.8, 1.0, 1.2]);
        assert!(matches!(r.config.num("maturity"), Err(Error::Config(_))));
        assert!(RunArgs::parse(&args(&["stray"])).is_err());
        assert!(RunArgs::parse(&args(&["--spot"])).is_err());
    }
}
