//! Experiment parameters: flags layered over an optional `key = value` file,
//! with every value a command reads recorded for the manifest.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::str::FromStr;

use serde_json::Value;

use crate::Failure;

/// Keys accepted in a config file (and their flag spellings).
pub const KNOWN_KEYS: &[&str] = &[
    "M",
    "N",
    "replicates",
    "seed",
    "rho",
    "beta_tilde",
    "c1",
    "j0",
    "policy",
    "threshold",
    "out",
    "threads",
    "format",
    "input",
    "t",
    "times",
    "grid",
    "steps",
    "resolution",
    "form",
    "delta",
    "moment",
    "radii",
    "stride",
    "stages",
    "kind",
    "pairs",
    "mode",
    "phi_mode",
    "level",
    "leak",
    "cap_factor",
];

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, Failure> {
    let mut map = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Failure::Input(format!("config line {}: expected key = value", no + 1)));
        };
        let key = k.trim().replace('-', "_");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Failure::Input(format!("config line {}: unknown key '{}'", no + 1, k.trim())));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

#[derive(Debug, Default)]
pub struct Params {
    raw: BTreeMap<String, String>,
    resolved: RefCell<BTreeMap<String, Value>>,
}

impl Params {
    pub fn new(raw: BTreeMap<String, String>) -> Self {
        Self {
            raw,
            resolved: RefCell::new(BTreeMap::new()),
        }
    }

    pub fn resolved(&self) -> BTreeMap<String, Value> {
        self.resolved.borrow().clone()
    }

    fn record(&self, key: &str, v: Value) {
        self.resolved.borrow_mut().insert(key.to_string(), v);
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, Failure> {
        match self.raw.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| Failure::Input(format!("cannot parse {key} = '{s}'"))),
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize, Failure> {
        // Accept 1e7-style values for sizes.
        let v = match self.raw.get(key) {
            None => default,
            Some(s) => match s.parse::<usize>() {
                Ok(v) => v,
                Err(_) => {
                    let f: f64 = s
                        .parse()
                        .map_err(|_| Failure::Input(format!("cannot parse {key} = '{s}'")))?;
                    if f < 0.0 || f.fract() != 0.0 || f > 1e15 {
                        return Err(Failure::Input(format!("{key} = '{s}' is not a count")));
                    }
                    f as usize
                }
            },
        };
        self.record(key, v.into());
        Ok(v)
    }

    pub fn u64(&self, key: &str, default: u64) -> Result<u64, Failure> {
        let v = self.parse(key)?.unwrap_or(default);
        self.record(key, v.into());
        Ok(v)
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64, Failure> {
        let v: f64 = self.parse(key)?.unwrap_or(default);
        if !v.is_finite() {
            return Err(Failure::Input(format!("{key} must be finite")));
        }
        self.record(key, v.into());
        Ok(v)
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, Failure> {
        let v: Option<f64> = self.parse(key)?;
        if let Some(x) = v {
            if !x.is_finite() {
                return Err(Failure::Input(format!("{key} must be finite")));
            }
            self.record(key, x.into());
        }
        Ok(v)
    }

    pub fn string(&self, key: &str, default: &str) -> String {
        let v = self.raw.get(key).cloned().unwrap_or_else(|| default.to_string());
        self.record(key, v.clone().into());
        v
    }

    pub fn opt_string(&self, key: &str) -> Option<String> {
        let v = self.raw.get(key).cloned();
        if let Some(s) = &v {
            self.record(key, s.clone().into());
        }
        v
    }

    /// Comma-separated list.
    pub fn list<T: FromStr + Clone + Into<Value>>(&self, key: &str, default: &[T]) -> Result<Vec<T>, Failure> {
        let v = match self.raw.get(key) {
            None => default.to_vec(),
            Some(s) => s
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse()
                        .map_err(|_| Failure::Input(format!("cannot parse '{x}' in {key}")))
                })
                .collect::<Result<Vec<T>, _>>()?,
        };
        if v.is_empty() {
            return Err(Failure::Input(format!("{key} is empty")));
        }
        self.record(key, Value::Array(v.iter().cloned().map(Into::into).collect()));
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_parsing() {
        let m = parse_config_file("# header\nM = 50\nbeta-tilde=1.5 # inline\n\n").unwrap();
        assert_eq!(m["M"], "50");
        assert_eq!(m["beta_tilde"], "1.5");
        assert!(parse_config_file("bogus = 1").is_err());
        assert!(parse_config_file("M 50").is_err());
    }

    #[test]
    fn getters_record_and_validate() {
        let raw = BTreeMap::from([("M".to_string(), "1e7".to_string()), ("rho".to_string(), "x".to_string())]);
        let p = Params::new(raw);
        assert_eq!(p.usize("M", 3).unwrap(), 10_000_000);
        assert!(p.f64("rho", 0.1).is_err());
        assert_eq!(p.u64("seed", 7).unwrap(), 7);
        assert_eq!(p.list::<usize>("grid", &[1, 2]).unwrap(), vec![1, 2]);
        let r = p.resolved();
        assert_eq!(r["M"], Value::from(10_000_000usize));
        assert_eq!(r["seed"], Value::from(7u64));
    }
}
