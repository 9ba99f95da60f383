//! Line-based run configuration: `[section]` headers and `key = value`
//! lines. Every key has a default; unknown sections and keys are errors.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

/// `(section, key, default)` in echo order.
const SCHEMA: &[(&str, &str, &str)] = &[
    ("meteo", "r", "0.580"),
    ("meteo", "a", "0.766"),
    ("meteo", "sigma", "2.27"),
    ("irradiance", "mode", "builtin"),
    ("irradiance", "latitude", "36.588"),
    ("irradiance", "tilt", "45"),
    ("irradiance", "azimuth", "0"),
    ("irradiance", "table", ""),
    ("influx", "eps_a", "0.001"),
    ("influx", "f0", "0.81"),
    ("influx", "f1", "1.9"),
    ("battery", "capacity", "1"),
    ("battery", "discharge_cap", "0.2"),
    ("penalty", "w1", "0.1"),
    ("penalty", "w2", "0.5"),
    ("target", "lambda", "0.05"),
    ("target", "schedule", ""),
    ("risk", "orlicz", "power"),
    ("risk", "power", "1.5"),
    ("risk", "mu", "1"),
    ("risk", "phi1", "1"),
    ("risk", "phi2", "0"),
    ("risk", "eta", "0.1"),
    ("grid", "nx", "300"),
    ("grid", "ny", "300"),
    ("grid", "dt", "0.0000277777777777777778"),
    ("grid", "t0", "0"),
    ("grid", "horizon", "365"),
    ("scheme", "gradient", "godunov"),
    ("scheme", "eps_guard", "1e-10"),
    ("scheme", "allow_unstable", "false"),
    ("output", "slices", ""),
    ("output", "probes", "0.5:0.5"),
    ("output", "full_history", "false"),
    ("fit", "cloud_csv", ""),
    ("fit", "init_r", "1"),
    ("fit", "init_a", "0.5"),
    ("fit", "init_sigma", "1.5"),
    ("fit", "n_bins", "20"),
    ("fit", "n_cells", "100"),
    ("fit", "max_iter", "500"),
    ("fit", "rel_tol", "1e-4"),
    ("cir", "a", "1"),
    ("cir", "r", "1"),
    ("cir", "sigma", "0.2"),
    ("cir", "p", "0.1"),
    ("cir", "eta_prime", "0.5"),
    ("cir", "horizon", "1"),
    ("cir", "x_max", "4"),
    ("cir", "nx", "400"),
    ("simulate", "n_paths", "10000"),
    ("simulate", "dt", "0.001"),
    ("simulate", "seed", "0"),
    ("simulate", "t_start", ""),
    ("simulate", "horizon", ""),
    ("simulate", "x0", "0.5"),
    ("simulate", "y0", "0.5"),
    ("simulate", "policy", "tabulated"),
    ("simulate", "constant_u", "0"),
    ("simulate", "distortion", "none"),
    ("simulate", "fields", ""),
    ("simulate", "record_every", "1"),
    ("simulate", "export_paths", "false"),
    ("simulate", "path_stride", "100"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Fully resolved configuration; values are kept as text so the echo
/// reproduces exactly what was read.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<(String, String), String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let values = SCHEMA
            .iter()
            .map(|(s, k, d)| ((s.to_string(), k.to_string()), d.to_string()))
            .collect();
        Self { values }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut section: Option<String> = None;
        let mut seen = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    return err(format!("line {line_no}: malformed section header '{line}'"));
                };
                let name = name.trim();
                if !SCHEMA.iter().any(|(s, _, _)| *s == name) {
                    return err(format!("line {line_no}: unknown section [{name}]"));
                }
                section = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {line_no}: expected 'key = value', got '{line}'"));
            };
            let key = key.trim();
            let Some(sec) = section.as_deref() else {
                return err(format!("line {line_no}: key '{key}' appears before any [section]"));
            };
            if !SCHEMA.iter().any(|(s, k, _)| *s == sec && *k == key) {
                return err(format!("line {line_no}: unknown key '{sec}.{key}'"));
            }
            if let Some(prev) = seen.insert((sec.to_string(), key.to_string()), line_no) {
                return err(format!("line {line_no}: key '{sec}.{key}' already set on line {prev}"));
            }
            let mut value = value.trim();
            if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
                value = &value[1..value.len() - 1];
            }
            cfg.values.insert((sec.to_string(), key.to_string()), value.to_string());
        }
        Ok(cfg)
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) {
        debug_assert!(SCHEMA.iter().any(|(s, k, _)| *s == section && *k == key));
        self.values.insert((section.to_string(), key.to_string()), value.into());
    }

    pub fn raw(&self, section: &str, key: &str) -> &str {
        self.values
            .get(&(section.to_string(), key.to_string()))
            .map(String::as_str)
            .unwrap_or_else(|| panic!("{section}.{key} is not a configuration key"))
    }

    pub fn f64(&self, section: &str, key: &str) -> Result<f64, ConfigError> {
        let v = self.raw(section, key);
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => err(format!("{section}.{key}: expected a finite number, got '{v}'")),
        }
    }

    /// `None` when the value is empty.
    pub fn opt_f64(&self, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
        if self.raw(section, key).is_empty() {
            Ok(None)
        } else {
            self.f64(section, key).map(Some)
        }
    }

    pub fn usize(&self, section: &str, key: &str) -> Result<usize, ConfigError> {
        let v = self.raw(section, key);
        v.parse::<usize>()
            .or_else(|_| err(format!("{section}.{key}: expected a nonnegative integer, got '{v}'")))
    }

    pub fn u64(&self, section: &str, key: &str) -> Result<u64, ConfigError> {
        let v = self.raw(section, key);
        v.parse::<u64>()
            .or_else(|_| err(format!("{section}.{key}: expected a nonnegative integer, got '{v}'")))
    }

    pub fn bool(&self, section: &str, key: &str) -> Result<bool, ConfigError> {
        match self.raw(section, key) {
            "true" => Ok(true),
            "false" => Ok(false),
            v => err(format!("{section}.{key}: expected true or false, got '{v}'")),
        }
    }

    /// One of `choices`.
    pub fn choice(&self, section: &str, key: &str, choices: &[&str]) -> Result<&str, ConfigError> {
        let v = self.raw(section, key);
        if choices.contains(&v) {
            Ok(v)
        } else {
            err(format!("{section}.{key}: expected one of {}, got '{v}'", choices.join(", ")))
        }
    }

    /// Comma-separated numbers; empty gives an empty list.
    pub fn f64_list(&self, section: &str, key: &str) -> Result<Vec<f64>, ConfigError> {
        parse_list(self.raw(section, key)).map_err(|bad| {
            ConfigError(format!("{section}.{key}: '{bad}' is not a number"))
        })
    }

    /// `a:b` pairs separated by `;`.
    pub fn pairs(&self, section: &str, key: &str) -> Result<Vec<(f64, f64)>, ConfigError> {
        let v = self.raw(section, key);
        v.split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|item| {
                let parsed = item
                    .split_once(':')
                    .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
                parsed.ok_or_else(|| ConfigError(format!("{section}.{key}: expected 'a:b', got '{item}'")))
            })
            .collect()
    }

    /// Resolved configuration in the input format.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut current = "";
        for (s, k, _) in SCHEMA {
            if *s != current {
                if !current.is_empty() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{s}]");
                current = s;
            }
            let _ = writeln!(out, "{k} = {}", self.raw(s, k));
        }
        out
    }
}

pub fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| s.to_string()))
        .collect()
}
