//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Unknown and repeated keys are errors. Values stay as text until a typed
//! getter asks for them, so the resolved map can be echoed verbatim.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{PsgeError, Result};
use crate::model::{MediumParams, SpaceTimeGrid};

/// Every accepted key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("epsilon", "diffusion coefficient ε > 0"),
    ("a", "damping coefficient > 0"),
    ("c", "wave speed > 0"),
    ("gamma", "constant bias in the source"),
    ("x_min", "left edge of the grid"),
    ("x_max", "right edge of the grid"),
    ("nx", "number of space samples"),
    ("t_max", "final time"),
    ("nt", "number of time samples"),
    ("k", "travelling-wave integration constant"),
    ("abs_tol", "quadrature absolute tolerance"),
    ("rel_tol", "quadrature relative tolerance"),
    ("max_subdivisions", "quadrature panel budget"),
    ("truncation_threshold", "integrand tail cutoff"),
    ("max_iters", "Picard iteration budget per window"),
    ("fix_tol", "Picard stopping tolerance"),
    ("window_len", "Picard time-window length"),
    ("damping", "Picard relaxation factor"),
    ("initial", "constant first Picard iterate"),
    ("k_exp", "order exponent k in (0, 1)"),
    ("epsilon_list", "comma-separated descending ε sweep"),
    ("horizon_cap", "cap on the checked window"),
    ("theta", "implicitness of the ε u_xxt term"),
    ("seed", "random seed for sampled checks"),
    ("samples", "number of random samples in checks"),
];

pub fn is_known_key(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigMap {
    values: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = ConfigMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                PsgeError::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                ))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(PsgeError::Config(format!(
                    "line {}: empty key or value",
                    lineno + 1
                )));
            }
            if !is_known_key(key) {
                return Err(PsgeError::Config(format!(
                    "line {}: unknown key `{key}`",
                    lineno + 1
                )));
            }
            if map
                .values
                .insert(key.to_string(), value.to_string())
                .is_some()
            {
                return Err(PsgeError::Config(format!(
                    "line {}: duplicate key `{key}`",
                    lineno + 1
                )));
            }
        }
        Ok(map)
    }

    /// Sets or replaces a value.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !is_known_key(key) {
            return Err(PsgeError::Config(format!("unknown key `{key}`")));
        }
        self.values.insert(key.to_string(), value.into());
        Ok(())
    }

    /// Sets a value only if the key is absent.
    pub fn set_default(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !self.contains(key) {
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    fn parse_value<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| PsgeError::Config(format!("key `{key}`: expected {what}, got `{v}`"))),
        }
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.parse_value(key, "a number")
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.parse_value(key, "a nonnegative integer")
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.parse_value(key, "a nonnegative integer")
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| missing(key))
    }

    pub fn require_usize(&self, key: &str) -> Result<usize> {
        self.usize(key)?.ok_or_else(|| missing(key))
    }

    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| PsgeError::Config(format!("key `{key}`: `{s}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    /// Medium parameters from `epsilon`, `a`, `c` (required) and `gamma` (default 0).
    pub fn medium(&self) -> Result<MediumParams> {
        MediumParams::new(
            self.require_f64("epsilon")?,
            self.require_f64("a")?,
            self.require_f64("c")?,
            self.f64("gamma")?.unwrap_or(0.0),
        )
    }

    pub fn grid(&self) -> Result<SpaceTimeGrid> {
        SpaceTimeGrid::new(
            self.require_f64("x_min")?,
            self.require_f64("x_max")?,
            self.require_usize("nx")?,
            self.require_f64("t_max")?,
            self.require_usize("nt")?,
        )
    }
}

fn missing(key: &str) -> PsgeError {
    PsgeError::Config(format!("missing required key `{key}`"))
}

impl fmt::Display for ConfigMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.values {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

impl From<&MediumParams> for ConfigMap {
    fn from(p: &MediumParams) -> Self {
        let mut m = ConfigMap::new();
        for (k, v) in [
            ("epsilon", p.epsilon),
            ("a", p.a),
            ("c", p.c),
            ("gamma", p.gamma),
        ] {
            m.values.insert(k.into(), format!("{v:e}"));
        }
        m
    }
}

impl ConfigMap {
    /// Adds the grid keys.
    pub fn with_grid(mut self, g: &SpaceTimeGrid) -> Self {
        for (k, v) in [("x_min", g.x_min), ("x_max", g.x_max), ("t_max", g.t_max)] {
            self.values.insert(k.into(), format!("{v:e}"));
        }
        self.values.insert("nx".into(), g.nx.to_string());
        self.values.insert("nt".into(), g.nt.to_string());
        self
    }
}
