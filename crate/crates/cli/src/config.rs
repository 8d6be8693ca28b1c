//! Flat `section.key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Exactly one of the
//! model sections `exponential`, `qm` or `qft` must be present. Lists are
//! comma-separated; `inf` is accepted where an unbounded value makes sense.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: String,
    pub reason: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}, field `{}`: {}", self.field, self.reason),
            None => write!(f, "field `{}`: {}", self.field, self.reason),
        }
    }
}

fn fail<T>(line: Option<usize>, field: &str, reason: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        line,
        field: field.to_string(),
        reason: reason.into(),
    })
}

const KEYS: &[&str] = &[
    "exponential.width",
    "exponential.bare_mass",
    "qm.bare_mass",
    "qm.cutoff",
    "qm.coupling",
    "qm.window_center",
    "qft.bare_mass",
    "qft.product_mass",
    "qft.coupling",
    "qft.cutoff",
    "detector.lambda",
    "detector.center",
    "schedule.tau",
    "schedule.n",
    "schedule.t_total",
    "schedule.taus",
    "grid.values",
    "grid.start",
    "grid.stop",
    "grid.count",
    "numerics.abs_tol",
    "numerics.rel_tol",
    "numerics.max_subdivisions",
    "numerics.k_max",
    "numerics.n_points",
    "numerics.trials",
    "numerics.seed",
    "output.dir",
];

/// Decay model with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelConfig {
    Exponential {
        width: f64,
        bare_mass: f64,
    },
    Qm {
        bare_mass: f64,
        cutoff: f64,
        coupling: f64,
        window_center: f64,
    },
    Qft {
        bare_mass: f64,
        product_mass: f64,
        coupling: f64,
        cutoff: f64,
    },
}

impl ModelConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Exponential { .. } => "exponential",
            Self::Qm { .. } => "qm",
            Self::Qft { .. } => "qft",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub lambda: f64,
    pub center: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScheduleConfig {
    pub tau: Option<f64>,
    pub n: Option<usize>,
    pub t_total: Option<f64>,
    pub taus: Vec<f64>,
}

/// Parameters that define the physics of a run; emitted in output headers.
#[derive(Debug, Clone, PartialEq)]
pub struct Physics {
    pub model: ModelConfig,
    pub detector: Option<DetectorConfig>,
    pub schedule: Option<ScheduleConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericsConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub k_max: Option<f64>,
    pub n_points: usize,
    pub trials: u64,
    pub seed: u64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 20_000,
            k_max: None,
            n_points: 1 << 16,
            trials: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub physics: Physics,
    /// Evaluation points (times or masses), strictly increasing.
    pub grid: Option<Vec<f64>>,
    pub numerics: NumericsConfig,
    pub output_dir: Option<PathBuf>,
}

/// Shortest form that still has 17 significant digits and parses back
/// to the identical `f64`.
pub fn format_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

struct Raw {
    entries: BTreeMap<String, (Option<usize>, String)>,
}

impl Raw {
    fn parse(text: &str, from_header: bool) -> Result<Self, ConfigError> {
        let mut raw = Raw {
            entries: BTreeMap::new(),
        };
        raw.extend(text, from_header)?;
        Ok(raw)
    }

    fn extend(&mut self, text: &str, from_header: bool) -> Result<(), ConfigError> {
        let mut seen = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let number = Some(idx + 1);
            let body = if from_header {
                match line.strip_prefix('#') {
                    Some(rest) => rest.trim(),
                    None => continue,
                }
            } else {
                line.trim()
            };
            if body.is_empty() || (!from_header && body.starts_with('#')) {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                if from_header {
                    continue;
                }
                return fail(number, body, "expected `key = value`");
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                if from_header {
                    continue;
                }
                return fail(number, key, "unknown key");
            }
            if let Some(first) = seen.insert(key.to_string(), idx + 1) {
                return fail(
                    number,
                    key,
                    format!("duplicate key, first set on line {first}"),
                );
            }
            self.entries
                .insert(key.to_string(), (number, value.to_string()));
        }
        Ok(())
    }

    fn has_section(&self, section: &str) -> bool {
        self.entries
            .keys()
            .any(|k| k.split('.').next() == Some(section))
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).and_then(|(l, _)| *l)
    }

    fn text(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    fn number(&self, key: &str, text: &str) -> Result<f64, ConfigError> {
        let value = match text {
            "inf" | "+inf" => f64::INFINITY,
            other => other
                .parse::<f64>()
                .or_else(|_| fail(self.line(key), key, format!("`{other}` is not a number")))?,
        };
        if value.is_nan() {
            return fail(self.line(key), key, "NaN is not allowed");
        }
        Ok(value)
    }

    fn real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.text(key).map(|t| self.number(key, t)).transpose()
    }

    fn finite(&self, key: &str, default: Option<f64>) -> Result<f64, ConfigError> {
        match self.real(key)?.or(default) {
            Some(v) if v.is_finite() => Ok(v),
            Some(_) => fail(self.line(key), key, "must be finite"),
            None => fail(None, key, "missing required key"),
        }
    }

    fn positive(&self, key: &str, default: Option<f64>) -> Result<f64, ConfigError> {
        let v = self.finite(key, default)?;
        if v > 0.0 {
            Ok(v)
        } else {
            fail(self.line(key), key, "must be positive")
        }
    }

    fn non_negative(&self, key: &str, default: Option<f64>) -> Result<f64, ConfigError> {
        let v = self.finite(key, default)?;
        if v >= 0.0 {
            Ok(v)
        } else {
            fail(self.line(key), key, "must be non-negative")
        }
    }

    fn integer<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.text(key)
            .map(|t| {
                t.parse::<T>().or_else(|_| {
                    fail(
                        self.line(key),
                        key,
                        format!("`{t}` is not a non-negative integer"),
                    )
                })
            })
            .transpose()
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(text) = self.text(key) else {
            return Ok(None);
        };
        let values = text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| self.number(key, s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Some(values))
    }

    fn model(&self) -> Result<ModelConfig, ConfigError> {
        let present: Vec<&str> = ["exponential", "qm", "qft"]
            .into_iter()
            .filter(|s| self.has_section(s))
            .collect();
        match present.as_slice() {
            ["exponential"] => Ok(ModelConfig::Exponential {
                width: self.positive("exponential.width", None)?,
                bare_mass: self.finite("exponential.bare_mass", Some(0.0))?,
            }),
            ["qm"] => Ok(ModelConfig::Qm {
                bare_mass: self.finite("qm.bare_mass", Some(0.0))?,
                cutoff: self.positive("qm.cutoff", None)?,
                coupling: self.positive("qm.coupling", None)?,
                window_center: self.finite("qm.window_center", Some(0.0))?,
            }),
            ["qft"] => Ok(ModelConfig::Qft {
                bare_mass: self.positive("qft.bare_mass", None)?,
                product_mass: self.non_negative("qft.product_mass", None)?,
                coupling: self.positive("qft.coupling", None)?,
                cutoff: self.positive("qft.cutoff", None)?,
            }),
            [] => fail(
                None,
                "model",
                "one of the sections exponential, qm, qft is required",
            ),
            many => fail(
                None,
                "model",
                format!(
                    "exactly one model section allowed, found {}",
                    many.join(", ")
                ),
            ),
        }
    }

    fn detector(&self) -> Result<Option<DetectorConfig>, ConfigError> {
        if !self.has_section("detector") {
            return Ok(None);
        }
        let lambda = match self.real("detector.lambda")? {
            Some(v) if v >= 0.0 => v,
            Some(_) => {
                return fail(
                    self.line("detector.lambda"),
                    "detector.lambda",
                    "must be non-negative",
                )
            }
            None => return fail(None, "detector.lambda", "missing required key"),
        };
        Ok(Some(DetectorConfig {
            lambda,
            center: self.finite("detector.center", Some(0.0))?,
        }))
    }

    fn schedule(&self) -> Result<Option<ScheduleConfig>, ConfigError> {
        if !self.has_section("schedule") {
            return Ok(None);
        }
        let tau = self.real("schedule.tau")?;
        if tau.is_some() {
            self.positive("schedule.tau", None)?;
        }
        let t_total = self.real("schedule.t_total")?;
        if t_total.is_some() {
            self.positive("schedule.t_total", None)?;
        }
        let n = self.integer::<usize>("schedule.n")?;
        if n == Some(0) {
            return fail(self.line("schedule.n"), "schedule.n", "must be at least 1");
        }
        let taus = self.list("schedule.taus")?.unwrap_or_default();
        if taus.iter().any(|&t| !(t.is_finite() && t > 0.0)) {
            return fail(
                self.line("schedule.taus"),
                "schedule.taus",
                "entries must be positive and finite",
            );
        }
        if taus.windows(2).any(|w| w[1] <= w[0]) {
            return fail(
                self.line("schedule.taus"),
                "schedule.taus",
                "entries must be strictly increasing",
            );
        }
        Ok(Some(ScheduleConfig {
            tau,
            n,
            t_total,
            taus,
        }))
    }

    fn grid(&self) -> Result<Option<Vec<f64>>, ConfigError> {
        let line = self.line("grid.values").or(self.line("grid.start"));
        let values = if let Some(values) = self.list("grid.values")? {
            if self.has_section("grid")
                && self
                    .entries
                    .keys()
                    .any(|k| k.starts_with("grid.") && k != "grid.values")
            {
                return fail(
                    line,
                    "grid",
                    "use either grid.values or grid.start/stop/count",
                );
            }
            values
        } else if self.has_section("grid") {
            let start = self.finite("grid.start", None)?;
            let stop = self.finite("grid.stop", None)?;
            let count = self
                .integer::<usize>("grid.count")?
                .ok_or_else(|| ConfigError {
                    line: None,
                    field: "grid.count".into(),
                    reason: "missing required key".into(),
                })?;
            match count {
                0 => Vec::new(),
                1 => vec![start],
                _ => (0..count)
                    .map(|j| start + (stop - start) * j as f64 / (count - 1) as f64)
                    .collect(),
            }
        } else {
            return Ok(None);
        };
        if values.iter().any(|v| !v.is_finite()) {
            return fail(line, "grid", "entries must be finite");
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return fail(line, "grid", "entries must be strictly increasing");
        }
        Ok(Some(values))
    }

    fn numerics(&self) -> Result<NumericsConfig, ConfigError> {
        let d = NumericsConfig::default();
        let k_max = self.real("numerics.k_max")?;
        if k_max.is_some() {
            self.positive("numerics.k_max", None)?;
        }
        let n_points = self
            .integer::<usize>("numerics.n_points")?
            .unwrap_or(d.n_points);
        if n_points < 2 {
            return fail(
                self.line("numerics.n_points"),
                "numerics.n_points",
                "must be at least 2",
            );
        }
        Ok(NumericsConfig {
            abs_tol: self.positive("numerics.abs_tol", Some(d.abs_tol))?,
            rel_tol: self.positive("numerics.rel_tol", Some(d.rel_tol))?,
            max_subdivisions: self
                .integer::<usize>("numerics.max_subdivisions")?
                .unwrap_or(d.max_subdivisions),
            k_max,
            n_points,
            trials: self.integer::<u64>("numerics.trials")?.unwrap_or(d.trials),
            seed: self.integer::<u64>("numerics.seed")?.unwrap_or(d.seed),
        })
    }

    fn physics(&self) -> Result<Physics, ConfigError> {
        Ok(Physics {
            model: self.model()?,
            detector: self.detector()?,
            schedule: self.schedule()?,
        })
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(&Raw::parse(text, false)?)
    }

    /// Parses `overrides` on top of `base`; keys in `overrides` win.
    pub fn parse_with_base(base: &str, overrides: &str) -> Result<Self, ConfigError> {
        let mut raw = Raw::parse(base, false)?;
        let top = Raw::parse(overrides, false)?;
        // a model section in the overrides replaces the base model entirely
        for section in ["exponential", "qm", "qft"] {
            if top.has_section(section) {
                raw.entries.retain(|k, _| {
                    !k.starts_with("exponential.")
                        && !k.starts_with("qm.")
                        && !k.starts_with("qft.")
                });
                break;
            }
        }
        raw.entries.extend(top.entries);
        Self::from_raw(&raw)
    }

    fn from_raw(raw: &Raw) -> Result<Self, ConfigError> {
        Ok(Self {
            physics: raw.physics()?,
            grid: raw.grid()?,
            numerics: raw.numerics()?,
            output_dir: raw.text("output.dir").map(PathBuf::from),
        })
    }
}

impl Physics {
    /// `key = value` lines that parse back to `self`.
    pub fn to_lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut put = |k: &str, v: String| out.push(format!("{k} = {v}"));
        match self.model {
            ModelConfig::Exponential { width, bare_mass } => {
                put("exponential.width", format_f64(width));
                put("exponential.bare_mass", format_f64(bare_mass));
            }
            ModelConfig::Qm {
                bare_mass,
                cutoff,
                coupling,
                window_center,
            } => {
                put("qm.bare_mass", format_f64(bare_mass));
                put("qm.cutoff", format_f64(cutoff));
                put("qm.coupling", format_f64(coupling));
                put("qm.window_center", format_f64(window_center));
            }
            ModelConfig::Qft {
                bare_mass,
                product_mass,
                coupling,
                cutoff,
            } => {
                put("qft.bare_mass", format_f64(bare_mass));
                put("qft.product_mass", format_f64(product_mass));
                put("qft.coupling", format_f64(coupling));
                put("qft.cutoff", format_f64(cutoff));
            }
        }
        if let Some(d) = self.detector {
            put("detector.lambda", format_f64(d.lambda));
            put("detector.center", format_f64(d.center));
        }
        if let Some(s) = &self.schedule {
            if let Some(tau) = s.tau {
                put("schedule.tau", format_f64(tau));
            }
            if let Some(n) = s.n {
                put("schedule.n", n.to_string());
            }
            if let Some(t) = s.t_total {
                put("schedule.t_total", format_f64(t));
            }
            if !s.taus.is_empty() {
                let list: Vec<String> = s.taus.iter().map(|&t| format_f64(t)).collect();
                put("schedule.taus", list.join(", "));
            }
        }
        out
    }

    /// Recovers the physics section from the `#` header of an emitted file.
    pub fn from_header(text: &str) -> Result<Self, ConfigError> {
        Raw::parse(text, true)?.physics()
    }
}
