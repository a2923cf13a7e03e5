//! Flat `key = value` run configuration.
//!
//! One entry per line, `#` starts a comment, no sections. Every key has a
//! default except `kind` and `equation`.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use strainamp_core::initdata::InitKind;
use strainamp_core::{Equation, GridSpec, InitSpec, SimParams};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {message}")]
    Value {
        line: usize,
        key: String,
        message: String,
    },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, ConfigError>;

/// Every key a run configuration accepts, in emission order.
pub const KEYS: [&str; 25] = [
    "kind",
    "equation",
    "n",
    "box_length",
    "dealias_fraction",
    "nu",
    "t_end",
    "cfl",
    "dt_max",
    "dt_min",
    "output_every",
    "checkpoint_every",
    "tail_threshold",
    "residuals",
    "linear_only",
    "amplitude",
    "seed",
    "slope",
    "lambda",
    "q_amplitude",
    "q_max_mode",
    "center",
    "path",
    "output_path",
    "checkpoint_dir",
];

/// Keys a sweep may give as `start:step:end`.
pub const RANGE_KEYS: [&str; 2] = ["amplitude", "nu"];

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Parsed but uninterpreted entries.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    pub entries: Vec<Entry>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<Entry> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: body.to_string(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    text: body.to_string(),
                });
            }
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            if entries.iter().any(|e| e.key == key) {
                return Err(ConfigError::Duplicate {
                    line,
                    key: key.to_string(),
                });
            }
            entries.push(Entry {
                line,
                key: key.to_string(),
                value: value.to_string(),
            });
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    /// Replaces (or adds) the value of `key`.
    pub fn set(&mut self, key: &str, value: String) {
        match self.entries.iter_mut().find(|e| e.key == key) {
            Some(e) => e.value = value,
            None => self.entries.push(Entry {
                line: 0,
                key: key.to_string(),
                value,
            }),
        }
    }
}

fn value<T: FromStr>(e: &Entry) -> Result<T>
where
    T::Err: fmt::Display,
{
    e.value.parse().map_err(|err: T::Err| ConfigError::Value {
        line: e.line,
        key: e.key.clone(),
        message: err.to_string(),
    })
}

fn bad(e: &Entry, message: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        line: e.line,
        key: e.key.clone(),
        message: message.into(),
    }
}

fn parse_center(e: &Entry) -> Result<[f64; 3]> {
    let parts: Vec<&str> = e.value.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad(e, "expected three comma-separated numbers"));
    }
    let mut c = [0.0; 3];
    for (slot, p) in c.iter_mut().zip(parts) {
        *slot = p
            .parse()
            .map_err(|err: std::num::ParseFloatError| bad(e, err.to_string()))?;
    }
    Ok(c)
}

/// A fully specified run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub params: SimParams,
    pub init: InitSpec,
    /// Diagnostics destination; `None` writes to stdout.
    pub output_path: Option<PathBuf>,
    pub checkpoint_dir: PathBuf,
}

impl RunConfig {
    pub const DEFAULT_N: usize = 64;
    pub const DEFAULT_BOX: f64 = 16.0;
    pub const DEFAULT_CHECKPOINT_DIR: &'static str = "checkpoints";

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let kind_entry = raw.get("kind").ok_or(ConfigError::Missing("kind"))?;
        let kind = InitKind::parse(&kind_entry.value).ok_or_else(|| {
            let names: Vec<_> = InitKind::ALL.iter().map(|k| k.name()).collect();
            bad(kind_entry, format!("expected one of {}", names.join(", ")))
        })?;
        let eq_entry = raw
            .get("equation")
            .ok_or(ConfigError::Missing("equation"))?;
        let equation = Equation::parse(&eq_entry.value).ok_or_else(|| {
            let names: Vec<_> = Equation::ALL.iter().map(|e| e.name()).collect();
            bad(eq_entry, format!("expected one of {}", names.join(", ")))
        })?;

        let mut grid = GridSpec {
            n: Self::DEFAULT_N,
            box_length: Self::DEFAULT_BOX,
            dealias_fraction: GridSpec::DEFAULT_DEALIAS,
        };
        let mut params = SimParams::new(1.0, equation, 1.0);
        let mut init = InitSpec::new(kind);
        let mut output_path = None;
        let mut checkpoint_dir = PathBuf::from(Self::DEFAULT_CHECKPOINT_DIR);

        for e in &raw.entries {
            match e.key.as_str() {
                "kind" | "equation" => {}
                "n" => grid.n = value(e)?,
                "box_length" => grid.box_length = value(e)?,
                "dealias_fraction" => grid.dealias_fraction = value(e)?,
                "nu" => params.nu = value(e)?,
                "t_end" => params.t_end = value(e)?,
                "cfl" => params.cfl = value(e)?,
                "dt_max" => params.dt_max = value(e)?,
                "dt_min" => params.dt_min = value(e)?,
                "output_every" => params.output_every = value(e)?,
                "checkpoint_every" => params.checkpoint_every = value(e)?,
                "tail_threshold" => params.tail_threshold = value(e)?,
                "residuals" => params.residuals = value(e)?,
                "linear_only" => params.linear_only = value(e)?,
                "amplitude" => init.amplitude = value(e)?,
                "seed" => init.seed = value(e)?,
                "slope" => init.slope = value(e)?,
                "lambda" => init.lambda = value(e)?,
                "q_amplitude" => init.q_amplitude = value(e)?,
                "q_max_mode" => init.q_max_mode = value(e)?,
                "center" => init.center = parse_center(e)?,
                "path" => init.path = (!e.value.is_empty()).then(|| PathBuf::from(&e.value)),
                "output_path" => {
                    output_path =
                        (!e.value.is_empty() && e.value != "-").then(|| PathBuf::from(&e.value))
                }
                "checkpoint_dir" => checkpoint_dir = PathBuf::from(&e.value),
                other => unreachable!("key `{other}` passed the key check"),
            }
        }
        grid.validate()
            .map_err(|err| ConfigError::Invalid(err.to_string()))?;
        params
            .validate()
            .map_err(|err| ConfigError::Invalid(err.to_string()))?;
        init.validate()
            .map_err(|err| ConfigError::Invalid(err.to_string()))?;
        Ok(Self {
            grid,
            params,
            init,
            output_path,
            checkpoint_dir,
        })
    }

    /// Emits every key; parsing the result gives back `self`.
    pub fn to_config_string(&self) -> String {
        let (g, p, i) = (&self.grid, &self.params, &self.init);
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("kind", i.kind.name().to_string());
        put("equation", p.equation.name().to_string());
        put("n", g.n.to_string());
        put("box_length", g.box_length.to_string());
        put("dealias_fraction", g.dealias_fraction.to_string());
        put("nu", p.nu.to_string());
        put("t_end", p.t_end.to_string());
        put("cfl", p.cfl.to_string());
        put("dt_max", p.dt_max.to_string());
        put("dt_min", p.dt_min.to_string());
        put("output_every", p.output_every.to_string());
        put("checkpoint_every", p.checkpoint_every.to_string());
        put("tail_threshold", p.tail_threshold.to_string());
        put("residuals", p.residuals.to_string());
        put("linear_only", p.linear_only.to_string());
        put("amplitude", i.amplitude.to_string());
        put("seed", i.seed.to_string());
        put("slope", i.slope.to_string());
        put("lambda", i.lambda.to_string());
        put("q_amplitude", i.q_amplitude.to_string());
        put("q_max_mode", i.q_max_mode.to_string());
        put("center", i.center.map(|c| c.to_string()).join(", "));
        put(
            "path",
            i.path
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        put(
            "output_path",
            self.output_path
                .as_ref()
                .map_or("-".to_string(), |p| p.display().to_string()),
        );
        put("checkpoint_dir", self.checkpoint_dir.display().to_string());
        out
    }
}

/// Inclusive `start:step:end`.
pub fn parse_range(e: &Entry) -> Result<Vec<f64>> {
    let parts: Vec<&str> = e.value.split(':').map(str::trim).collect();
    if parts.len() == 1 {
        return Ok(vec![value(e)?]);
    }
    if parts.len() != 3 {
        return Err(bad(e, "expected a number or start:step:end"));
    }
    let num = |s: &str| -> Result<f64> {
        let v: f64 = s
            .parse()
            .map_err(|err: std::num::ParseFloatError| bad(e, err.to_string()))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad(e, "range bounds must be finite"))
        }
    };
    let (start, step, end) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
    if step.is_nan() || step <= 0.0 {
        return Err(bad(e, "range step must be positive"));
    }
    if end < start {
        return Err(bad(e, "range end precedes start"));
    }
    let span = (end - start) / step;
    if span > 10_000.0 {
        return Err(bad(e, "range has more than 10000 points"));
    }
    let count = (span + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// A base configuration plus the swept amplitudes and viscosities.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub base: RawConfig,
    pub amplitudes: Vec<f64>,
    pub nus: Vec<f64>,
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut base = RawConfig::parse(text)?;
        let range = |key: &str, default: f64| -> Result<Vec<f64>> {
            base.get(key).map_or(Ok(vec![default]), parse_range)
        };
        let amplitudes = range(
            "amplitude",
            InitSpec::new(InitKind::CollidingJets).amplitude,
        )?;
        let nus = range("nu", 1.0)?;
        // validates everything else with the first point substituted
        base.set("amplitude", amplitudes[0].to_string());
        base.set("nu", nus[0].to_string());
        RunConfig::from_raw(&base)?;
        Ok(Self {
            base,
            amplitudes,
            nus,
        })
    }

    /// One run configuration per `(m, ν)`, in lexicographic order.
    pub fn points(&self) -> Result<Vec<(f64, f64, RunConfig)>> {
        let mut out = Vec::with_capacity(self.amplitudes.len() * self.nus.len());
        for &m in &self.amplitudes {
            for &nu in &self.nus {
                let mut raw = self.base.clone();
                raw.set("amplitude", m.to_string());
                raw.set("nu", nu.to_string());
                out.push((m, nu, RunConfig::from_raw(&raw)?));
            }
        }
        Ok(out)
    }
}
