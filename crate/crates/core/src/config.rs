//! `key = value` configuration files and the preset < file < command-line
//! layering.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::{preset, Drive, ModelError, PhysicalParams};
use crate::sweep::{Spacing, SweepError, SweepSpec};

pub const DEFAULT_PRESET: &str = "gamma-globulin";

pub const KEYS: [&str; 12] = [
    "preset",
    "omega0",
    "omegaL",
    "rabi",
    "e0_field",
    "p12_debye",
    "dipole_ratio",
    "gamma0",
    "omega_min",
    "omega_max",
    "points",
    "spacing",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}` (known keys: {})", KEYS.join(", "))]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("invalid value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("{0}")]
    Conflict(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
}

/// One layer of settings. Unset fields fall through to the layer below.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigLayer {
    pub preset: Option<String>,
    pub omega0: Option<f64>,
    pub omega_l: Option<f64>,
    pub rabi: Option<f64>,
    pub e0_field: Option<f64>,
    pub p12_debye: Option<f64>,
    pub dipole_ratio: Option<f64>,
    pub gamma0: Option<f64>,
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub points: Option<usize>,
    pub spacing: Option<Spacing>,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_owned(),
        value: value.to_owned(),
    })
}

impl ConfigLayer {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut layer = Self::default();
        let mut seen = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: content.to_owned(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    text: content.to_owned(),
                });
            }
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_owned(),
                });
            }
            if seen.contains(&key) {
                return Err(ConfigError::Duplicate {
                    line,
                    key: key.to_owned(),
                });
            }
            seen.push(key);
            layer.set(key, value)?;
        }
        Ok(layer)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_owned(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "preset" => self.preset = Some(value.to_owned()),
            "omega0" => self.omega0 = Some(parse_value(key, value)?),
            "omegaL" => self.omega_l = Some(parse_value(key, value)?),
            "rabi" => self.rabi = Some(parse_value(key, value)?),
            "e0_field" => self.e0_field = Some(parse_value(key, value)?),
            "p12_debye" => self.p12_debye = Some(parse_value(key, value)?),
            "dipole_ratio" => self.dipole_ratio = Some(parse_value(key, value)?),
            "gamma0" => self.gamma0 = Some(parse_value(key, value)?),
            "omega_min" => self.omega_min = Some(parse_value(key, value)?),
            "omega_max" => self.omega_max = Some(parse_value(key, value)?),
            "points" => self.points = Some(parse_value(key, value)?),
            "spacing" => self.spacing = Some(value.parse()?),
            _ => unreachable!("key list checked by caller"),
        }
        Ok(())
    }

    /// Drive requested by this layer alone, if any.
    fn drive(&self, p12_fallback: Option<f64>) -> Result<Option<Drive>, ConfigError> {
        match (self.rabi, self.e0_field) {
            (Some(_), Some(_)) => Err(ConfigError::Conflict(
                "`rabi` and `e0_field` both set; give one drive specification".into(),
            )),
            (Some(omega), None) => Ok(Some(Drive::Rabi(omega))),
            (None, Some(e0)) => match self.p12_debye.or(p12_fallback) {
                Some(p12_debye) => Ok(Some(Drive::Field { e0, p12_debye })),
                None => Err(ConfigError::Conflict("`e0_field` needs `p12_debye`".into())),
            },
            (None, None) => Ok(None),
        }
    }
}

/// Settings after layering.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub preset: String,
    pub params: PhysicalParams,
    pub sweep: SweepSpec,
}

/// Layer `cli` over `file` over the preset. The sweep spec is not validated
/// here so commands that do not sweep ignore bad sweep keys.
pub fn resolve(file: Option<&ConfigLayer>, cli: &ConfigLayer) -> Result<Resolved, ConfigError> {
    let empty = ConfigLayer::default();
    let file = file.unwrap_or(&empty);
    let pick = |f: fn(&ConfigLayer) -> Option<f64>| f(cli).or(f(file));

    let name = cli
        .preset
        .clone()
        .or_else(|| file.preset.clone())
        .unwrap_or_else(|| DEFAULT_PRESET.to_owned());
    let mut params = preset(&name)?;
    if let Some(v) = pick(|l| l.omega0) {
        params.omega0 = v;
    }
    if let Some(v) = pick(|l| l.omega_l) {
        params.omega_l = v;
    }
    if let Some(v) = pick(|l| l.dipole_ratio) {
        params.dipole_ratio = v;
    }
    if let Some(v) = pick(|l| l.gamma0) {
        params.gamma0 = v;
    }
    if let Some(d) = file.drive(None)? {
        params.drive = d;
    }
    if let Some(d) = cli.drive(file.p12_debye)? {
        params.drive = d;
    }

    let mut sweep = SweepSpec::new(params);
    if let Some(v) = pick(|l| l.omega_min) {
        sweep.omega_min = v;
    }
    if let Some(v) = pick(|l| l.omega_max) {
        sweep.omega_max = v;
    }
    if let Some(v) = cli.points.or(file.points) {
        sweep.points = v;
    }
    if let Some(v) = cli.spacing.or(file.spacing) {
        sweep.spacing = v;
    }
    Ok(Resolved {
        preset: name,
        params,
        sweep,
    })
}
