//! Run configuration: a flat `section.key = value` text file.
//!
//! ```text
//! # comments start with '#'
//! run.seed = 7
//! env.d_s = 10.0
//! ppo.learning_rate = 1e-4
//! baseline.kind = "gap"
//! ```
//!
//! Keys not listed fall back to their defaults. Unknown keys, duplicate keys and
//! ill-typed values are rejected with the offending line.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineConfig;
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::ppo::PpoConfig;
use crate::traffic_sim::{IdmParams, RoadConfig, TrafficGenConfig, WorldConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Integration step (s).
    pub dt: f64,
    /// Ego lateral speed during a maneuver (m/s).
    pub lateral_speed: f64,
    pub vehicle_length: f64,
    pub vehicle_width: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let w = WorldConfig::default();
        Self {
            dt: w.dt,
            lateral_speed: w.lateral_speed,
            vehicle_length: w.vehicle_length,
            vehicle_width: w.vehicle_width,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Master seed every random stream is derived from.
    pub seed: u64,
    /// Iterations between periodic checkpoints; 0 keeps only the final one.
    pub checkpoint_every: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 7,
            checkpoint_every: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub road: RoadConfig,
    pub idm: IdmParams,
    pub traffic: TrafficGenConfig,
    pub sim: SimConfig,
    pub env: EnvConfig,
    pub ppo: PpoConfig,
    pub baseline: BaselineConfig,
    pub run: RunSection,
}

impl RunConfig {
    pub fn world(&self) -> WorldConfig {
        WorldConfig {
            road: self.road,
            idm: self.idm,
            traffic: self.traffic,
            dt: self.sim.dt,
            lateral_speed: self.sim.lateral_speed,
            vehicle_length: self.sim.vehicle_length,
            vehicle_width: self.sim.vehicle_width,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.world().validate()?;
        self.env.validate()?;
        self.ppo.validate()?;
        self.baseline.validate()
    }

    /// Parses and validates config text. Errors carry the line of the offending key
    /// when it appears in the text.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(describe_toml_error(text, &e)))?;
        cfg.validate().map_err(|e| match e {
            Error::Config(msg) => Error::Config(match key_line(text, &msg) {
                Some(line) => format!("line {line}: {msg}"),
                None => msg,
            }),
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Every setting as `section.key = value`, one per line, in a form `parse`
    /// reads back to an identical config.
    pub fn to_flat_string(&self) -> String {
        let table = toml::Table::try_from(self).expect("config serializes to a table");
        let mut out = String::new();
        for (section, body) in &table {
            let toml::Value::Table(fields) = body else {
                continue;
            };
            for (key, value) in fields {
                out.push_str(&format!("{section}.{key} = {}\n", render_value(value)));
            }
        }
        out
    }
}

fn render_value(value: &toml::Value) -> String {
    match value {
        // Debug formatting of f64 is the shortest round-trip form and always keeps a
        // decimal point or exponent, so the value stays a float.
        toml::Value::Float(f) => format!("{f:?}"),
        other => other.to_string(),
    }
}

fn describe_toml_error(text: &str, err: &toml::de::Error) -> String {
    let detail = err.message().trim().to_string();
    match err.span() {
        Some(span) => {
            let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
            format!("line {line}: {detail}")
        }
        None => detail,
    }
}

/// Line number of the first `section.key` named in `msg` that is assigned in `text`.
fn key_line(text: &str, msg: &str) -> Option<usize> {
    let keys = msg
        .split(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '.'))
        .filter(|w| w.contains('.') && w.chars().next().is_some_and(|c| c.is_ascii_alphabetic()));
    for key in keys {
        for (i, line) in text.lines().enumerate() {
            if let Some((lhs, _)) = line.split_once('=') {
                if lhs.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}
