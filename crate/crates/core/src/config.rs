//! Flat `key = value` experiment files.
//!
//! ```text
//! # ergodic run
//! a = 1
//! b = 1
//! sigma = 1
//! r0 = 1
//! dt = 0.01
//! replications = 100
//! checkpoints = 10, 50, 100, 150, 200
//! base_seed = 20240501
//! estimators = mle, alt
//! out = ergodic.csv
//! ```
//!
//! `horizon` defaults to the last checkpoint, `scheme` to `euler`,
//! `estimators` to `mle, alt` and `inv_floor` to `1e-8`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::error::Error as ModelError;
use crate::estimators::EstimatorKind;
use crate::model::ModelParams;
use crate::montecarlo::ExperimentConfig;
use crate::simulate::{Scheme, SimConfig};
use crate::statistics::DEFAULT_INV_FLOOR;

pub const KEYS: [&str; 13] = [
    "a",
    "b",
    "sigma",
    "r0",
    "horizon",
    "dt",
    "scheme",
    "replications",
    "checkpoints",
    "base_seed",
    "estimators",
    "inv_floor",
    "out",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given more than once")]
    DuplicateKey(String),
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("key `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub out: PathBuf,
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, message: message.into() }
}

struct Entries(BTreeMap<&'static str, String>);

impl Entries {
    fn raw(&self, key: &'static str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn required<T: FromStr>(&self, key: &'static str) -> Result<T, ConfigError> {
        let raw = self.raw(key).ok_or(ConfigError::MissingKey(key))?;
        raw.parse().map_err(|_| invalid(key, format!("cannot parse `{raw}`")))
    }

    fn optional<T: FromStr>(&self, key: &'static str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| invalid(key, format!("cannot parse `{raw}`"))),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            let key = key.trim();
            let known = KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| ConfigError::UnknownKey(key.to_string()))?;
            if map.insert(*known, value.trim().to_string()).is_some() {
                return Err(ConfigError::DuplicateKey(key.to_string()));
            }
        }
        let e = Entries(map);

        let a: f64 = e.required("a")?;
        let b: f64 = e.required("b")?;
        let sigma: f64 = e.required("sigma")?;
        let r0: f64 = e.required("r0")?;
        let params = ModelParams::new(a, b, sigma, r0).map_err(|err| match err {
            ModelError::NonPositiveParameter(name) | ModelError::NonFiniteParameter(name) => {
                invalid(name, err.to_string())
            }
            other => invalid("a", other.to_string()),
        })?;

        let dt: f64 = e.required("dt")?;
        let checkpoints = e
            .raw("checkpoints")
            .ok_or(ConfigError::MissingKey("checkpoints"))?
            .split(',')
            .map(|s| {
                let s = s.trim();
                s.parse::<f64>().map_err(|_| invalid("checkpoints", format!("cannot parse `{s}`")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let last = checkpoints
            .last()
            .copied()
            .ok_or_else(|| invalid("checkpoints", "empty list"))?;
        let horizon = e.optional::<f64>("horizon")?.unwrap_or(last);
        let scheme = match e.raw("scheme") {
            None => Scheme::EulerFullTruncation,
            Some(raw) => raw.parse().map_err(|m: String| invalid("scheme", m))?,
        };
        let sim = SimConfig::new(horizon, dt, scheme, false).map_err(|err| {
            let key = if horizon > 0.0 && dt <= horizon { "dt" } else { "horizon" };
            invalid(key, err.to_string())
        })?;

        let replications: usize = e.required("replications")?;
        let base_seed: u64 = e.required("base_seed")?;
        let estimators = match e.raw("estimators") {
            None => vec![EstimatorKind::Mle, EstimatorKind::Alternative],
            Some(raw) => raw
                .split(',')
                .map(|s| match s.trim() {
                    "both" => Ok(vec![EstimatorKind::Mle, EstimatorKind::Alternative]),
                    other => other.parse().map(|k| vec![k]),
                })
                .collect::<Result<Vec<_>, String>>()
                .map_err(|m| invalid("estimators", m))?
                .concat(),
        };
        let inv_floor = e.optional::<f64>("inv_floor")?.unwrap_or(DEFAULT_INV_FLOOR);
        let out: PathBuf = e.required::<String>("out")?.into();
        if out.as_os_str().is_empty() {
            return Err(invalid("out", "empty path"));
        }

        let experiment = ExperimentConfig {
            params,
            sim,
            replications,
            checkpoints,
            base_seed,
            estimators,
            inv_floor,
        };
        experiment.validate().map_err(|err| {
            let key = match err {
                ModelError::OffGridCheckpoint(_) | ModelError::UnorderedCheckpoints => "checkpoints",
                ModelError::CheckpointOutOfRange { .. } => "horizon",
                ModelError::SchemeInadmissible { .. } => "scheme",
                ModelError::InvalidConfig(ref m) if m.contains("replications") => "replications",
                ModelError::InvalidConfig(ref m) if m.contains("inv_floor") => "inv_floor",
                _ => "estimators",
            };
            invalid(key, err.to_string())
        })?;
        Ok(RunConfig { experiment, out })
    }
}
