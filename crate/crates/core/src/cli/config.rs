use std::path::Path;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

use super::CliError;
use crate::protocols::Sampling;

/// Every experiment parameter, keyed as in config files and records.
///
/// All fields are optional here; each command fills its own defaults and
/// keeps only the keys it reads (see [`super::resolve`]).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "count"
    )]
    pub x: Option<u64>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "count"
    )]
    pub input: Option<u64>,
    #[serde(
        rename = "T",
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "count"
    )]
    pub bound: Option<u64>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "count"
    )]
    pub x_max: Option<u64>,
    #[serde(
        rename = "D",
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "count"
    )]
    pub dim: Option<u64>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "count"
    )]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(
        rename = "N",
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "count"
    )]
    pub shots: Option<u64>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "count"
    )]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub etas: Option<Vec<f64>>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "count"
    )]
    pub budget: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flip: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Sampling>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "count"
    )]
    pub start: Option<u64>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "count"
    )]
    pub count: Option<u64>,
}

impl RunConfig {
    pub fn from_value(v: &Value) -> Result<Self, CliError> {
        serde_json::from_value(v.clone()).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {} is not JSON: {e}", path.display())))?;
        Self::from_value(&v)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Keys set in `top` win; the rest come from `self`.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        RunConfig {
            x: top.x.or(self.x),
            input: top.input.or(self.input),
            bound: top.bound.or(self.bound),
            x_max: top.x_max.or(self.x_max),
            dim: top.dim.or(self.dim),
            seed: top.seed.or(self.seed),
            epsilon: top.epsilon.or(self.epsilon),
            delta: top.delta.or(self.delta),
            confidence: top.confidence.or(self.confidence),
            shots: top.shots.or(self.shots),
            n: top.n.or(self.n),
            etas: top.etas.or(self.etas),
            budget: top.budget.or(self.budget),
            flip: top.flip.or(self.flip),
            sampling: top.sampling.or(self.sampling),
            start: top.start.or(self.start),
            count: top.count.or(self.count),
        }
    }
}

/// Nonnegative integer, also written as an integral float such as `1e6`.
fn count<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
    match Option::<Value>::deserialize(d)? {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Number(n)) => n
            .as_u64()
            .or_else(|| n.as_f64().and_then(integral))
            .map(Some)
            .ok_or_else(|| D::Error::custom(format!("{n} is not a nonnegative integer"))),
        Some(other) => Err(D::Error::custom(format!(
            "expected an integer, got {other}"
        ))),
    }
}

fn integral(f: f64) -> Option<u64> {
    (f >= 0.0 && f.fract() == 0.0 && f < 18_446_744_073_709_551_616.0).then_some(f as u64)
}

/// Flag parser matching the config file: `1000000` or `1e6`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    s.parse::<u64>().or_else(|_| {
        s.parse::<f64>()
            .ok()
            .and_then(integral)
            .ok_or_else(|| format!("`{s}` is not a nonnegative integer"))
    })
}

pub fn parse_sampling(s: &str) -> Result<Sampling, String> {
    match s {
        "per_shot" | "per-shot" => Ok(Sampling::PerShot),
        "aggregate" => Ok(Sampling::Aggregate),
        _ => Err(format!(
            "`{s}` is not a sampling mode (per_shot, aggregate)"
        )),
    }
}
