//! Line-oriented `key = value` experiment configuration.
//!
//! ```text
//! # ZW angles, ideal source
//! alpha = 0
//! alpha_prime = 45
//! beta = 22.5
//! beta_prime = 67.5
//! model = quantum            # quantum | gisin_gisin | deterministic:<table>
//! visibility = 1
//! detector_efficiency_a = 0.6
//! n_trials = 1000000
//! seed = 1
//! ```
//!
//! Angles are degrees. Omitted keys take the values of
//! [`ExperimentConfig::default`]. The canonical rendering
//! ([`canonical_entries`]) lists every key in a fixed order and is what the
//! config digest hashes.

use std::fmt;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lhv::{DetectionLoopholeModel, DeterministicStrategy};
use crate::model::Visibility;
use crate::sim::{ExperimentConfig, SourceModel};

/// A configuration problem tied to one field (and line, when parsed).
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigError {
    pub field: String,
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn field(field: &str, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.to_string(),
            line: None,
            message: message.into(),
        }
    }

    fn at(mut self, line: usize) -> Self {
        self.line = Some(line);
        self
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: field `{}`: {}", self.field, self.message),
            None => write!(f, "field `{}`: {}", self.field, self.message),
        }
    }
}

/// Split `key = value` lines, dropping blank lines and `#` comments.
/// Returns `(line_number, key, value)` triples.
pub fn parse_key_values(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ConfigError::field(line, "expected `key = value`").at(line_no)
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::field("", "missing key before `=`").at(line_no));
        }
        out.push((line_no, key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = value
        .parse()
        .map_err(|_| ConfigError::field(key, format!("expected a number, got {value:?}")))?;
    if !v.is_finite() {
        return Err(ConfigError::field(key, format!("must be finite, got {value}")));
    }
    Ok(v)
}

fn parse_u64(key: &str, value: &str) -> Result<u64, ConfigError> {
    value
        .replace('_', "")
        .parse()
        .map_err(|_| ConfigError::field(key, format!("expected a non-negative integer, got {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::field(key, format!("expected true or false, got {value:?}"))),
    }
}

fn normalize_degrees(d: f64) -> f64 {
    let r = d.rem_euclid(180.0);
    if r >= 180.0 {
        0.0
    } else {
        r
    }
}

/// Parse and validate a configuration file's text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut config = ExperimentConfig::default();
    let mut model_kind: Option<String> = None;
    let mut visibility = 1.0;
    let mut symmetric = false;
    let mut seen = std::collections::HashSet::new();

    for (line, key, value) in parse_key_values(text)? {
        if !seen.insert(key.clone()) {
            return Err(ConfigError::field(&key, "given more than once").at(line));
        }
        let k = key.as_str();
        let v = value.as_str();
        let result = match k {
            "alpha" => parse_f64(k, v).map(|x| config.angles_degrees[0] = normalize_degrees(x)),
            "alpha_prime" => parse_f64(k, v).map(|x| config.angles_degrees[1] = normalize_degrees(x)),
            "beta" => parse_f64(k, v).map(|x| config.angles_degrees[2] = normalize_degrees(x)),
            "beta_prime" => parse_f64(k, v).map(|x| config.angles_degrees[3] = normalize_degrees(x)),
            "model" => {
                model_kind = Some(value.clone());
                Ok(())
            }
            "visibility" => parse_f64(k, v).map(|x| visibility = x),
            "symmetric_inefficiency" => parse_bool(k, v).map(|b| symmetric = b),
            "arm_transmission_a" => parse_f64(k, v).map(|x| config.arm_transmission[0] = x),
            "arm_transmission_b" => parse_f64(k, v).map(|x| config.arm_transmission[1] = x),
            "detector_efficiency_a" => parse_f64(k, v).map(|x| config.detector_efficiency[0] = x),
            "detector_efficiency_b" => parse_f64(k, v).map(|x| config.detector_efficiency[1] = x),
            "dark_count_prob" => parse_f64(k, v).map(|x| config.dark_count_prob = x),
            "n_trials" => parse_u64(k, v).map(|n| config.n_trials = n),
            "seed" => parse_u64(k, v).map(|s| config.seed = s),
            "label" => {
                config.label = value.clone();
                Ok(())
            }
            _ => Err(ConfigError::field(k, "unknown key")),
        };
        result.map_err(|e| e.at(line))?;
    }

    config.model = match model_kind.as_deref().unwrap_or("quantum") {
        "quantum" => SourceModel::Quantum(
            Visibility::new(visibility)
                .map_err(|_| ConfigError::field("visibility", format!("must lie in [0, 1], got {visibility}")))?,
        ),
        "gisin_gisin" | "detection_loophole" => {
            SourceModel::DetectionLoophole(DetectionLoopholeModel { symmetric })
        }
        other => match other.strip_prefix("deterministic:") {
            Some(table) => SourceModel::Deterministic(
                table
                    .parse::<DeterministicStrategy>()
                    .map_err(|e| ConfigError::field("model", e))?,
            ),
            None => {
                return Err(ConfigError::field(
                    "model",
                    format!("unknown model {other:?}, expected quantum, gisin_gisin or deterministic:<table>"),
                ))
            }
        },
    };
    config.validate()?;
    Ok(config)
}

/// Every configuration key in canonical order, values rendered so that
/// parsing them back yields the same configuration.
pub fn canonical_entries(config: &ExperimentConfig) -> Vec<(String, String)> {
    let mut e: Vec<(String, String)> = Vec::new();
    let mut push = |k: &str, v: String| e.push((k.to_string(), v));
    if !config.label.is_empty() {
        push("label", config.label.clone());
    }
    push("alpha", config.angles_degrees[0].to_string());
    push("alpha_prime", config.angles_degrees[1].to_string());
    push("beta", config.angles_degrees[2].to_string());
    push("beta_prime", config.angles_degrees[3].to_string());
    match config.model {
        SourceModel::Quantum(v) => {
            push("model", "quantum".into());
            push("visibility", v.value().to_string());
        }
        SourceModel::DetectionLoophole(m) => {
            push("model", "gisin_gisin".into());
            push("symmetric_inefficiency", m.symmetric.to_string());
        }
        SourceModel::Deterministic(s) => push("model", format!("deterministic:{s}")),
    }
    push("arm_transmission_a", config.arm_transmission[0].to_string());
    push("arm_transmission_b", config.arm_transmission[1].to_string());
    push("detector_efficiency_a", config.detector_efficiency[0].to_string());
    push("detector_efficiency_b", config.detector_efficiency[1].to_string());
    push("dark_count_prob", config.dark_count_prob.to_string());
    push("n_trials", config.n_trials.to_string());
    push("seed", config.seed.to_string());
    e
}

pub fn render_config(config: &ExperimentConfig) -> String {
    canonical_entries(config)
        .iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect()
}

/// First 16 hex digits of the SHA-256 of `key = value\n` lines.
pub fn digest_entries<'a>(entries: impl IntoIterator<Item = (&'a str, &'a str)>) -> String {
    let mut hasher = Sha256::new();
    for (k, v) in entries {
        hasher.update(k.as_bytes());
        hasher.update(b" = ");
        hasher.update(v.as_bytes());
        hasher.update(b"\n");
    }
    hex::encode(&hasher.finalize()[..8])
}

pub fn config_digest(config: &ExperimentConfig) -> String {
    let entries = canonical_entries(config);
    digest_entries(entries.iter().map(|(k, v)| (k.as_str(), v.as_str())))
}

/// Illustrative configurations shipped with the tool. None of them are
/// measured values from any laboratory.
pub const PRESETS: [(&str, &str); 6] = [
    ("zw_ideal", include_str!("../presets/zw_ideal.conf")),
    ("zw_fitted", include_str!("../presets/zw_fitted.conf")),
    ("eff60", include_str!("../presets/eff60.conf")),
    ("eff30", include_str!("../presets/eff30.conf")),
    ("gisin_gisin", include_str!("../presets/gisin_gisin.conf")),
    ("gisin_gisin_symmetric", include_str!("../presets/gisin_gisin_symmetric.conf")),
];

pub fn preset(name: &str) -> Result<ExperimentConfig, ConfigError> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            ConfigError::field("preset", format!("unknown preset {name:?}; available: {}", names.join(", ")))
        })?;
    parse_config(text)
}
