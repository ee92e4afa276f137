//! Shared configuration for featurization, the trainable policy, and the
//! evaluation harness. Serializable so a run's config snapshot fully
//! reproduces it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    /// Feature dimension `d`. Items embed a hashed bag-of-words plus an
    /// 18-way type one-hot and 5 geometry values, so `d` must be >= 24.
    pub feature_dim: usize,
    /// History length `H`: most recent actions and screens kept.
    pub history_len: usize,
    /// Number of trunk layers `M`.
    pub trunk_layers: usize,
    /// Hidden width of the span/item head MLPs.
    pub head_hidden: usize,
    /// Constant gradient-descent step size. The training loss is summed
    /// (not averaged) over data points, so scale this down for corpora
    /// much larger than a few hundred actions.
    pub step_size: f64,
    /// Momentum coefficient.
    pub momentum: f64,
    /// Training epoch count.
    pub epochs: usize,
    /// Seed for parameter init and any stochastic policy.
    pub seed: u64,
    /// Maximum predicted span length in tokens (end - start <= this).
    pub max_span_len: usize,
    /// Dialogue-history truncation: keep this many most recent tokens.
    pub max_dialogue_tokens: usize,
    /// Salt for feature hashing.
    pub hash_seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            feature_dim: 64,
            history_len: 4,
            trunk_layers: 2,
            head_hidden: 32,
            step_size: 0.001,
            momentum: 0.9,
            epochs: 300,
            seed: 0,
            max_span_len: 10,
            max_dialogue_tokens: 256,
            hash_seed: 0x6a1d_5eed,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io error reading {path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("invalid config json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid config: {0}")]
    Invalid(String),
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.feature_dim < 24 {
            return Err(ConfigError::Invalid(format!(
                "feature_dim must be >= 24, got {}",
                self.feature_dim
            )));
        }
        if self.history_len == 0 {
            return Err(ConfigError::Invalid("history_len must be >= 1".into()));
        }
        if self.trunk_layers == 0 {
            return Err(ConfigError::Invalid("trunk_layers must be >= 1".into()));
        }
        if self.head_hidden == 0 {
            return Err(ConfigError::Invalid("head_hidden must be >= 1".into()));
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(ConfigError::Invalid("step_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(ConfigError::Invalid("momentum must be in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn from_json_file(path: impl AsRef<std::path::Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let config: Config = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        Config::default().validate().unwrap();
    }

    #[test]
    fn rejects_tiny_feature_dim() {
        let config = Config { feature_dim: 8, ..Config::default() };
        assert!(config.validate().is_err());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let config: Config = serde_json::from_str(r#"{"feature_dim": 32}"#).unwrap();
        assert_eq!(config.feature_dim, 32);
        assert_eq!(config.history_len, Config::default().history_len);
    }
}
