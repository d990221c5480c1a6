//! Plain-text `key = value` pipeline configuration.
//!
//! Every key is optional; `#` starts a comment. `d0` and `iterations` accept
//! `auto`, meaning the defaults derived from the grid size and sample count.

use std::fmt::Write as _;

use thiserror::Error;

use crate::som::{ClassifyMode, TrainingSchedule, DEFAULT_ALPHA0, DEFAULT_COLS, DEFAULT_ROWS};
use crate::spectral::{DEFAULT_FEATURE_SIDE, DEFAULT_TRANSFORM_SIZE};

pub const SEED_ENV: &str = "PUCKERGRADE_SEED";
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("invalid value `{value}` for `{key}`")]
    InvalidValue { key: String, value: String },
    #[error("{0}")]
    OutOfRange(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub transform_size: usize,
    pub feature_side: usize,
    pub include_dc: bool,
    pub binarize: bool,
    pub som_rows: usize,
    pub som_cols: usize,
    pub alpha0: f64,
    pub d0: Option<f64>,
    pub iterations: Option<u64>,
    pub classify_mode: ClassifyMode,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            transform_size: DEFAULT_TRANSFORM_SIZE,
            feature_side: DEFAULT_FEATURE_SIDE,
            include_dc: false,
            binarize: false,
            som_rows: DEFAULT_ROWS,
            som_cols: DEFAULT_COLS,
            alpha0: DEFAULT_ALPHA0,
            d0: None,
            iterations: None,
            classify_mode: ClassifyMode::BmuDistance,
            seed: DEFAULT_SEED,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn parse_auto<T: std::str::FromStr>(key: &str, value: &str) -> Result<Option<T>, ConfigError> {
    if value == "auto" {
        Ok(None)
    } else {
        parse_value(key, value).map(Some)
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            match key {
                "transform_size" => cfg.transform_size = parse_value(key, value)?,
                "feature_side" => cfg.feature_side = parse_value(key, value)?,
                "include_dc" => cfg.include_dc = parse_value(key, value)?,
                "binarize" => cfg.binarize = parse_value(key, value)?,
                "som_rows" => cfg.som_rows = parse_value(key, value)?,
                "som_cols" => cfg.som_cols = parse_value(key, value)?,
                "alpha0" => cfg.alpha0 = parse_value(key, value)?,
                "d0" => cfg.d0 = parse_auto(key, value)?,
                "iterations" => cfg.iterations = parse_auto(key, value)?,
                "classify_mode" => cfg.classify_mode = parse_value(key, value)?,
                "seed" => cfg.seed = parse_value(key, value)?,
                other => {
                    return Err(ConfigError::UnknownKey {
                        line: i + 1,
                        key: other.to_string(),
                    })
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let auto = |v: Option<String>| v.unwrap_or_else(|| "auto".into());
        let mut out = String::new();
        let _ = writeln!(out, "transform_size = {}", self.transform_size);
        let _ = writeln!(out, "feature_side = {}", self.feature_side);
        let _ = writeln!(out, "include_dc = {}", self.include_dc);
        let _ = writeln!(out, "binarize = {}", self.binarize);
        let _ = writeln!(out, "som_rows = {}", self.som_rows);
        let _ = writeln!(out, "som_cols = {}", self.som_cols);
        let _ = writeln!(out, "alpha0 = {}", self.alpha0);
        let _ = writeln!(out, "d0 = {}", auto(self.d0.map(|v| v.to_string())));
        let _ = writeln!(
            out,
            "iterations = {}",
            auto(self.iterations.map(|v| v.to_string()))
        );
        let _ = writeln!(out, "classify_mode = {}", self.classify_mode);
        let _ = writeln!(out, "seed = {}", self.seed);
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::OutOfRange(m));
        if self.transform_size == 0 {
            return bad("transform_size must be >= 1".into());
        }
        if self.feature_side == 0 || self.feature_side > self.transform_size {
            return bad(format!(
                "feature_side must be in 1..={}",
                self.transform_size
            ));
        }
        if self.som_rows == 0 || self.som_cols == 0 {
            return bad("som_rows and som_cols must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.alpha0) {
            return bad(format!("alpha0 {} outside [0, 1]", self.alpha0));
        }
        if self.d0.is_some_and(|d| !d.is_finite() || d < 0.0) {
            return bad("d0 must be >= 0".into());
        }
        if self.iterations == Some(0) {
            return bad("iterations must be >= 1".into());
        }
        Ok(())
    }

    /// Input dimension of the map: one entry per feature grid cell.
    pub fn feature_dim(&self) -> usize {
        self.feature_side * self.feature_side
    }

    /// Training schedule with `auto` fields resolved for `num_samples` inputs.
    pub fn schedule(&self, num_samples: usize) -> TrainingSchedule {
        let defaults = TrainingSchedule::default_for(self.som_rows, self.som_cols, num_samples);
        TrainingSchedule::new(
            self.alpha0,
            self.d0.unwrap_or(defaults.d0()),
            self.iterations.unwrap_or(defaults.iterations()),
        )
        .expect("validated config yields a valid schedule")
    }

    /// Copy with `d0` and `iterations` pinned to the values used for `num_samples`.
    pub fn resolved(&self, num_samples: usize) -> Self {
        let s = self.schedule(num_samples);
        Self {
            d0: Some(s.d0()),
            iterations: Some(s.iterations()),
            ..self.clone()
        }
    }

    /// Replaces the seed with `value` when one is given.
    pub fn with_seed_override(mut self, value: Option<&str>) -> Result<Self, ConfigError> {
        if let Some(v) = value {
            self.seed = parse_value(SEED_ENV, v.trim())?;
        }
        Ok(self)
    }

    /// Applies the `PUCKERGRADE_SEED` environment variable, if set.
    pub fn with_env_overrides(self) -> Result<Self, ConfigError> {
        let value = std::env::var(SEED_ENV).ok();
        self.with_seed_override(value.as_deref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::parse(&cfg.to_text()).unwrap(), cfg);
        assert_eq!(PipelineConfig::parse("").unwrap(), cfg);
    }

    #[test]
    fn parses_keys_and_comments() {
        let cfg = PipelineConfig::parse(
            "# grading run\ntransform_size = 64\nfeature_side=32 # trailing\nd0 = 2.5\niterations = auto\nclassify_mode = dot-product\n",
        )
        .unwrap();
        assert_eq!(cfg.transform_size, 64);
        assert_eq!(cfg.feature_side, 32);
        assert_eq!(cfg.d0, Some(2.5));
        assert_eq!(cfg.iterations, None);
        assert_eq!(cfg.classify_mode, ClassifyMode::DotProduct);
        let again = PipelineConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            PipelineConfig::parse("nonsense").unwrap_err(),
            ConfigError::Syntax { line: 1 }
        );
        assert!(matches!(
            PipelineConfig::parse("\ncolour = red").unwrap_err(),
            ConfigError::UnknownKey { line: 2, .. }
        ));
        assert!(matches!(
            PipelineConfig::parse("seed = minus one").unwrap_err(),
            ConfigError::InvalidValue { .. }
        ));
        assert!(matches!(
            PipelineConfig::parse("feature_side = 300").unwrap_err(),
            ConfigError::OutOfRange(_)
        ));
        assert!(PipelineConfig::parse("alpha0 = 2").is_err());
        assert!(PipelineConfig::parse("iterations = 0").is_err());
    }

    #[test]
    fn schedule_resolution() {
        let cfg = PipelineConfig::default();
        let s = cfg.schedule(5);
        assert_eq!((s.alpha0(), s.d0(), s.iterations()), (0.35, 4.0, 1000));
        let r = cfg.resolved(5);
        assert_eq!((r.d0, r.iterations), (Some(4.0), Some(1000)));
        assert_eq!(r.schedule(99), s);
    }

    #[test]
    fn seed_override() {
        let cfg = PipelineConfig::default();
        assert_eq!(cfg.clone().with_seed_override(None).unwrap().seed, 42);
        assert_eq!(cfg.clone().with_seed_override(Some(" 7 ")).unwrap().seed, 7);
        assert!(cfg.with_seed_override(Some("x")).is_err());
    }
}
