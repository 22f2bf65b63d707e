//! Pipeline-wide hyperparameters and their file/flag layering.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Hyperparameters shared by every pipeline stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Number of k-means color clusters.
    pub k_clusters: usize,
    /// Per-channel tolerance for binarizing a dominant color.
    pub rgb_tolerance: u32,
    /// Side of the square blocks the mask is quantized into.
    pub block_size: u32,
    /// Maximum center distance for connecting two blocks.
    pub max_distance: f64,
    /// Weight of the low-density penalty on edges.
    pub density_penalty: f64,
    /// Minimum start/end separation when sampling queries.
    pub min_endpoint_distance: f64,
    /// Ramer-Douglas-Peucker tolerance in pixels.
    pub rdp_epsilon: f64,
    pub random_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        default_config()
    }
}

pub fn default_config() -> PipelineConfig {
    PipelineConfig {
        k_clusters: 8,
        rgb_tolerance: 25,
        block_size: 4,
        max_distance: 4.0,
        density_penalty: 50.0,
        min_endpoint_distance: 200.0,
        rdp_epsilon: 2.0,
        random_seed: 0,
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.k_clusters == 0 {
            return bad("k_clusters must be >= 1");
        }
        if self.block_size == 0 {
            return bad("block_size must be >= 1");
        }
        if !self.max_distance.is_finite() || self.max_distance <= 0.0 {
            return bad("max_distance must be > 0");
        }
        if !self.density_penalty.is_finite() || self.density_penalty < 0.0 {
            return bad("density_penalty must be >= 0");
        }
        if !self.min_endpoint_distance.is_finite() || self.min_endpoint_distance < 0.0 {
            return bad("min_endpoint_distance must be >= 0");
        }
        if !self.rdp_epsilon.is_finite() || self.rdp_epsilon < 0.0 {
            return bad("rdp_epsilon must be >= 0");
        }
        Ok(())
    }

    /// Half the block size, rounded up: how far a block center may sit from
    /// the nearest traversable pixel of its block (Chebyshev).
    pub fn block_margin(&self) -> u32 {
        self.block_size.div_ceil(2)
    }

    pub fn apply(&mut self, o: &ConfigOverrides) {
        if let Some(v) = o.k_clusters {
            self.k_clusters = v;
        }
        if let Some(v) = o.rgb_tolerance {
            self.rgb_tolerance = v;
        }
        if let Some(v) = o.block_size {
            self.block_size = v;
        }
        if let Some(v) = o.max_distance {
            self.max_distance = v;
        }
        if let Some(v) = o.density_penalty {
            self.density_penalty = v;
        }
        if let Some(v) = o.min_endpoint_distance {
            self.min_endpoint_distance = v;
        }
        if let Some(v) = o.rdp_epsilon {
            self.rdp_epsilon = v;
        }
        if let Some(v) = o.random_seed {
            self.random_seed = v;
        }
    }

    /// Defaults, then `file` (if any), then `flags`; validated.
    pub fn layered(file: Option<&Path>, flags: &ConfigOverrides) -> Result<Self, ConfigError> {
        let mut cfg = default_config();
        if let Some(path) = file {
            cfg.apply(&ConfigOverrides::from_file(path)?);
        }
        cfg.apply(flags);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A partial config: any subset of fields, as read from a `key = value` file
/// or from command-line flags of the same names.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub k_clusters: Option<usize>,
    pub rgb_tolerance: Option<u32>,
    pub block_size: Option<u32>,
    pub max_distance: Option<f64>,
    pub density_penalty: Option<f64>,
    pub min_endpoint_distance: Option<f64>,
    pub rdp_epsilon: Option<f64>,
    pub random_seed: Option<u64>,
}

impl ConfigOverrides {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text).map_err(|message| ConfigError::Parse { path: path.display().to_string(), message })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = default_config();
        assert_eq!(c.density_penalty, 50.0);
        assert_eq!(c.min_endpoint_distance, 200.0);
        assert_eq!(c.rdp_epsilon, 2.0);
        assert_eq!(c.block_size, 4);
        assert_eq!(c.max_distance, 4.0);
        assert_eq!(c.rgb_tolerance, 25);
        assert_eq!(c.k_clusters, 8);
        assert_eq!(c.block_margin(), 2);
        c.validate().unwrap();
    }

    #[test]
    fn file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pipeline.conf");
        std::fs::write(&path, "block_size = 8\nrdp_epsilon = 1.5\n# comment\nk_clusters = 5\n").unwrap();
        let flags = ConfigOverrides { k_clusters: Some(6), ..Default::default() };
        let cfg = PipelineConfig::layered(Some(&path), &flags).unwrap();
        assert_eq!(cfg.block_size, 8);
        assert_eq!(cfg.rdp_epsilon, 1.5);
        assert_eq!(cfg.k_clusters, 6);
        assert_eq!(cfg.density_penalty, 50.0);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(ConfigOverrides::parse("blocksize = 3").is_err());
        let flags = ConfigOverrides { block_size: Some(0), ..Default::default() };
        assert!(matches!(PipelineConfig::layered(None, &flags), Err(ConfigError::Invalid(_))));
        let flags = ConfigOverrides { max_distance: Some(0.0), ..Default::default() };
        assert!(PipelineConfig::layered(None, &flags).is_err());
        let flags = ConfigOverrides { density_penalty: Some(-1.0), ..Default::default() };
        assert!(PipelineConfig::layered(None, &flags).is_err());
    }
}
