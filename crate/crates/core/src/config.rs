//! Run configuration: one TOML file plus command-line overrides.
//!
//! ```toml
//! seed = 42
//! dim = 4096
//! n_x = 4
//! n_y = 6
//! budget = 200
//! centering = "image"
//! project = true
//!
//! [benchmark]
//! places = 200
//! features_per_place = 50
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aggregate::EncoderMeta;
use crate::error::{Error, Result};
use crate::experiments::{CapacityConfig, SweepConfig};
use crate::preprocess::CenteringMode;
use crate::seed;
use crate::synth::BenchmarkConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub dim: usize,
    pub n_x: usize,
    pub n_y: usize,
    pub budget: usize,
    pub centering: CenteringMode,
    pub project: bool,
    /// Projection matrix seed; derived from `seed` when absent.
    pub projection_seed: Option<u64>,
    pub ks: Vec<usize>,
    pub benchmark: BenchmarkConfig,
    pub capacity: CapacityConfig,
    /// Benchmark instances per sweep setting; each sweep reuses `benchmark`.
    pub sweep_seeds: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            dim: EncoderMeta::DEFAULT_DIM,
            n_x: EncoderMeta::DEFAULT_NX,
            n_y: EncoderMeta::DEFAULT_NY,
            budget: EncoderMeta::DEFAULT_BUDGET,
            centering: CenteringMode::Image,
            project: true,
            projection_seed: None,
            ks: vec![1, 2, 5, 10, 20],
            benchmark: BenchmarkConfig::default(),
            capacity: CapacityConfig::default(),
            sweep_seeds: SweepConfig::default().seeds,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("dim must be at least 1"));
        }
        if self.n_x == 0 || self.n_y == 0 {
            return Err(Error::invalid("n_x and n_y must be at least 1"));
        }
        if self.sweep_seeds == 0 {
            return Err(Error::invalid("sweep_seeds must be at least 1"));
        }
        if self.ks.contains(&0) {
            return Err(Error::invalid("every k must be at least 1"));
        }
        self.benchmark.validate()
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            benchmark: self.benchmark.clone(),
            seeds: self.sweep_seeds,
        }
    }

    pub fn encoder_meta(&self) -> EncoderMeta {
        EncoderMeta {
            dim: self.dim,
            seed: self.seed,
            n_x: self.n_x,
            n_y: self.n_y,
            budget: self.budget,
            centering: self.centering,
            projection_seed: self
                .project
                .then(|| self.projection_seed.unwrap_or_else(|| seed::derive(self.seed, "projection"))),
        }
    }
}
