//! JSON pipeline configuration.
//!
//! ```json
//! {
//!   "grid": { "n_cells": 128, "extent_mm": 2.0 },
//!   "mixture": {
//!     "probs": [0.22, 0.33, 0.45],
//!     "modes": [
//!       { "kind": "hermite_gauss", "order": 0, "waist_ratio": 0.15 },
//!       { "kind": "hermite_gauss", "order": 1, "waist_ratio": 0.15 },
//!       { "kind": "hermite_gauss", "order": 2, "waist_ratio": 0.15 }
//!     ]
//!   },
//!   "noise": { "kind": "poisson", "photon_budget": 1e6, "seed": 7 },
//!   "filter_sigma_px": 2.0,
//!   "renormalize": true
//! }
//! ```
//!
//! Unknown keys are rejected at every level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, StageExt};
use crate::forward::NoiseModel;
use crate::grid::GridSpec;
use crate::state::MixtureSpec;

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub grid: GridSpec,
    pub mixture: MixtureSpec,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub filter_sigma_px: f64,
    #[serde(default = "default_true")]
    pub renormalize: bool,
    /// Modes kept by the decomposition; defaults to the mixture size.
    #[serde(default)]
    pub decompose_modes: Option<usize>,
    /// Route frames through the 2x2 analyzer mosaic.
    #[serde(default)]
    pub mosaic: bool,
    #[serde(default)]
    pub emit_csv: bool,
    #[serde(default)]
    pub outputs: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn new(grid: GridSpec, mixture: MixtureSpec) -> Self {
        PipelineConfig {
            grid,
            mixture,
            noise: NoiseModel::none(),
            filter_sigma_px: 0.0,
            renormalize: true,
            decompose_modes: None,
            mosaic: false,
            emit_csv: false,
            outputs: None,
        }
    }

    /// Parses and validates.
    pub fn from_json(text: &str) -> Result<Self> {
        PipelineConfig::parse(text)?.validated().stage("config")
    }

    /// Schema check only; cross-field rules (seed present, filter width,
    /// mode count) wait for [`PipelineConfig::validated`], so callers can
    /// apply overrides first.
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Config(e.to_string()))
            .stage("config")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        PipelineConfig::load_raw(path)?.validated().stage("config")
    }

    /// [`PipelineConfig::parse`] on a file.
    pub fn load_raw(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path, e))
            .stage("config")?;
        PipelineConfig::parse(&text)
    }

    pub fn validated(self) -> Result<Self> {
        self.noise.validate()?;
        if !(self.filter_sigma_px.is_finite() && self.filter_sigma_px >= 0.0) {
            return Err(Error::InvalidFilter(self.filter_sigma_px));
        }
        if let Some(k) = self.decompose_modes {
            if k == 0 || k > self.grid.n_cells() {
                return Err(Error::Config(format!(
                    "decompose_modes must lie in 1..={}, got {k}",
                    self.grid.n_cells()
                )));
            }
        }
        Ok(self)
    }

    pub fn modes_to_keep(&self) -> usize {
        self.decompose_modes
            .unwrap_or(self.mixture.len())
            .min(self.grid.n_cells())
    }
}
