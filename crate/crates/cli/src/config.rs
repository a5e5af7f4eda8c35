//! Experiment configuration files.
//!
//! A config is TOML with top-level scalars and one level of tables:
//!
//! ```toml
//! h = 0.02
//! seed = 7
//!
//! [domain]            # StarDomain: r0, center = [x, y], modes = [[k, a, b], ...]
//! r0 = 1.0
//! modes = [[2, 0.08, 0.0]]
//!
//! [energy]            # EnergyParams
//! tau = 0.01
//!
//! [optimizer]         # OptimizerConfig
//! max_iter = 40
//!
//! [sweep]
//! ks = [2, 3, 4, 5, 6]
//! ts = [0.05, 0.025]
//!
//! [check]
//! domains = 5
//! fields = 10
//! ```
//!
//! Key-estimate runs read `[inner]` and `[outer]` domain tables.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use shapelab_core::energy::EnergyParams;
use shapelab_core::optimizer::OptimizerConfig;
use shapelab_core::StarDomain;

use crate::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub h: Option<f64>,
    pub seed: Option<u64>,
    pub domain: Option<StarDomain>,
    pub inner: Option<StarDomain>,
    pub outer: Option<StarDomain>,
    #[serde(default)]
    pub energy: EnergyParams,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub sweep: SweepGrid,
    #[serde(default)]
    pub check: CheckConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub ks: Vec<u32>,
    pub ts: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self { ks: vec![2, 3, 4, 5, 6], ts: vec![0.05, 0.025] }
    }
}

/// Sizes of the randomized derivative check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub domains: usize,
    pub fields: usize,
    /// Largest central-difference step; halved twice.
    pub step: f64,
    /// Highest wavenumber of random domains and fields.
    pub kmax: u32,
    /// Amplitude of random domains; mode `k` is drawn below `amplitude / k`.
    pub amplitude: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { domains: 5, fields: 10, step: 0.02, kmax: 3, amplitude: 0.08 }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    toml::from_str(&read(path)?).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Reads a domain file holding a bare StarDomain table.
pub fn load_domain(path: &Path) -> Result<StarDomain, CliError> {
    toml::from_str(&read(path)?).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}
