//! Run configuration: built-in defaults, then the TOML file, then flags.
//!
//! ```toml
//! seed = 7
//! shards = 16
//! workers = 4              # worker threads; ISING_LAB_WORKERS otherwise
//! execution = "parallel"   # or "sequential"
//!
//! [mc]
//! kernel = { family = "exponential", a = 0.01, b = 1.0 }
//! horizons = [2.0, 5.0]
//! samples = 100000
//! quantities = ["susceptibility", "partition"]
//! ```
//!
//! Sections: `[verify]`, `[exact]`, `[continuum-study]`, `[mc]`,
//! `[susceptibility-scan]`, `[corbound]`. Unknown keys are errors.

use std::path::Path;

use ising_lab::continuum::DiscreteMethod;
use ising_lab::inequalities::{CorBoundConfig, Engine, SuiteConfig};
use ising_lab::ising::PairCoupling;
use ising_lab::{Execution, Kernel};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_SHARDS: usize = 16;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub shards: Option<usize>,
    pub workers: Option<usize>,
    pub execution: Option<Execution>,
    #[serde(default)]
    pub verify: SuiteConfig,
    #[serde(default)]
    pub exact: ExactConfig,
    #[serde(default, rename = "continuum-study")]
    pub continuum_study: ContinuumConfig,
    #[serde(default)]
    pub mc: McRunConfig,
    #[serde(default, rename = "susceptibility-scan")]
    pub susceptibility_scan: ScanConfig,
    #[serde(default)]
    pub corbound: CorboundRunConfig,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Settings shared by every command after all layers are applied.
#[derive(Clone, Debug, Serialize)]
pub struct Common {
    pub seed: u64,
    pub shards: usize,
    pub workers: Option<usize>,
    pub execution: Execution,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExactConfig {
    pub w: PairCoupling,
    pub half_width: usize,
    /// Each entry is one `<σ_A>` query.
    pub sites: Vec<Vec<i64>>,
    pub engine: Engine,
}

impl Default for ExactConfig {
    fn default() -> Self {
        ExactConfig {
            w: PairCoupling::nearest(1.0).expect("valid"),
            half_width: 2,
            sites: vec![vec![0, 1]],
            engine: Engine::Enumeration,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuumConfig {
    pub kernel: Kernel,
    pub horizon: f64,
    pub deltas: Vec<f64>,
    pub times: Vec<f64>,
    pub samples: usize,
    pub method: DiscreteMethod,
    /// Add the jump-process estimate of the same moment as a `delta = 0` row.
    pub jump_reference: bool,
    pub susceptibility: bool,
    pub epsilon_gap: Option<f64>,
}

impl Default for ContinuumConfig {
    fn default() -> Self {
        ContinuumConfig {
            kernel: Kernel::Exponential { a: 0.01, b: 1.0 },
            horizon: 1.0,
            deltas: vec![0.2, 0.1, 0.05],
            times: vec![-0.5, 0.5],
            samples: 100_000,
            method: DiscreteMethod::ReweightedControlVariate,
            jump_reference: true,
            susceptibility: false,
            epsilon_gap: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Quantity {
    Partition,
    PartitionWithField,
    Susceptibility,
    FdSusceptibility,
    Moment,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McRunConfig {
    pub kernel: Kernel,
    pub horizons: Vec<f64>,
    pub samples: usize,
    pub intensity: f64,
    pub quantities: Vec<Quantity>,
    pub mu: f64,
    pub h: f64,
    pub times: Vec<f64>,
}

impl Default for McRunConfig {
    fn default() -> Self {
        McRunConfig {
            kernel: Kernel::Zero,
            horizons: vec![2.0],
            samples: 100_000,
            intensity: 1.0,
            quantities: vec![Quantity::Susceptibility],
            mu: 0.1,
            h: 0.01,
            times: vec![-0.5, 0.5],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ScanMethod {
    Ratio,
    FiniteDifference,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub kernel: Kernel,
    pub horizons: Vec<f64>,
    pub samples: usize,
    pub intensity: f64,
    pub method: ScanMethod,
    pub h: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            kernel: Kernel::Zero,
            horizons: vec![1.0, 2.0, 5.0, 10.0],
            samples: 100_000,
            intensity: 1.0,
            method: ScanMethod::Ratio,
            h: 0.01,
        }
    }
}

/// Explicit points, or the documented grid when `points` is empty.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorboundRunConfig {
    pub points: Vec<CorBoundConfig>,
}

pub(crate) fn parse_kernel(s: &str) -> Result<Kernel, CliError> {
    let kernel: Kernel =
        serde_json::from_str(s).map_err(|e| CliError::Config(format!("malformed kernel spec {s:?}: {e}")))?;
    kernel
        .validate()
        .map_err(|e| CliError::Config(format!("invalid kernel {s:?}: {e}")))?;
    Ok(kernel)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        let cfg: FileConfig = toml::from_str("").unwrap();
        assert_eq!(cfg.mc.horizons, vec![2.0]);
        assert!(cfg.corbound.points.is_empty());
    }

    #[test]
    fn sections_and_kernels_parse() {
        let cfg: FileConfig = toml::from_str(
            r#"
            seed = 3
            [mc]
            kernel = { family = "exponential", a = 0.01, b = 1.0 }
            quantities = ["partition", "fd_susceptibility"]
            [continuum-study]
            deltas = [0.1]
            method = "exact"
            [corbound]
            points = [{ w = [2.0, 0.001], epsilon = 0.09, half_width = 100, truncation = 50 }]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.mc.kernel, Kernel::Exponential { a: 0.01, b: 1.0 });
        assert_eq!(cfg.continuum_study.method, DiscreteMethod::Exact);
        assert_eq!(cfg.corbound.points[0].d, 1.01);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("sede = 3").is_err());
        assert!(toml::from_str::<FileConfig>("[mc]\nhorizon = 3.0").is_err());
    }

    #[test]
    fn kernel_flag_parsing() {
        assert_eq!(parse_kernel(r#"{"family":"zero"}"#).unwrap(), Kernel::Zero);
        assert!(parse_kernel(r#"{"family":"exponential","a":-1,"b":1}"#).is_err());
        assert!(parse_kernel("exponential").is_err());
    }
}
