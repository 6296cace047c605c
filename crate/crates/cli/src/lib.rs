//! Configuration, orchestration and file output behind the `ballslep` binary.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use std::path::PathBuf;

use anyhow::{bail, Result};
use ballslep::SystemId;
use clap::Args;

pub use commands::{FieldSampleRow, Source};
pub use config::{EulerConfig, RunConfig};

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON configuration file; missing fields take the default setting.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub system: Option<SystemId>,
    /// Maximal radial index.
    #[arg(long = "M")]
    pub max_radial: Option<usize>,
    /// Maximal angular degree.
    #[arg(long = "N")]
    pub max_angular: Option<usize>,
    /// Inner radius of the region.
    #[arg(long = "a")]
    pub a: Option<f64>,
    /// Outer radius of the region.
    #[arg(long = "b")]
    pub b: Option<f64>,
    #[arg(long)]
    pub theta_deg: Option<f64>,
    /// Ball radius.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Rotation as `alpha,beta,gamma` in degrees (z-y-z).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub euler_deg: Option<Vec<f64>>,
}

impl Overrides {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.system {
            cfg.system = v;
        }
        if let Some(v) = self.max_radial {
            cfg.max_radial = v;
        }
        if let Some(v) = self.max_angular {
            cfg.max_angular = v;
        }
        if let Some(v) = self.a {
            cfg.region.a = v;
        }
        if let Some(v) = self.b {
            cfg.region.b = v;
        }
        if let Some(v) = self.theta_deg {
            cfg.region.theta_deg = v;
        }
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        if let Some(v) = self.threshold {
            cfg.threshold = v;
        }
        if let Some(v) = &self.out {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = &self.euler_deg {
            let [alpha, beta, gamma] = v[..] else {
                bail!("--euler-deg takes three comma-separated angles");
            };
            cfg.euler_deg = Some(EulerConfig { alpha, beta, gamma });
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
