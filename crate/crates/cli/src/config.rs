use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ballslep::{BallGeometry, Bandlimit, EulerAngles, QuadratureSpec, Region, SystemId};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegionConfig {
    pub a: f64,
    pub b: f64,
    pub theta_deg: f64,
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            a: 0.25,
            b: 0.75,
            theta_deg: 45.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EulerConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n_r: usize,
    pub n_phi: usize,
    pub n_t: usize,
    /// Sample a single sphere of this radius instead of the interior.
    pub sphere_radius: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_r: 10,
            n_phi: 36,
            n_t: 18,
            sphere_radius: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemId,
    #[serde(rename = "M")]
    pub max_radial: usize,
    #[serde(rename = "N")]
    pub max_angular: usize,
    pub beta: f64,
    pub region: RegionConfig,
    pub euler_deg: Option<EulerConfig>,
    pub quadrature: QuadratureSpec,
    pub threshold: f64,
    pub output_dir: PathBuf,
    pub grid: GridConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: SystemId::I,
            max_radial: 6,
            max_angular: 12,
            beta: 1.0,
            region: RegionConfig::default(),
            euler_deg: None,
            quadrature: QuadratureSpec::default(),
            threshold: ballslep::slepian::DEFAULT_THRESHOLD,
            output_dir: PathBuf::from("out"),
            grid: GridConfig::default(),
        }
    }
}

/// The parts of a configuration that determine the matrix and its
/// eigenpairs; their hash tags every output file.
#[derive(Serialize)]
struct HashedPart<'a> {
    system: SystemId,
    max_radial: usize,
    max_angular: usize,
    beta: f64,
    region: &'a RegionConfig,
    quadrature: &'a QuadratureSpec,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        self.bandlimit()?;
        self.geometry()?;
        self.region()?;
        self.quadrature.validate()?;
        if !self.threshold.is_finite() {
            bail!("threshold must be finite");
        }
        let g = &self.grid;
        if g.n_r == 0 || g.n_phi == 0 || g.n_t == 0 {
            bail!("grid sizes must be positive");
        }
        if let Some(r) = g.sphere_radius {
            if !(r > 0.0 && r <= self.beta) {
                bail!("sphere radius must lie in (0, beta]");
            }
        }
        Ok(())
    }

    pub fn bandlimit(&self) -> Result<Bandlimit> {
        Ok(Bandlimit::new(self.max_radial, self.max_angular)?)
    }

    pub fn geometry(&self) -> Result<BallGeometry> {
        Ok(BallGeometry::new(self.beta)?)
    }

    /// The cap angle is converted once here; 180 degrees maps to exactly pi.
    pub fn region(&self) -> Result<Region> {
        let theta = if self.region.theta_deg == 180.0 {
            PI
        } else {
            self.region.theta_deg.to_radians()
        };
        Ok(Region::new(
            self.region.a,
            self.region.b,
            theta,
            &self.geometry()?,
        )?)
    }

    pub fn euler(&self) -> Option<EulerAngles> {
        self.euler_deg
            .map(|e| EulerAngles::from_degrees(e.alpha, e.beta, e.gamma))
    }

    pub fn hash(&self) -> [u8; 32] {
        let part = HashedPart {
            system: self.system,
            max_radial: self.max_radial,
            max_angular: self.max_angular,
            beta: self.beta,
            region: &self.region,
            quadrature: &self.quadrature,
        };
        let json = serde_json::to_vec(&part).expect("config serialises");
        Sha256::digest(&json).into()
    }

    pub fn hash_hex(&self) -> String {
        hex(&self.hash())
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
