use std::f64::consts::PI;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use ballslep::io::{
    read_coefficients, read_matrix, write_binary, write_coefficients, write_matrix, CoefficientSet,
};
use ballslep::slepian::{shannon_report, EigenRecord, ShannonReport};
use ballslep::{
    assemble, rotation, solve, BallPoint, EulerAngles, LocalisationMatrix, SlepianBasis, SystemId,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{hex, EulerConfig, GridConfig, RunConfig};
use crate::output::{write_csv, write_json};

pub const MATRIX_FILE: &str = "matrix.bin";
pub const MATRIX_META_FILE: &str = "matrix.json";
pub const EIGENVALUES_FILE: &str = "eigenvalues.json";
pub const EIGENVALUES_CSV_FILE: &str = "eigenvalues.csv";
pub const SHANNON_FILE: &str = "shannon.json";
pub const COEFFICIENTS_FILE: &str = "coefficients.bin";
pub const ROTATED_FILE: &str = "rotated_coefficients.bin";
pub const SAMPLES_FILE: &str = "samples.csv";
pub const SAMPLES_META_FILE: &str = "samples.json";

/// Grid points are kept this far from the poles.
pub const POLE_CLAMP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixMeta {
    pub config_hash: String,
    pub system: SystemId,
    #[serde(rename = "M")]
    pub max_radial: usize,
    #[serde(rename = "N")]
    pub max_angular: usize,
    pub a: f64,
    pub b: f64,
    pub theta_deg: f64,
    pub beta: f64,
    pub dim: usize,
    pub p_size: usize,
    pub q_size: usize,
    pub trace: f64,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    pub config_hash: String,
    pub system: SystemId,
    pub shannon: ShannonReport,
    pub eigenvalues: Vec<EigenRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShannonFile {
    pub config_hash: String,
    pub system: SystemId,
    #[serde(rename = "M")]
    pub max_radial: usize,
    #[serde(rename = "N")]
    pub max_angular: usize,
    pub theta_deg: f64,
    pub shannon: ShannonReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSampleRow {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub fx: f64,
    pub fy: f64,
    pub fz: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplesMeta {
    pub config_hash: String,
    pub system: SystemId,
    pub source: String,
    pub lambda: f64,
    pub euler_deg: Option<EulerConfig>,
    pub grid: GridConfig,
    pub rows: usize,
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub csv: bool,
    /// Number of coefficient vectors to store; all if `None`.
    pub keep: Option<usize>,
}

/// Which coefficient vector `evaluate` samples.
#[derive(Debug, Clone)]
pub enum Source {
    /// 1-based rank in the stored solution of the output directory.
    Rank(usize),
    /// 1-based column of a coefficient file.
    File(PathBuf, usize),
}

fn out(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.output_dir.join(name)
}

fn prepared(cfg: &RunConfig) -> Result<()> {
    cfg.validate()
}

fn assemble_config(cfg: &RunConfig) -> Result<LocalisationMatrix> {
    Ok(assemble(
        cfg.system,
        &cfg.bandlimit()?,
        &cfg.region()?,
        &cfg.geometry()?,
        &cfg.quadrature,
    )?)
}

fn matrix_meta(cfg: &RunConfig, k: &LocalisationMatrix) -> MatrixMeta {
    MatrixMeta {
        config_hash: cfg.hash_hex(),
        system: cfg.system,
        max_radial: cfg.max_radial,
        max_angular: cfg.max_angular,
        a: cfg.region.a,
        b: cfg.region.b,
        theta_deg: cfg.region.theta_deg,
        beta: cfg.beta,
        dim: k.dim(),
        p_size: k.normal_block().dim(),
        q_size: k.tangential_block().dim(),
        trace: k.trace(),
        file: MATRIX_FILE.into(),
    }
}

fn store_matrix(cfg: &RunConfig, k: &LocalisationMatrix) -> Result<MatrixMeta> {
    let hash = cfg.hash();
    crate::output::write_atomic(&out(cfg, MATRIX_FILE), |w| Ok(write_matrix(w, k, hash)?))?;
    let meta = matrix_meta(cfg, k);
    write_json(&out(cfg, MATRIX_META_FILE), &meta)?;
    Ok(meta)
}

pub fn cmd_assemble(cfg: &RunConfig) -> Result<MatrixMeta> {
    prepared(cfg)?;
    let k = assemble_config(cfg)?;
    store_matrix(cfg, &k)
}

pub fn load_matrix(path: &Path, cfg: &RunConfig) -> Result<LocalisationMatrix> {
    let mut r =
        BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let (k, hash) = read_matrix(&mut r).with_context(|| format!("reading {}", path.display()))?;
    ensure!(
        hash == cfg.hash(),
        "{} was written for config {}, not {}",
        path.display(),
        hex(&hash),
        cfg.hash_hex()
    );
    Ok(k)
}

/// Stored matrix of the output directory if it matches the configuration,
/// otherwise a fresh assembly that replaces it.
pub fn matrix_for(cfg: &RunConfig) -> Result<LocalisationMatrix> {
    let path = out(cfg, MATRIX_FILE);
    if path.exists() {
        match load_matrix(&path, cfg) {
            Ok(k) => return Ok(k),
            Err(e) => eprintln!("ignoring stored matrix: {e:#}"),
        }
    }
    let k = assemble_config(cfg)?;
    store_matrix(cfg, &k)?;
    Ok(k)
}

pub fn solve_config(cfg: &RunConfig) -> Result<(LocalisationMatrix, SlepianBasis)> {
    let k = matrix_for(cfg)?;
    let basis = solve(&k, true)?;
    Ok((k, basis))
}

pub fn cmd_solve(cfg: &RunConfig, opts: &SolveOptions) -> Result<EigenReport> {
    prepared(cfg)?;
    let (_, basis) = solve_config(cfg)?;
    let shannon = shannon_report(
        cfg.system,
        &cfg.bandlimit()?,
        &cfg.region()?,
        &cfg.geometry()?,
        &cfg.quadrature,
        cfg.threshold,
        Some(&basis),
    )?;
    let report = EigenReport {
        config_hash: cfg.hash_hex(),
        system: cfg.system,
        shannon,
        eigenvalues: basis.records(),
    };
    write_json(&out(cfg, EIGENVALUES_FILE), &report)?;
    if opts.csv {
        write_csv(&out(cfg, EIGENVALUES_CSV_FILE), &report.eigenvalues)?;
    }
    let hash = cfg.hash();
    crate::output::write_atomic(&out(cfg, COEFFICIENTS_FILE), |w| {
        Ok(write_coefficients(w, &basis, opts.keep, hash)?)
    })?;
    Ok(report)
}

pub fn load_eigen_report(path: &Path) -> Result<EigenReport> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn cmd_shannon(cfg: &RunConfig) -> Result<ShannonFile> {
    prepared(cfg)?;
    let shannon = shannon_report(
        cfg.system,
        &cfg.bandlimit()?,
        &cfg.region()?,
        &cfg.geometry()?,
        &cfg.quadrature,
        cfg.threshold,
        None,
    )?;
    let file = ShannonFile {
        config_hash: cfg.hash_hex(),
        system: cfg.system,
        max_radial: cfg.max_radial,
        max_angular: cfg.max_angular,
        theta_deg: cfg.region.theta_deg,
        shannon,
    };
    write_json(&out(cfg, SHANNON_FILE), &file)?;
    Ok(file)
}

/// Hash carried by coefficient files that already include the configured
/// rotation.
pub fn rotated_hash(cfg: &RunConfig, euler: &EulerConfig) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(cfg.hash());
    for v in [euler.alpha, euler.beta, euler.gamma] {
        h.update(v.to_le_bytes());
    }
    h.finalize().into()
}

fn load_coefficients(path: &Path) -> Result<CoefficientSet> {
    let mut r =
        BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    read_coefficients(&mut r).with_context(|| format!("reading {}", path.display()))
}

/// Loads a coefficient file and reports whether it is already rotated by
/// the configured angles. Files of any other configuration are rejected.
pub fn load_coefficients_for(path: &Path, cfg: &RunConfig) -> Result<(CoefficientSet, bool)> {
    let set = load_coefficients(path)?;
    let h = set.header.config_hash;
    if h == cfg.hash() {
        return Ok((set, false));
    }
    if let Some(e) = &cfg.euler_deg {
        if h == rotated_hash(cfg, e) {
            return Ok((set, true));
        }
    }
    bail!(
        "{} was written for config {}, which does not match {}",
        path.display(),
        hex(&h),
        cfg.hash_hex()
    )
}

pub fn cmd_rotate(cfg: &RunConfig, input: Option<&Path>) -> Result<PathBuf> {
    prepared(cfg)?;
    let euler = cfg
        .euler_deg
        .context("rotate needs euler_deg in the config or --euler-deg")?;
    let default_input = out(cfg, COEFFICIENTS_FILE);
    let input = input.unwrap_or(&default_input);
    let set = load_coefficients(input)?;
    ensure!(
        set.header.config_hash == cfg.hash(),
        "{} does not hold unrotated coefficients of config {}",
        input.display(),
        cfg.hash_hex()
    );
    let blocks = rotation::WignerBlocks::new(cfg.max_angular, &cfg.euler().expect("euler present"));
    let bandlimit = cfg.bandlimit()?;
    let rotated: Vec<Vec<f64>> = set
        .vectors
        .iter()
        .map(|v| blocks.apply(&bandlimit, v))
        .collect::<ballslep::Result<_>>()?;
    let k = rotated.len();
    let z = bandlimit.dim();
    let mut flat = vec![0.0; z * k];
    for (col, v) in rotated.iter().enumerate() {
        for (p, x) in v.iter().enumerate() {
            flat[p * k + col] = *x;
        }
    }
    let mut header = set.header.clone();
    header.config_hash = rotated_hash(cfg, &euler);
    let path = out(cfg, ROTATED_FILE);
    crate::output::write_atomic(&path, |w| {
        Ok(write_binary(w, &header, &[&flat, &set.eigenvalues])?)
    })?;
    Ok(path)
}

fn clamp_t(t: f64) -> f64 {
    t.clamp(-1.0 + POLE_CLAMP, 1.0 - POLE_CLAMP)
}

/// Tensor grid: radii `beta * i / n_r` for `i = 1..=n_r` (or the single
/// sphere radius), colatitudes from pole to pole, longitudes `2 pi k / n_phi`.
pub fn grid_points(cfg: &RunConfig) -> Vec<BallPoint> {
    let g = &cfg.grid;
    let radii: Vec<f64> = match g.sphere_radius {
        Some(r) => vec![r],
        None => (1..=g.n_r)
            .map(|i| cfg.beta * i as f64 / g.n_r as f64)
            .collect(),
    };
    let ts: Vec<f64> = if g.n_t == 1 {
        vec![0.0]
    } else {
        (0..g.n_t)
            .map(|i| clamp_t((PI * i as f64 / (g.n_t - 1) as f64).cos()))
            .collect()
    };
    let mut points = Vec::with_capacity(radii.len() * ts.len() * g.n_phi);
    for &r in &radii {
        for &t in &ts {
            for k in 0..g.n_phi {
                let phi = 2.0 * PI * k as f64 / g.n_phi as f64;
                points.push(BallPoint { r, phi, t });
            }
        }
    }
    points
}

pub fn sample_rows(
    cfg: &RunConfig,
    coeffs: &[f64],
    points: &[BallPoint],
) -> Result<Vec<FieldSampleRow>> {
    let fields = ballslep::basis::synthesize(
        cfg.system,
        &cfg.geometry()?,
        &cfg.bandlimit()?,
        coeffs,
        points,
    )?;
    Ok(points
        .iter()
        .zip(&fields)
        .map(|(p, f)| {
            let x = p.to_cartesian();
            FieldSampleRow {
                x: x[0],
                y: x[1],
                z: x[2],
                fx: f[0],
                fy: f[1],
                fz: f[2],
                norm: f[0].hypot(f[1]).hypot(f[2]),
            }
        })
        .collect())
}

/// Samples one coefficient vector on the configured grid, applying the
/// configured rotation unless the loaded file already carries it.
pub fn cmd_evaluate(cfg: &RunConfig, source: &Source) -> Result<Vec<FieldSampleRow>> {
    prepared(cfg)?;
    let (path, column, label) = match source {
        Source::Rank(k) => (out(cfg, COEFFICIENTS_FILE), *k, format!("rank {k}")),
        Source::File(p, c) => (p.clone(), *c, format!("{} column {c}", p.display())),
    };
    let (set, already_rotated) = load_coefficients_for(&path, cfg)?;
    ensure!(
        column >= 1 && column <= set.vectors.len(),
        "{label} is outside the {} stored vectors",
        set.vectors.len()
    );
    let mut coeffs = set.vectors[column - 1].clone();
    if !already_rotated {
        if let Some(angles) = cfg.euler() {
            coeffs = rotation::rotate_coeffs(&cfg.bandlimit()?, &coeffs, &angles)?;
        }
    }
    let points = grid_points(cfg);
    let rows = sample_rows(cfg, &coeffs, &points)?;
    write_csv(&out(cfg, SAMPLES_FILE), &rows)?;
    let meta = SamplesMeta {
        config_hash: cfg.hash_hex(),
        system: cfg.system,
        source: label,
        lambda: set.eigenvalues[column - 1],
        euler_deg: cfg.euler_deg,
        grid: cfg.grid.clone(),
        rows: rows.len(),
    };
    write_json(&out(cfg, SAMPLES_META_FILE), &meta)?;
    Ok(rows)
}

pub fn load_samples(path: &Path) -> Result<Vec<FieldSampleRow>> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    r.deserialize().map(|row| Ok(row?)).collect()
}

pub fn euler_angles(e: &EulerConfig) -> EulerAngles {
    EulerAngles::from_degrees(e.alpha, e.beta, e.gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_avoids_poles_and_origin() {
        let mut cfg = RunConfig::default();
        cfg.grid = GridConfig {
            n_r: 3,
            n_phi: 4,
            n_t: 5,
            sphere_radius: None,
        };
        let pts = grid_points(&cfg);
        assert_eq!(pts.len(), 60);
        assert!(pts
            .iter()
            .all(|p| p.r > 0.0 && p.t.abs() <= 1.0 - POLE_CLAMP));
        assert_eq!(pts.iter().map(|p| p.r).fold(0.0, f64::max), 1.0);
        cfg.grid.sphere_radius = Some(0.5);
        assert!(grid_points(&cfg).iter().all(|p| p.r == 0.5));
    }

    #[test]
    fn rotated_hash_depends_on_angles() {
        let cfg = RunConfig::default();
        let a = EulerConfig {
            alpha: 90.0,
            beta: 90.0,
            gamma: 90.0,
        };
        let b = EulerConfig {
            alpha: 90.0,
            beta: 90.0,
            gamma: 0.0,
        };
        assert_ne!(rotated_hash(&cfg, &a), rotated_hash(&cfg, &b));
        assert_ne!(rotated_hash(&cfg, &a), cfg.hash());
    }
}
