//! Oracle suite run by `ballslep verify`.

use std::f64::consts::PI;

use anyhow::Result;
use ballslep::basis::{basis_field_eval, dot, synthesize};
use ballslep::quadrature::{tensor_integrate_cone, TensorOrders};
use ballslep::rotation::{mat_vec, rotate_coeffs, transpose};
use ballslep::slepian::{energy_ratio, shannon_closed_form};
use ballslep::{
    assemble, BallPoint, Bandlimit, BasisIndex, EulerAngles, FieldType, LocalisationMatrix, Region,
    SlepianBasis,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::commands::solve_config;
use crate::config::RunConfig;
use crate::output::write_json;

pub const VERIFY_FILE: &str = "verify.json";
pub const ENTRY_SAMPLES: usize = 20;
/// Size of the perturbation applied by `--inject-fault`.
pub const FAULT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn new(name: &str, measured: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: measured <= tolerance,
            measured,
            tolerance,
            detail,
        }
    }

    fn failed(name: &str, tolerance: f64, err: anyhow::Error) -> Self {
        Self {
            name: name.into(),
            passed: false,
            measured: f64::NAN,
            tolerance,
            detail: format!("{err:#}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config_hash: String,
    pub all_passed: bool,
    pub fault_injected: bool,
    pub checks: Vec<Check>,
}

fn draw_pair(rng: &mut ChaCha8Rng, b: &Bandlimit, case: usize) -> (BasisIndex, BasisIndex) {
    let (nn, mm) = (b.max_angular(), b.max_radial());
    let (fp, fq) = match case {
        0 => (FieldType::Normal, FieldType::Normal),
        1 => (FieldType::Gradient, FieldType::Gradient),
        2 => (FieldType::Curl, FieldType::Curl),
        _ => (FieldType::Gradient, FieldType::Curl),
    };
    let mixed = case == 3;
    let n = rng.gen_range(fp.min_degree().max(usize::from(mixed))..=nn);
    let mut j = rng.gen_range(-(n as i32)..=n as i32);
    if mixed && j == 0 {
        j = 1;
    }
    let jq = if mixed { -j } else { j };
    let np = rng.gen_range(fq.min_degree().max(jq.unsigned_abs() as usize)..=nn);
    let p = BasisIndex::new(fp, rng.gen_range(0..=mm), n, j).expect("drawn index valid");
    let q = BasisIndex::new(fq, rng.gen_range(0..=mm), np, jq).expect("drawn index valid");
    (p, q)
}

fn perturb(k: &mut LocalisationMatrix, row: usize, col: usize, by: f64) {
    let np = k.normal_block().dim();
    let (block, r, c) = if row < np {
        (k.normal_block_mut(), row, col)
    } else {
        (k.tangential_block_mut(), row - np, col - np)
    };
    let v = block.get(r, c) + by;
    block.set(r, c, v);
    block.set(c, r, v);
}

fn entry_oracle(cfg: &RunConfig, k: &mut LocalisationMatrix, inject: bool) -> Result<Check> {
    let bandlimit = cfg.bandlimit()?;
    let region = cfg.region()?;
    let geom = cfg.geometry()?;
    let orders = TensorOrders::for_bandlimit(bandlimit.max_radial(), bandlimit.max_angular());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for s in 0..ENTRY_SAMPLES {
        let (p, q) = draw_pair(&mut rng, &bandlimit, s % 4);
        let (row, col) = (bandlimit.flat_index(&p)?, bandlimit.flat_index(&q)?);
        if inject && s == 0 {
            perturb(k, row, col, FAULT);
        }
        let brute = tensor_integrate_cone(
            |r, phi, t| {
                let x = BallPoint { r, phi, t };
                Ok(dot(
                    &basis_field_eval(cfg.system, &geom, p, x)?,
                    &basis_field_eval(cfg.system, &geom, q, x)?,
                ))
            },
            &region,
            orders,
        )?;
        worst = worst.max((k.get(row, col) - brute).abs());
    }
    Ok(Check::new(
        "entry_oracle",
        worst,
        1e-6,
        format!("{ENTRY_SAMPLES} entries against volume quadrature"),
    ))
}

fn top_per_block(basis: &SlepianBasis, count: usize) -> Vec<usize> {
    let normal = (0..basis.len()).filter(|&k| basis.is_normal(k)).take(count);
    let tangential = (0..basis.len())
        .filter(|&k| !basis.is_normal(k))
        .take(count);
    normal.chain(tangential).collect()
}

fn energy_oracle(cfg: &RunConfig, basis: &SlepianBasis) -> Result<Check> {
    let mut worst: f64 = 0.0;
    let picked = top_per_block(basis, 2);
    for &k in &picked {
        let ratio = energy_ratio(
            cfg.system,
            &cfg.geometry()?,
            &cfg.bandlimit()?,
            &basis.coefficients(k),
            &cfg.region()?,
        )?;
        worst = worst.max((ratio - basis.functions[k].lambda).abs());
    }
    Ok(Check::new(
        "energy_ratio",
        worst,
        1e-6,
        format!("{} functions, |ratio - lambda|", picked.len()),
    ))
}

fn identity_check(cfg: &RunConfig) -> Result<Check> {
    let geom = cfg.geometry()?;
    let k = assemble(
        cfg.system,
        &cfg.bandlimit()?,
        &Region::full_ball(&geom),
        &geom,
        &cfg.quadrature,
    )?;
    let mut worst: f64 = 0.0;
    for block in [k.normal_block(), k.tangential_block()] {
        for i in 0..block.dim() {
            for j in 0..block.dim() {
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((block.get(i, j) - expect).abs());
            }
        }
    }
    Ok(Check::new(
        "full_ball_identity",
        worst,
        1e-10,
        "max |K - I| on the whole ball".into(),
    ))
}

fn shannon_check(cfg: &RunConfig, k: &LocalisationMatrix, basis: &SlepianBasis) -> Result<Check> {
    let trace = k.trace();
    let sum = basis.eigenvalue_sum();
    let closed = shannon_closed_form(
        cfg.system,
        &cfg.bandlimit()?,
        &cfg.region()?,
        &cfg.geometry()?,
        &cfg.quadrature,
    )?;
    let worst = (trace - sum).abs().max((trace - closed).abs());
    Ok(Check::new(
        "shannon_trace",
        worst,
        1e-8 * trace.abs().max(1.0),
        format!("trace {trace:.10}, eigenvalue sum {sum:.10}, closed form {closed:.10}"),
    ))
}

fn rotation_check(cfg: &RunConfig, basis: &SlepianBasis) -> Result<Check> {
    let angles = cfg
        .euler()
        .unwrap_or(EulerAngles::new(PI / 2.0, PI / 2.0, PI / 2.0));
    let r = angles.matrix();
    let rt = transpose(&r);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let beta = cfg.beta;
    let points: Vec<BallPoint> = (0..50)
        .map(|_| BallPoint {
            r: beta * rng.gen_range(0.05..0.95),
            phi: rng.gen_range(0.0..2.0 * PI),
            t: rng.gen_range(-0.95..0.95),
        })
        .collect();
    let back: Vec<BallPoint> = points
        .iter()
        .map(|p| BallPoint::from_cartesian(mat_vec(&rt, &p.to_cartesian())))
        .collect();
    let (bandlimit, geom) = (cfg.bandlimit()?, cfg.geometry()?);
    let mut worst: f64 = 0.0;
    for k in top_per_block(basis, 1) {
        let c = basis.coefficients(k);
        let rc = rotate_coeffs(&bandlimit, &c, &angles)?;
        let lhs = synthesize(cfg.system, &geom, &bandlimit, &rc, &points)?;
        let orig = synthesize(cfg.system, &geom, &bandlimit, &c, &back)?;
        for (l, o) in lhs.iter().zip(&orig) {
            let rhs = mat_vec(&r, o);
            for i in 0..3 {
                worst = worst.max((l[i] - rhs[i]).abs());
            }
        }
    }
    Ok(Check::new(
        "rotation_equivariance",
        worst,
        1e-8,
        "top function of P and Q at 50 points".into(),
    ))
}

/// Runs every check; a check that errors is reported as failed.
pub fn run_checks(cfg: &RunConfig, inject_fault: bool) -> Result<VerifyReport> {
    cfg.validate()?;
    let (mut k, basis) = solve_config(cfg)?;
    let mut checks = vec![
        entry_oracle(cfg, &mut k, inject_fault)
            .unwrap_or_else(|e| Check::failed("entry_oracle", 1e-6, e)),
        energy_oracle(cfg, &basis).unwrap_or_else(|e| Check::failed("energy_ratio", 1e-6, e)),
        identity_check(cfg).unwrap_or_else(|e| Check::failed("full_ball_identity", 1e-10, e)),
    ];
    checks.push(
        shannon_check(cfg, &k, &basis).unwrap_or_else(|e| Check::failed("shannon_trace", 1e-8, e)),
    );
    checks.push(
        rotation_check(cfg, &basis)
            .unwrap_or_else(|e| Check::failed("rotation_equivariance", 1e-8, e)),
    );
    Ok(VerifyReport {
        config_hash: cfg.hash_hex(),
        all_passed: checks.iter().all(|c| c.passed),
        fault_injected: inject_fault,
        checks,
    })
}

pub fn cmd_verify(cfg: &RunConfig, inject_fault: bool) -> Result<VerifyReport> {
    let report = run_checks(cfg, inject_fault)?;
    write_json(&cfg.output_dir.join(VERIFY_FILE), &report)?;
    Ok(report)
}
