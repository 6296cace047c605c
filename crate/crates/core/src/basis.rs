//! Vector basis fields on the ball and their multi-index bookkeeping.
//!
//! A basis field is `g(r xi) = F_{m,n}(r) y^{(i)}_{n,j}(xi)`, the product of
//! a radial Jacobi factor (one of three systems) and a vector spherical
//! harmonic of type 1 (normal), 2 (surface gradient) or 3 (surface curl).
//!
//! Flat indices enumerate `(i, m, n, j)` with `i` slowest, then `m`, then
//! `n`, then `j` from `-n` to `n`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{
    assoc_legendre_column, jacobi_eval, jacobi_sequence, sph_norm, trig_factor, JacobiParams,
    SphHarmIndex,
};

pub type Vec3 = [f64; 3];

/// Tangential fields are only evaluated for `|t| <= 1 - POLE_MARGIN`.
pub const POLE_MARGIN: f64 = 1e-12;

/// The three radial systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemId {
    I,
    II,
    III,
}

impl SystemId {
    pub const ALL: [SystemId; 3] = [SystemId::I, SystemId::II, SystemId::III];

    pub fn code(self) -> u32 {
        match self {
            SystemId::I => 1,
            SystemId::II => 2,
            SystemId::III => 3,
        }
    }

    pub fn from_code(code: u32) -> Result<Self> {
        match code {
            1 => Ok(SystemId::I),
            2 => Ok(SystemId::II),
            3 => Ok(SystemId::III),
            c => Err(Error::InvalidParameter(format!("unknown system code {c}"))),
        }
    }
}

impl std::fmt::Display for SystemId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SystemId::I => "I",
            SystemId::II => "II",
            SystemId::III => "III",
        })
    }
}

impl std::str::FromStr for SystemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(SystemId::I),
            "II" | "2" => Ok(SystemId::II),
            "III" | "3" => Ok(SystemId::III),
            other => Err(Error::InvalidParameter(format!("unknown system '{other}'"))),
        }
    }
}

/// Type `i` of a vector spherical harmonic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FieldType {
    Normal = 1,
    Gradient = 2,
    Curl = 3,
}

impl FieldType {
    pub fn number(self) -> usize {
        self as usize
    }

    /// Smallest admissible angular degree.
    pub fn min_degree(self) -> usize {
        match self {
            FieldType::Normal => 0,
            _ => 1,
        }
    }

    pub fn from_number(i: usize) -> Result<Self> {
        match i {
            1 => Ok(FieldType::Normal),
            2 => Ok(FieldType::Gradient),
            3 => Ok(FieldType::Curl),
            _ => Err(Error::InvalidIndex(format!("type {i} not in 1..=3"))),
        }
    }
}

/// Maximal radial degree `M` and angular degree `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bandlimit {
    max_radial: usize,
    max_angular: usize,
}

impl Bandlimit {
    pub fn new(max_radial: usize, max_angular: usize) -> Result<Self> {
        if max_angular < 1 {
            return Err(Error::InvalidParameter(
                "maximal angular degree must be at least 1".into(),
            ));
        }
        Ok(Self {
            max_radial,
            max_angular,
        })
    }

    pub fn max_radial(&self) -> usize {
        self.max_radial
    }

    pub fn max_angular(&self) -> usize {
        self.max_angular
    }

    fn per_radial(&self, field: FieldType) -> usize {
        let sq = (self.max_angular + 1) * (self.max_angular + 1);
        match field {
            FieldType::Normal => sq,
            _ => sq - 1,
        }
    }

    /// Number of indices of one type.
    pub fn type_dim(&self, field: FieldType) -> usize {
        (self.max_radial + 1) * self.per_radial(field)
    }

    /// Size of the normal block, `(M+1)(N+1)^2`.
    pub fn normal_dim(&self) -> usize {
        self.type_dim(FieldType::Normal)
    }

    /// Size of the tangential block, `2(M+1)((N+1)^2 - 1)`.
    pub fn tangential_dim(&self) -> usize {
        2 * self.type_dim(FieldType::Gradient)
    }

    /// `Z = (M+1)(3(N+1)^2 - 2)`.
    pub fn dim(&self) -> usize {
        (self.max_radial + 1) * (3 * (self.max_angular + 1) * (self.max_angular + 1) - 2)
    }

    fn type_offset(&self, field: FieldType) -> usize {
        match field {
            FieldType::Normal => 0,
            FieldType::Gradient => self.normal_dim(),
            FieldType::Curl => self.normal_dim() + self.type_dim(FieldType::Gradient),
        }
    }

    pub fn contains(&self, idx: &BasisIndex) -> bool {
        idx.m <= self.max_radial && idx.n <= self.max_angular
    }

    /// Position of `idx` in the canonical enumeration.
    pub fn flat_index(&self, idx: &BasisIndex) -> Result<usize> {
        if !self.contains(idx) {
            return Err(Error::InvalidIndex(format!(
                "{idx:?} outside bandlimit M={}, N={}",
                self.max_radial, self.max_angular
            )));
        }
        let n = idx.n;
        let within = n * n + (idx.j + n as i32) as usize;
        let shift = if idx.field == FieldType::Normal { 0 } else { 1 };
        Ok(self.type_offset(idx.field) + idx.m * self.per_radial(idx.field) + within - shift)
    }

    /// Inverse of [`Bandlimit::flat_index`].
    pub fn unflat_index(&self, p: usize) -> Result<BasisIndex> {
        if p >= self.dim() {
            return Err(Error::InvalidIndex(format!(
                "flat index {p} outside [0, {})",
                self.dim()
            )));
        }
        let (field, mut rest) = if p < self.normal_dim() {
            (FieldType::Normal, p)
        } else if p < self.type_offset(FieldType::Curl) {
            (FieldType::Gradient, p - self.normal_dim())
        } else {
            (FieldType::Curl, p - self.type_offset(FieldType::Curl))
        };
        let per = self.per_radial(field);
        let m = rest / per;
        rest %= per;
        if field != FieldType::Normal {
            rest += 1;
        }
        let n = (rest as f64).sqrt() as usize;
        // guard against rounding in the square root
        let n = if (n + 1) * (n + 1) <= rest {
            n + 1
        } else if n * n > rest {
            n - 1
        } else {
            n
        };
        let j = (rest - n * n) as i32 - n as i32;
        Ok(BasisIndex { field, m, n, j })
    }

    /// All indices in canonical order.
    pub fn indices(&self) -> impl Iterator<Item = BasisIndex> + '_ {
        [FieldType::Normal, FieldType::Gradient, FieldType::Curl]
            .into_iter()
            .flat_map(move |field| {
                (0..=self.max_radial).flat_map(move |m| {
                    (field.min_degree()..=self.max_angular).flat_map(move |n| {
                        (-(n as i32)..=n as i32).map(move |j| BasisIndex { field, m, n, j })
                    })
                })
            })
    }
}

/// Multi-index `(i, m, n, j)` of a basis field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisIndex {
    pub field: FieldType,
    pub m: usize,
    pub n: usize,
    pub j: i32,
}

impl BasisIndex {
    pub fn new(field: FieldType, m: usize, n: usize, j: i32) -> Result<Self> {
        if n < field.min_degree() {
            return Err(Error::InvalidIndex(format!(
                "type {} requires n >= 1",
                field.number()
            )));
        }
        if j.unsigned_abs() as usize > n {
            return Err(Error::InvalidIndex(format!(
                "|j| = {} exceeds n = {n}",
                j.abs()
            )));
        }
        Ok(Self { field, m, n, j })
    }

    pub fn harmonic(&self) -> SphHarmIndex {
        SphHarmIndex {
            n: self.n,
            j: self.j,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallGeometry {
    pub radius: f64,
}

impl BallGeometry {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(Self { radius })
    }

    pub fn unit() -> Self {
        Self { radius: 1.0 }
    }
}

/// A point `x = r xi(phi, t)` in polar coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallPoint {
    pub r: f64,
    pub phi: f64,
    pub t: f64,
}

impl BallPoint {
    pub fn to_cartesian(&self) -> Vec3 {
        let s = (1.0 - self.t * self.t).max(0.0).sqrt();
        [
            self.r * s * self.phi.cos(),
            self.r * s * self.phi.sin(),
            self.r * self.t,
        ]
    }

    /// Polar coordinates of a Cartesian point; the origin maps to `t = 1`.
    pub fn from_cartesian(x: Vec3) -> Self {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if r == 0.0 {
            return Self {
                r: 0.0,
                phi: 0.0,
                t: 1.0,
            };
        }
        let mut phi = x[1].atan2(x[0]);
        if phi < 0.0 {
            phi += 2.0 * PI;
        }
        Self {
            r,
            phi,
            t: (x[2] / r).clamp(-1.0, 1.0),
        }
    }
}

/// Local orthonormal frame `(eps_r, eps_phi, eps_t)`.
pub fn local_frame(phi: f64, t: f64) -> [Vec3; 3] {
    let s = (1.0 - t * t).max(0.0).sqrt();
    let (sp, cp) = phi.sin_cos();
    [[s * cp, s * sp, t], [-sp, cp, 0.0], [-t * cp, -t * sp, s]]
}

fn jacobi_beta(sys: SystemId, n: usize) -> f64 {
    match sys {
        SystemId::I => n as f64 + 0.5,
        SystemId::II => 2.0,
        SystemId::III => n as f64 - 0.5,
    }
}

/// Radial factor `F_{m,n}(r)` of a system.
pub fn radial_eval(sys: SystemId, m: usize, n: usize, r: f64, geom: &BallGeometry) -> Result<f64> {
    let beta = geom.radius;
    if !(0.0..=beta).contains(&r) {
        return Err(Error::Domain(format!("radius {r} outside [0, {beta}]")));
    }
    let rho = r / beta;
    let b3 = beta * beta * beta;
    Ok(match sys {
        SystemId::I => {
            let norm = ((4 * m + 2 * n + 3) as f64 / b3).sqrt();
            let p = jacobi_eval(
                JacobiParams::new(m, 0.0, jacobi_beta(sys, n)),
                2.0 * rho * rho - 1.0,
            );
            norm * p * rho.powi(n as i32)
        }
        SystemId::II => {
            let norm = ((2 * m + 3) as f64 / b3).sqrt();
            norm * jacobi_eval(JacobiParams::new(m, 0.0, 2.0), 2.0 * rho - 1.0)
        }
        SystemId::III => {
            if n == 0 && r == 0.0 {
                return Err(Error::Domain(
                    "system III radial factor with n = 0 is singular at the origin".into(),
                ));
            }
            let norm = ((4 * m + 2 * n + 1) as f64 / b3).sqrt();
            let p = jacobi_eval(
                JacobiParams::new(m, 0.0, jacobi_beta(sys, n)),
                2.0 * rho * rho - 1.0,
            );
            norm * p * rho.powi(n as i32 - 1)
        }
    })
}

/// All `F_{m,n}(r)` for `m <= M`, `n <= N`, stored at `m * (N+1) + n`.
pub fn radial_table(
    sys: SystemId,
    bandlimit: &Bandlimit,
    r: f64,
    geom: &BallGeometry,
) -> Result<Vec<f64>> {
    let beta = geom.radius;
    if !(0.0..=beta).contains(&r) {
        return Err(Error::Domain(format!("radius {r} outside [0, {beta}]")));
    }
    let (mm, nn) = (bandlimit.max_radial(), bandlimit.max_angular());
    let rho = r / beta;
    let b3 = beta * beta * beta;
    let mut out = vec![0.0; (mm + 1) * (nn + 1)];
    match sys {
        SystemId::II => {
            let seq = jacobi_sequence(mm, 0.0, 2.0, 2.0 * rho - 1.0);
            for m in 0..=mm {
                let v = ((2 * m + 3) as f64 / b3).sqrt() * seq[m];
                for n in 0..=nn {
                    out[m * (nn + 1) + n] = v;
                }
            }
        }
        SystemId::I | SystemId::III => {
            if sys == SystemId::III && r == 0.0 {
                return Err(Error::Domain(
                    "system III radial factor with n = 0 is singular at the origin".into(),
                ));
            }
            let u = 2.0 * rho * rho - 1.0;
            for n in 0..=nn {
                let seq = jacobi_sequence(mm, 0.0, jacobi_beta(sys, n), u);
                let (offset, power) = match sys {
                    SystemId::I => (3, rho.powi(n as i32)),
                    _ => (1, rho.powi(n as i32 - 1)),
                };
                for m in 0..=mm {
                    let norm = ((4 * m + 2 * n + offset) as f64 / b3).sqrt();
                    out[m * (nn + 1) + n] = norm * seq[m] * power;
                }
            }
        }
    }
    Ok(out)
}

/// Scalar harmonic values and surface-gradient components at one point.
///
/// For every `(n, j)` with `n <= N` the table holds `Y`, the longitudinal
/// component `A = (1-t^2)^{-1/2} dY/dphi` and the polar component
/// `B = (1-t^2)^{1/2} dY/dt`, so that `grad* Y = eps_phi A + eps_t B` and
/// `L* Y = -eps_phi B + eps_t A`.
#[derive(Debug, Clone)]
pub struct AngularTable {
    max_angular: usize,
    frame: [Vec3; 3],
    values: Vec<f64>,
    lon: Vec<f64>,
    pol: Vec<f64>,
}

impl AngularTable {
    pub fn new(max_angular: usize, phi: f64, t: f64, tangential: bool) -> Result<Self> {
        if !(-1.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [-1, 1]")));
        }
        if tangential && t.abs() > 1.0 - POLE_MARGIN {
            return Err(Error::Domain(format!(
                "tangential fields are not evaluated at the pole (t = {t})"
            )));
        }
        let size = (max_angular + 1) * (max_angular + 1);
        let mut values = vec![0.0; size];
        let (mut lon, mut pol) = if tangential {
            (vec![0.0; size], vec![0.0; size])
        } else {
            (Vec::new(), Vec::new())
        };
        let w = 1.0 - t * t;
        let s = w.sqrt();
        let inv_sqrt_2pi = 1.0 / (2.0 * PI).sqrt();
        for mu in 0..=max_angular {
            let col = assoc_legendre_column(max_angular, mu, t);
            let signs: &[i32] = if mu == 0 { &[0] } else { &[-1, 1] };
            for &sg in signs {
                let j = sg * mu as i32;
                let c = trig_factor(j, phi);
                let dc = j as f64 * trig_factor(-j, phi);
                for n in mu..=max_angular {
                    let k = n * n + (j + n as i32) as usize;
                    let b = sph_norm(n, j) * inv_sqrt_2pi;
                    values[k] = b * col[n] * c;
                    if tangential {
                        let lower = if n >= 1 { col[n - 1] } else { 0.0 };
                        let weighted = (n + mu) as f64 * lower - n as f64 * t * col[n];
                        lon[k] = b * col[n] * dc / s;
                        pol[k] = b * c * weighted / s;
                    }
                }
            }
        }
        Ok(Self {
            max_angular,
            frame: local_frame(phi, t),
            values,
            lon,
            pol,
        })
    }

    pub fn frame(&self) -> &[Vec3; 3] {
        &self.frame
    }

    fn slot(&self, n: usize, j: i32) -> usize {
        debug_assert!(n <= self.max_angular);
        n * n + (j + n as i32) as usize
    }

    pub fn scalar(&self, n: usize, j: i32) -> f64 {
        self.values[self.slot(n, j)]
    }

    /// Vector spherical harmonic `y^{(i)}_{n,j}` in Cartesian components.
    pub fn vector(&self, field: FieldType, n: usize, j: i32) -> Vec3 {
        let k = self.slot(n, j);
        let [er, ephi, et] = &self.frame;
        match field {
            FieldType::Normal => scale(er, self.values[k]),
            FieldType::Gradient | FieldType::Curl => {
                assert!(!self.lon.is_empty(), "table built without tangential data");
                let norm = 1.0 / ((n * (n + 1)) as f64).sqrt();
                let (a, b) = (self.lon[k] * norm, self.pol[k] * norm);
                if field == FieldType::Gradient {
                    add(&scale(ephi, a), &scale(et, b))
                } else {
                    add(&scale(ephi, -b), &scale(et, a))
                }
            }
        }
    }
}

#[inline]
fn scale(v: &Vec3, s: f64) -> Vec3 {
    [v[0] * s, v[1] * s, v[2] * s]
}

#[inline]
fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Vector spherical harmonic of type `field` at `xi(phi, t)`.
pub fn vector_sph_harm(field: FieldType, idx: SphHarmIndex, phi: f64, t: f64) -> Result<Vec3> {
    if idx.n < field.min_degree() {
        return Err(Error::InvalidIndex(format!(
            "type {} requires n >= 1",
            field.number()
        )));
    }
    let table = AngularTable::new(idx.n, phi, t, field != FieldType::Normal)?;
    Ok(table.vector(field, idx.n, idx.j))
}

fn check_point(sys: SystemId, geom: &BallGeometry, p: &BallPoint) -> Result<()> {
    if !(0.0..=geom.radius).contains(&p.r) {
        return Err(Error::Domain(format!(
            "radius {} outside [0, {}]",
            p.r, geom.radius
        )));
    }
    if p.r == 0.0 && sys != SystemId::I {
        return Err(Error::Domain(format!(
            "system {sys} is not defined at the origin"
        )));
    }
    Ok(())
}

/// `g^{(sys, i)}_{m,n,j}` at one point.
pub fn basis_field_eval(
    sys: SystemId,
    geom: &BallGeometry,
    idx: BasisIndex,
    p: BallPoint,
) -> Result<Vec3> {
    check_point(sys, geom, &p)?;
    let radial = radial_eval(sys, idx.m, idx.n, p.r, geom)?;
    let y = vector_sph_harm(idx.field, idx.harmonic(), p.phi, p.t)?;
    Ok(scale(&y, radial))
}

/// Evaluates `sum_p coeffs[p] g_p` at each point, in input order.
pub fn synthesize(
    sys: SystemId,
    geom: &BallGeometry,
    bandlimit: &Bandlimit,
    coeffs: &[f64],
    points: &[BallPoint],
) -> Result<Vec<Vec3>> {
    if coeffs.len() != bandlimit.dim() {
        return Err(Error::DimensionMismatch {
            expected: bandlimit.dim(),
            actual: coeffs.len(),
        });
    }
    let terms: Vec<(BasisIndex, f64)> = bandlimit
        .indices()
        .zip(coeffs)
        .filter(|(_, c)| **c != 0.0)
        .map(|(idx, c)| (idx, *c))
        .collect();
    let tangential = terms.iter().any(|(idx, _)| idx.field != FieldType::Normal);
    let nn = bandlimit.max_angular();
    points
        .par_iter()
        .map(|p| {
            if terms.is_empty() {
                return Ok([0.0; 3]);
            }
            check_point(sys, geom, p)?;
            let radial = radial_table(sys, bandlimit, p.r, geom)?;
            let table = AngularTable::new(nn, p.phi, p.t, tangential)?;
            let mut acc = [0.0; 3];
            for (idx, c) in &terms {
                let f = c * radial[idx.m * (nn + 1) + idx.n];
                let y = table.vector(idx.field, idx.n, idx.j);
                acc[0] += f * y[0];
                acc[1] += f * y[1];
                acc[2] += f * y[2];
            }
            Ok(acc)
        })
        .collect()
}
