//! Localisation matrix of the partial cone `a <= r <= b`, `cos(theta) <= t <= 1`.
//!
//! Entries are products of a radial Jacobi integral and an angular factor
//! built from associated Legendre integrals and boundary values at
//! `t = cos(theta)`. The matrix splits into a normal block `P` (type 1) and
//! a tangential block `Q` (types 2 and 3); within each block only entries
//! with `j' = j` (or `j' = -j` for the mixed 2/3 entries) are non-zero.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BallGeometry, Bandlimit, BasisIndex, FieldType, SystemId};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::quadrature::{integrate_soft, QuadratureSpec};
use crate::specfun::{
    assoc_legendre, jacobi_eval, legendre_weighted_deriv, sph_norm, JacobiParams,
};

/// Partial cone around the north pole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub inner: f64,
    pub outer: f64,
    pub half_angle: f64,
}

impl Region {
    pub fn new(inner: f64, outer: f64, half_angle: f64, geom: &BallGeometry) -> Result<Self> {
        if !(0.0 <= inner && inner < outer && outer <= geom.radius) {
            return Err(Error::InvalidParameter(format!(
                "radii must satisfy 0 <= a < b <= {} (got a = {inner}, b = {outer})",
                geom.radius
            )));
        }
        if !(half_angle > 0.0 && half_angle <= PI) {
            return Err(Error::InvalidParameter(format!(
                "cap half-angle must lie in (0, pi], got {half_angle}"
            )));
        }
        Ok(Self {
            inner,
            outer,
            half_angle,
        })
    }

    pub fn full_ball(geom: &BallGeometry) -> Self {
        Self {
            inner: 0.0,
            outer: geom.radius,
            half_angle: PI,
        }
    }

    /// `cos(theta)`, exactly `-1` for `theta = pi`.
    pub fn cap_boundary(&self) -> f64 {
        if self.half_angle == PI {
            -1.0
        } else {
            self.half_angle.cos()
        }
    }

    /// `sin^2(theta)` as `(1 - c)(1 + c)`, exactly zero for `theta = pi`.
    pub fn sin2_boundary(&self) -> f64 {
        let c = self.cap_boundary();
        (1.0 - c) * (1.0 + c)
    }

    pub fn is_full_ball(&self, geom: &BallGeometry) -> bool {
        self.inner == 0.0 && self.outer == geom.radius && self.half_angle == PI
    }
}

/// Normalisation product of two radial factors.
pub fn radial_norm_factor(sys: SystemId, m: usize, mp: usize, n: usize, np: usize) -> f64 {
    let (m, mp, n, np) = (m as f64, mp as f64, n as f64, np as f64);
    match sys {
        SystemId::I => ((4.0 * m + 2.0 * n + 3.0) * (4.0 * mp + 2.0 * np + 3.0)
            / 2f64.powf(n + np + 5.0))
        .sqrt(),
        SystemId::II => ((2.0 * m + 3.0) * (2.0 * mp + 3.0) / 64.0).sqrt(),
        SystemId::III => ((4.0 * m + 2.0 * n + 1.0) * (4.0 * mp + 2.0 * np + 1.0)
            / 2f64.powf(n + np + 3.0))
        .sqrt(),
    }
}

/// Radial Jacobi integral in the variable `u`.
///
/// For systems I and III the integrand carries a half-integer power of
/// `u + 1`; it is integrated after substituting `u = s^2 - 1`, which turns
/// it into a polynomial in `s` and removes the endpoint singularity of
/// system III at `n = n' = 0`.
#[allow(clippy::too_many_arguments)]
pub fn radial_integral(
    sys: SystemId,
    m: usize,
    mp: usize,
    n: usize,
    np: usize,
    region: &Region,
    geom: &BallGeometry,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let beta = geom.radius;
    let (a, b) = (region.inner / beta, region.outer / beta);
    match sys {
        SystemId::II => {
            let p = JacobiParams::new(m, 0.0, 2.0);
            let q = JacobiParams::new(mp, 0.0, 2.0);
            integrate_soft(
                |u| jacobi_eval(p, u) * jacobi_eval(q, u) * (u + 1.0) * (u + 1.0),
                2.0 * a - 1.0,
                2.0 * b - 1.0,
                spec,
            )
        }
        SystemId::I | SystemId::III => {
            let (shift, power) = if sys == SystemId::I {
                (0.5, (n + np + 2) as i32)
            } else {
                (-0.5, (n + np) as i32)
            };
            let p = JacobiParams::new(m, 0.0, n as f64 + shift);
            let q = JacobiParams::new(mp, 0.0, np as f64 + shift);
            let s2 = std::f64::consts::SQRT_2;
            integrate_soft(
                |s| {
                    let u = s * s - 1.0;
                    2.0 * jacobi_eval(p, u) * jacobi_eval(q, u) * s.powi(power)
                },
                s2 * a,
                s2 * b,
                spec,
            )
        }
    }
}

/// `int_{cos theta}^1 P_{n,mu}(t) P_{n',mu}(t) dt`.
pub fn legendre_product_integral(
    n: usize,
    np: usize,
    mu: usize,
    theta: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if mu > n.min(np) {
        return Err(Error::InvalidIndex(format!(
            "order {mu} exceeds min({n}, {np})"
        )));
    }
    let c = if theta == PI { -1.0 } else { theta.cos() };
    integrate_soft(
        |t| assoc_legendre(n, mu, t) * assoc_legendre(np, mu, t),
        c,
        1.0,
        spec,
    )
}

fn check_types(p: &BasisIndex, q: &BasisIndex, want: (FieldType, FieldType)) -> Result<()> {
    if (p.field, q.field) != want {
        return Err(Error::InvalidIndex(format!(
            "entry expects types ({}, {}), got ({}, {})",
            want.0.number(),
            want.1.number(),
            p.field.number(),
            q.field.number()
        )));
    }
    Ok(())
}

/// Angular part of a (1,1) entry, given the Legendre cap integral.
fn normal_angular(n: usize, np: usize, j: i32, legendre: f64) -> f64 {
    sph_norm(n, j) * sph_norm(np, j) * legendre
}

/// Angular part of a (2,2) or (3,3) entry. `p_n` is `P_{n,|j|}(c)` and
/// `w_np` is `(1 - c^2) P'_{n',|j|}(c)`.
fn tangential_angular(n: usize, np: usize, j: i32, legendre: f64, p_n: f64, w_np: f64) -> f64 {
    let ln = (n * (n + 1)) as f64;
    let lnp = (np * (np + 1)) as f64;
    sph_norm(n, j)
        * sph_norm(np, j)
        * ((lnp / ln).sqrt() * legendre - p_n * w_np / (ln * lnp).sqrt())
}

/// Angular part of a (2,3) entry with `j' = -j`.
fn mixed_angular(n: usize, np: usize, j: i32, p_n: f64, p_np: f64) -> f64 {
    let ln = (n * (n + 1)) as f64;
    let lnp = (np * (np + 1)) as f64;
    sph_norm(n, j) * sph_norm(np, j) * j as f64 / (ln * lnp).sqrt() * p_n * p_np
}

fn radial_factor(
    sys: SystemId,
    p: &BasisIndex,
    q: &BasisIndex,
    region: &Region,
    geom: &BallGeometry,
    spec: &QuadratureSpec,
) -> Result<f64> {
    Ok(radial_norm_factor(sys, p.m, q.m, p.n, q.n)
        * radial_integral(sys, p.m, q.m, p.n, q.n, region, geom, spec)?)
}

/// Entry between two type-1 fields.
pub fn entry_normal(
    sys: SystemId,
    p: &BasisIndex,
    q: &BasisIndex,
    region: &Region,
    geom: &BallGeometry,
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_types(p, q, (FieldType::Normal, FieldType::Normal))?;
    if p.j != q.j {
        return Ok(0.0);
    }
    let mu = p.j.unsigned_abs() as usize;
    let leg = legendre_product_integral(p.n, q.n, mu, region.half_angle, spec)?;
    Ok(radial_factor(sys, p, q, region, geom, spec)? * normal_angular(p.n, q.n, p.j, leg))
}

/// Entry between two fields of the same tangential type (2 or 3).
pub fn entry_tangential_diag(
    sys: SystemId,
    p: &BasisIndex,
    q: &BasisIndex,
    region: &Region,
    geom: &BallGeometry,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if p.field == FieldType::Normal || p.field != q.field {
        return Err(Error::InvalidIndex(
            "tangential entry expects types (2, 2) or (3, 3)".into(),
        ));
    }
    if p.j != q.j {
        return Ok(0.0);
    }
    let mu = p.j.unsigned_abs() as usize;
    let c = region.cap_boundary();
    let leg = legendre_product_integral(p.n, q.n, mu, region.half_angle, spec)?;
    let ang = tangential_angular(
        p.n,
        q.n,
        p.j,
        leg,
        assoc_legendre(p.n, mu, c),
        legendre_weighted_deriv(q.n, mu, c),
    );
    Ok(radial_factor(sys, p, q, region, geom, spec)? * ang)
}

/// Entry between a type-2 field `p` and a type-3 field `q`.
pub fn entry_mixed(
    sys: SystemId,
    p: &BasisIndex,
    q: &BasisIndex,
    region: &Region,
    geom: &BallGeometry,
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_types(p, q, (FieldType::Gradient, FieldType::Curl))?;
    if p.j == 0 || q.j != -p.j {
        return Ok(0.0);
    }
    let mu = p.j.unsigned_abs() as usize;
    let c = region.cap_boundary();
    let ang = mixed_angular(
        p.n,
        q.n,
        p.j,
        assoc_legendre(p.n, mu, c),
        assoc_legendre(q.n, mu, c),
    );
    Ok(radial_factor(sys, p, q, region, geom, spec)? * ang)
}

/// Any entry `K_{p,q}`, dispatching on the pair of types.
pub fn entry(
    sys: SystemId,
    p: &BasisIndex,
    q: &BasisIndex,
    region: &Region,
    geom: &BallGeometry,
    spec: &QuadratureSpec,
) -> Result<f64> {
    use FieldType::*;
    match (p.field, q.field) {
        (Normal, Normal) => entry_normal(sys, p, q, region, geom, spec),
        (Normal, _) | (_, Normal) => Ok(0.0),
        (Gradient, Gradient) | (Curl, Curl) => entry_tangential_diag(sys, p, q, region, geom, spec),
        (Gradient, Curl) => entry_mixed(sys, p, q, region, geom, spec),
        (Curl, Gradient) => entry_mixed(sys, q, p, region, geom, spec),
    }
}

/// Precomputed radial and angular ingredients shared by many entries.
struct EntryTables {
    mm: usize,
    nn: usize,
    /// `a * I` at `((m * (M+1) + m') * (N+1) + n) * (N+1) + n'`.
    radial: Vec<f64>,
    /// Cap integrals at `(mu * (N+1) + n) * (N+1) + n'`.
    legendre: Vec<f64>,
    /// `P_{n,mu}(c)` at `mu * (N+1) + n`.
    boundary: Vec<f64>,
    /// `(1 - c^2) P'_{n,mu}(c)` at `mu * (N+1) + n`.
    boundary_deriv: Vec<f64>,
}

impl EntryTables {
    fn build(
        sys: SystemId,
        bandlimit: &Bandlimit,
        region: &Region,
        geom: &BallGeometry,
        spec: &QuadratureSpec,
        diagonal_only: bool,
    ) -> Result<Self> {
        let (mm, nn) = (bandlimit.max_radial(), bandlimit.max_angular());
        let n1 = nn + 1;
        let m1 = mm + 1;

        let radial_keys: Vec<(usize, usize, usize, usize)> = (0..m1)
            .flat_map(|m| {
                (0..m1).flat_map(move |mp| {
                    (0..n1).flat_map(move |n| (0..n1).map(move |np| (m, mp, n, np)))
                })
            })
            .collect();
        let radial = radial_keys
            .par_iter()
            .map(|&(m, mp, n, np)| {
                if diagonal_only && (m != mp || n != np) {
                    return Ok(0.0);
                }
                let v = radial_integral(sys, m, mp, n, np, region, geom, spec).map_err(|e| {
                    let idx = |m, n| BasisIndex {
                        field: FieldType::Normal,
                        m,
                        n,
                        j: 0,
                    };
                    entry_error(bandlimit, idx(m, n), idx(mp, np), e)
                })?;
                Ok(radial_norm_factor(sys, m, mp, n, np) * v)
            })
            .collect::<Result<Vec<f64>>>()?;

        let legendre_keys: Vec<(usize, usize, usize)> = (0..n1)
            .flat_map(|mu| (0..n1).flat_map(move |n| (0..n1).map(move |np| (mu, n, np))))
            .collect();
        let legendre = legendre_keys
            .par_iter()
            .map(|&(mu, n, np)| {
                if n < mu || np < mu || (diagonal_only && n != np) {
                    return Ok(0.0);
                }
                legendre_product_integral(n, np, mu, region.half_angle, spec).map_err(|e| {
                    let idx = |n| BasisIndex {
                        field: FieldType::Normal,
                        m: 0,
                        n,
                        j: mu as i32,
                    };
                    entry_error(bandlimit, idx(n), idx(np), e)
                })
            })
            .collect::<Result<Vec<f64>>>()?;

        let c = region.cap_boundary();
        let mut boundary = vec![0.0; n1 * n1];
        let mut boundary_deriv = vec![0.0; n1 * n1];
        for mu in 0..n1 {
            for n in mu..n1 {
                boundary[mu * n1 + n] = assoc_legendre(n, mu, c);
                boundary_deriv[mu * n1 + n] = legendre_weighted_deriv(n, mu, c);
            }
        }
        Ok(Self {
            mm,
            nn,
            radial,
            legendre,
            boundary,
            boundary_deriv,
        })
    }

    fn radial(&self, p: &BasisIndex, q: &BasisIndex) -> f64 {
        let (m1, n1) = (self.mm + 1, self.nn + 1);
        self.radial[((p.m * m1 + q.m) * n1 + p.n) * n1 + q.n]
    }

    fn legendre(&self, n: usize, np: usize, mu: usize) -> f64 {
        let n1 = self.nn + 1;
        self.legendre[(mu * n1 + n) * n1 + np]
    }

    fn boundary(&self, n: usize, mu: usize) -> f64 {
        self.boundary[mu * (self.nn + 1) + n]
    }

    fn boundary_deriv(&self, n: usize, mu: usize) -> f64 {
        self.boundary_deriv[mu * (self.nn + 1) + n]
    }

    /// Entry for a pair already known to be structurally non-zero.
    fn value(&self, p: &BasisIndex, q: &BasisIndex) -> f64 {
        let mu = p.j.unsigned_abs() as usize;
        let ang = match (p.field, q.field) {
            (FieldType::Normal, FieldType::Normal) => {
                normal_angular(p.n, q.n, p.j, self.legendre(p.n, q.n, mu))
            }
            (FieldType::Gradient, FieldType::Curl) => mixed_angular(
                p.n,
                q.n,
                p.j,
                self.boundary(p.n, mu),
                self.boundary(q.n, mu),
            ),
            _ => tangential_angular(
                p.n,
                q.n,
                p.j,
                self.legendre(p.n, q.n, mu),
                self.boundary(p.n, mu),
                self.boundary_deriv(q.n, mu),
            ),
        };
        self.radial(p, q) * ang
    }
}

fn entry_error(bandlimit: &Bandlimit, p: BasisIndex, q: BasisIndex, source: Error) -> Error {
    Error::Entry {
        row: bandlimit.flat_index(&p).unwrap_or(usize::MAX),
        col: bandlimit.flat_index(&q).unwrap_or(usize::MAX),
        source: Box::new(source),
    }
}

/// Kind of a diagonal block after reordering by order `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockKind {
    /// Normal fields of order `j`.
    Normal,
    /// Type-2 fields of order 0.
    Gradient,
    /// Type-3 fields of order 0.
    Curl,
    /// Type-2 fields of order `j` with type-3 fields of order `-j`.
    Tangential,
    /// The whole matrix, unreordered.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockId {
    pub kind: BlockKind,
    pub j: i32,
}

impl std::fmt::Display for BlockId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            BlockKind::Normal => write!(f, "P{}", self.j),
            BlockKind::Gradient => write!(f, "B0"),
            BlockKind::Curl => write!(f, "C0"),
            BlockKind::Tangential => write!(f, "Q{}", self.j),
            BlockKind::Full => write!(f, "K"),
        }
    }
}

/// A principal submatrix together with the flat indices it covers.
#[derive(Debug, Clone)]
pub struct Block {
    pub id: BlockId,
    pub indices: Vec<usize>,
    pub matrix: SymMatrix,
}

/// Orders `0, -1, 1, -2, 2, ..., -N, N`.
pub fn order_sequence(max_angular: usize) -> Vec<i32> {
    let mut out = vec![0];
    for k in 1..=max_angular as i32 {
        out.push(-k);
        out.push(k);
    }
    out
}

/// The localisation matrix as its normal and tangential blocks.
#[derive(Debug, Clone)]
pub struct LocalisationMatrix {
    pub sys: SystemId,
    pub bandlimit: Bandlimit,
    pub region: Region,
    pub geom: BallGeometry,
    p: SymMatrix,
    q: SymMatrix,
}

impl LocalisationMatrix {
    pub fn from_blocks(
        sys: SystemId,
        bandlimit: Bandlimit,
        region: Region,
        geom: BallGeometry,
        p: SymMatrix,
        q: SymMatrix,
    ) -> Result<Self> {
        if p.dim() != bandlimit.normal_dim() {
            return Err(Error::DimensionMismatch {
                expected: bandlimit.normal_dim(),
                actual: p.dim(),
            });
        }
        if q.dim() != bandlimit.tangential_dim() {
            return Err(Error::DimensionMismatch {
                expected: bandlimit.tangential_dim(),
                actual: q.dim(),
            });
        }
        Ok(Self {
            sys,
            bandlimit,
            region,
            geom,
            p,
            q,
        })
    }

    pub fn normal_block(&self) -> &SymMatrix {
        &self.p
    }

    pub fn tangential_block(&self) -> &SymMatrix {
        &self.q
    }

    pub fn normal_block_mut(&mut self) -> &mut SymMatrix {
        &mut self.p
    }

    pub fn tangential_block_mut(&mut self) -> &mut SymMatrix {
        &mut self.q
    }

    pub fn dim(&self) -> usize {
        self.bandlimit.dim()
    }

    /// `K_{row,col}` in flat indexing.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let np = self.p.dim();
        match (row < np, col < np) {
            (true, true) => self.p.get(row, col),
            (false, false) => self.q.get(row - np, col - np),
            _ => 0.0,
        }
    }

    pub fn trace(&self) -> f64 {
        self.p.trace() + self.q.trace()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = self.p.diagonal();
        d.extend(self.q.diagonal());
        d
    }

    /// Dense `Z x Z` copy.
    pub fn to_dense(&self) -> SymMatrix {
        let z = self.dim();
        let np = self.p.dim();
        let mut k = SymMatrix::zeros(z);
        for i in 0..np {
            for j in 0..np {
                k.set(i, j, self.p.get(i, j));
            }
        }
        for i in 0..self.q.dim() {
            for j in 0..self.q.dim() {
                k.set(np + i, np + j, self.q.get(i, j));
            }
        }
        k
    }

    /// Index sets of the per-order blocks, in canonical block order.
    pub fn block_layout(&self) -> Vec<(BlockId, Vec<usize>)> {
        block_layout(&self.bandlimit)
    }

    /// Per-order diagonal blocks: normal blocks `P_j` followed by
    /// `B_0`, `C_0`, `Q_{-1}`, `Q_1`, ..., `Q_{-N}`, `Q_N`.
    pub fn reorder_blockdiag(&self) -> Vec<Block> {
        let np = self.p.dim();
        block_layout(&self.bandlimit)
            .into_iter()
            .map(|(id, indices)| {
                let matrix = if id.kind == BlockKind::Normal {
                    self.p.submatrix(&indices)
                } else {
                    let local: Vec<usize> = indices.iter().map(|i| i - np).collect();
                    self.q.submatrix(&local)
                };
                Block {
                    id,
                    indices,
                    matrix,
                }
            })
            .collect()
    }

    /// Tangential blocks only.
    pub fn tangential_blocks(&self) -> Vec<Block> {
        self.reorder_blockdiag()
            .into_iter()
            .filter(|b| b.id.kind != BlockKind::Normal)
            .collect()
    }
}

fn block_layout(bandlimit: &Bandlimit) -> Vec<(BlockId, Vec<usize>)> {
    let (mm, nn) = (bandlimit.max_radial(), bandlimit.max_angular());
    let collect = |field: FieldType, j: i32| -> Vec<usize> {
        let mut out = Vec::new();
        for m in 0..=mm {
            for n in field.min_degree().max(j.unsigned_abs() as usize)..=nn {
                out.push(
                    bandlimit
                        .flat_index(&BasisIndex { field, m, n, j })
                        .expect("index inside bandlimit"),
                );
            }
        }
        out
    };
    let orders = order_sequence(nn);
    let mut layout = Vec::with_capacity(2 * orders.len() + 1);
    for &j in &orders {
        layout.push((
            BlockId {
                kind: BlockKind::Normal,
                j,
            },
            collect(FieldType::Normal, j),
        ));
    }
    for &j in &orders {
        if j == 0 {
            layout.push((
                BlockId {
                    kind: BlockKind::Gradient,
                    j: 0,
                },
                collect(FieldType::Gradient, 0),
            ));
            layout.push((
                BlockId {
                    kind: BlockKind::Curl,
                    j: 0,
                },
                collect(FieldType::Curl, 0),
            ));
        } else {
            let mut idx = collect(FieldType::Gradient, j);
            idx.extend(collect(FieldType::Curl, -j));
            layout.push((
                BlockId {
                    kind: BlockKind::Tangential,
                    j,
                },
                idx,
            ));
        }
    }
    layout
}

/// Assembles the full matrix from the analytic entries.
pub fn assemble(
    sys: SystemId,
    bandlimit: &Bandlimit,
    region: &Region,
    geom: &BallGeometry,
    spec: &QuadratureSpec,
) -> Result<LocalisationMatrix> {
    spec.validate()?;
    let tables = EntryTables::build(sys, bandlimit, region, geom, spec, false)?;
    let (mm, nn) = (bandlimit.max_radial(), bandlimit.max_angular());
    let np = bandlimit.normal_dim();
    let nq = bandlimit.tangential_dim();

    // upper triangle row by row, then mirrored
    let fill = |matrix: &mut SymMatrix, offset: usize| {
        let dim = matrix.dim();
        matrix
            .as_mut_slice()
            .par_chunks_mut(dim)
            .enumerate()
            .for_each(|(local_row, row)| {
                let global = local_row + offset;
                let p = bandlimit
                    .unflat_index(global)
                    .expect("row inside bandlimit");
                let mut targets: Vec<(FieldType, i32)> = vec![(p.field, p.j)];
                if p.field == FieldType::Gradient && p.j != 0 {
                    targets.push((FieldType::Curl, -p.j));
                }
                for (field, j) in targets {
                    let lowest = field.min_degree().max(j.unsigned_abs() as usize);
                    for m in 0..=mm {
                        for n in lowest..=nn {
                            let q = BasisIndex { field, m, n, j };
                            let col = bandlimit.flat_index(&q).expect("column inside bandlimit");
                            if col >= global {
                                row[col - offset] = tables.value(&p, &q);
                            }
                        }
                    }
                }
            });
        matrix.mirror_upper();
    };

    let mut p = SymMatrix::zeros(np);
    fill(&mut p, 0);
    let mut q = SymMatrix::zeros(nq);
    fill(&mut q, np);
    LocalisationMatrix::from_blocks(sys, *bandlimit, *region, *geom, p, q)
}

/// `trace(K)` from the diagonal entries alone.
pub fn trace_from_diagonal(
    sys: SystemId,
    bandlimit: &Bandlimit,
    region: &Region,
    geom: &BallGeometry,
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.validate()?;
    let tables = EntryTables::build(sys, bandlimit, region, geom, spec, true)?;
    let mut sum = 0.0;
    for idx in bandlimit.indices() {
        let v = tables.value(&idx, &idx);
        // types 2 and 3 share their diagonal; count the type-3 copy via type 2
        match idx.field {
            FieldType::Normal => sum += v,
            FieldType::Gradient => sum += 2.0 * v,
            FieldType::Curl => {}
        }
    }
    Ok(sum)
}
