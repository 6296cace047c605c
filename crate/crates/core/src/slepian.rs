//! Eigen-decomposition of the localisation matrix into Slepian fields.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{dot, synthesize, BallGeometry, BallPoint, Bandlimit, SystemId, Vec3};
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, MAX_QL_ITERATIONS};
use crate::locmat::{
    radial_integral, trace_from_diagonal, BlockId, BlockKind, LocalisationMatrix, Region,
};
use crate::quadrature::{ConeRule, QuadratureSpec, TensorOrders};

/// Conventional midpoint between concentrated and non-concentrated fields.
pub const DEFAULT_THRESHOLD: f64 = 0.5;
/// Where the sorted spectra of the reference experiments cross the trace.
pub const OBSERVED_THRESHOLD: f64 = 0.4;

/// One eigenpair, with the coefficient vector stored on its block's support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlepianFunction {
    pub lambda: f64,
    pub block: BlockId,
    /// Position of the block in canonical block order.
    pub block_position: usize,
    /// Rank inside the block, descending eigenvalue.
    pub within: usize,
    pub support: Vec<usize>,
    pub values: Vec<f64>,
}

impl SlepianFunction {
    /// Dense coefficient vector of length `dim`.
    pub fn dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (&p, &v) in self.support.iter().zip(&self.values) {
            out[p] = v;
        }
        out
    }
}

/// Solved basis, sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct SlepianBasis {
    pub sys: SystemId,
    pub bandlimit: Bandlimit,
    pub region: Region,
    pub geom: BallGeometry,
    pub functions: Vec<SlepianFunction>,
}

impl SlepianBasis {
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.functions.iter().map(|f| f.lambda).collect()
    }

    /// Dense coefficients of the `k`-th function (0-based rank).
    pub fn coefficients(&self, k: usize) -> Vec<f64> {
        self.functions[k].dense(self.bandlimit.dim())
    }

    /// Whether the `k`-th function is a normal field (no tangential
    /// coefficients).
    pub fn is_normal(&self, k: usize) -> bool {
        let f = &self.functions[k];
        let np = self.bandlimit.normal_dim();
        f.support
            .iter()
            .zip(&f.values)
            .all(|(&p, &v)| p < np || v == 0.0)
    }

    pub fn eigenvalue_sum(&self) -> f64 {
        self.functions.iter().map(|f| f.lambda).sum()
    }

    pub fn records(&self) -> Vec<EigenRecord> {
        self.functions
            .iter()
            .enumerate()
            .map(|(k, f)| EigenRecord {
                rank: k + 1,
                lambda: f.lambda,
                block: f.block.to_string(),
                j: f.block.j,
            })
            .collect()
    }
}

/// Serialisable eigenvalue entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenRecord {
    pub rank: usize,
    pub lambda: f64,
    pub block: String,
    pub j: i32,
}

/// Flips `v` so that its largest-magnitude entry (first one on ties) is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Full eigen-decomposition, per order block or on the whole matrix.
pub fn solve(k: &LocalisationMatrix, blockwise: bool) -> Result<SlepianBasis> {
    let blocks: Vec<(BlockId, Vec<usize>, crate::linalg::SymMatrix)> = if blockwise {
        k.reorder_blockdiag()
            .into_iter()
            .map(|b| (b.id, b.indices, b.matrix))
            .collect()
    } else {
        vec![(
            BlockId {
                kind: BlockKind::Full,
                j: 0,
            },
            (0..k.dim()).collect(),
            k.to_dense(),
        )]
    };

    let solved: Vec<Vec<SlepianFunction>> = blocks
        .par_iter()
        .enumerate()
        .map(|(position, (id, indices, matrix))| {
            let eig =
                symmetric_eigen(matrix, MAX_QL_ITERATIONS).ok_or_else(|| Error::NoConvergence {
                    block: id.to_string(),
                })?;
            Ok(eig
                .values
                .iter()
                .zip(eig.vectors)
                .rev()
                .enumerate()
                .map(|(within, (&lambda, mut v))| {
                    let norm = crate::linalg::norm(&v);
                    v.iter_mut().for_each(|x| *x /= norm);
                    fix_sign(&mut v);
                    SlepianFunction {
                        lambda,
                        block: *id,
                        block_position: position,
                        within,
                        support: indices.clone(),
                        values: v,
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut functions: Vec<SlepianFunction> = solved.into_iter().flatten().collect();
    functions.sort_by(|a, b| {
        b.lambda
            .total_cmp(&a.lambda)
            .then(a.block_position.cmp(&b.block_position))
            .then(a.within.cmp(&b.within))
    });
    Ok(SlepianBasis {
        sys: k.sys,
        bandlimit: k.bandlimit,
        region: k.region,
        geom: k.geom,
        functions,
    })
}

/// Trace-based Shannon number and the closed-form sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShannonReport {
    pub s: f64,
    pub s_closed_form: f64,
    pub count_above_threshold: Option<usize>,
    pub threshold: f64,
}

/// `trace(K)` without assembling the off-diagonal entries.
pub fn shannon_number(
    sys: SystemId,
    bandlimit: &Bandlimit,
    region: &Region,
    geom: &BallGeometry,
    spec: &QuadratureSpec,
) -> Result<f64> {
    trace_from_diagonal(sys, bandlimit, region, geom, spec)
}

/// Shannon number from the summed closed forms, on the unit ball with the
/// region radii scaled by `1 / beta`.
///
/// Degree 0 carries only the normal type, so its angular sum has
/// multiplicity 1 instead of 3.
pub fn shannon_closed_form(
    sys: SystemId,
    bandlimit: &Bandlimit,
    region: &Region,
    geom: &BallGeometry,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let unit = BallGeometry::unit();
    let scaled = Region {
        inner: region.inner / geom.radius,
        outer: region.outer / geom.radius,
        half_angle: region.half_angle,
    };
    let cap = 1.0 - scaled.cap_boundary();
    let (mm, nn) = (bandlimit.max_radial(), bandlimit.max_angular());
    let mut sum = 0.0;
    match sys {
        SystemId::II => {
            for m in 0..=mm {
                let i = radial_integral(sys, m, m, 0, 0, &scaled, &unit, spec)?;
                sum += (2 * m + 3) as f64 * i;
            }
            let count = 3 * (nn + 1) * (nn + 1) - 2;
            sum *= count as f64 / 16.0;
        }
        SystemId::I | SystemId::III => {
            let (offset, power) = if sys == SystemId::I {
                (3, 3.5)
            } else {
                (1, 2.5)
            };
            for m in 0..=mm {
                for n in 0..=nn {
                    let mult = if n == 0 { 1.0 } else { 3.0 };
                    let i = radial_integral(sys, m, m, n, n, &scaled, &unit, spec)?;
                    let w = (2 * n + 1) as f64 * (4 * m + 2 * n + offset) as f64
                        / 2f64.powf(n as f64 + power);
                    sum += mult * w * i;
                }
            }
        }
    }
    Ok(cap * sum)
}

pub fn shannon_report(
    sys: SystemId,
    bandlimit: &Bandlimit,
    region: &Region,
    geom: &BallGeometry,
    spec: &QuadratureSpec,
    threshold: f64,
    basis: Option<&SlepianBasis>,
) -> Result<ShannonReport> {
    Ok(ShannonReport {
        s: shannon_number(sys, bandlimit, region, geom, spec)?,
        s_closed_form: shannon_closed_form(sys, bandlimit, region, geom, spec)?,
        count_above_threshold: basis.map(|b| classify(b, threshold).well.len()),
        threshold,
    })
}

/// Ranks split at a threshold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub well: Vec<usize>,
    pub poor: Vec<usize>,
}

pub fn classify(basis: &SlepianBasis, threshold: f64) -> Classification {
    let (well, poor) = (0..basis.len()).partition(|&k| basis.functions[k].lambda >= threshold);
    Classification { well, poor }
}

/// Samples the fields of several coefficient vectors at the nodes of the
/// product rule over `region`, then returns their Gram matrix on `region`.
pub fn region_gram(
    sys: SystemId,
    geom: &BallGeometry,
    bandlimit: &Bandlimit,
    coeffs: &[Vec<f64>],
    region: &Region,
) -> Result<Vec<Vec<f64>>> {
    let orders = TensorOrders::for_bandlimit(bandlimit.max_radial(), bandlimit.max_angular());
    let rule = ConeRule::new(region, orders);
    let points: Vec<BallPoint> = rule
        .nodes()
        .map(|(r, phi, t, _)| BallPoint { r, phi, t })
        .collect();
    let weights: Vec<f64> = rule.nodes().map(|n| n.3).collect();
    let fields: Vec<Vec<Vec3>> = coeffs
        .iter()
        .map(|c| synthesize(sys, geom, bandlimit, c, &points))
        .collect::<Result<_>>()?;
    let k = coeffs.len();
    let mut gram = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in a..k {
            let v: f64 = weights
                .par_iter()
                .zip(fields[a].par_iter().zip(fields[b].par_iter()))
                .map(|(w, (x, y))| w * dot(x, y))
                .sum();
            gram[a][b] = v;
            gram[b][a] = v;
        }
    }
    Ok(gram)
}

/// `||f||^2_{l2(R)} / ||f||^2_{l2(B)}`, numerator by volume quadrature and
/// denominator by Parseval.
pub fn energy_ratio(
    sys: SystemId,
    geom: &BallGeometry,
    bandlimit: &Bandlimit,
    coeffs: &[f64],
    region: &Region,
) -> Result<f64> {
    let denom: f64 = coeffs.iter().map(|c| c * c).sum();
    if denom == 0.0 {
        return Err(Error::ZeroCoefficients);
    }
    let gram = region_gram(sys, geom, bandlimit, &[coeffs.to_vec()], region)?;
    Ok(gram[0][0] / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMatrix;
    use crate::locmat::assemble;
    use approx::assert_abs_diff_eq;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn unit() -> BallGeometry {
        BallGeometry::unit()
    }

    fn cone(theta_deg: f64) -> Region {
        Region::new(0.25, 0.75, theta_deg.to_radians(), &unit()).unwrap()
    }

    #[test]
    fn identity_solve() {
        let b = Bandlimit::new(1, 2).unwrap();
        let g = unit();
        let k = assemble(SystemId::II, &b, &Region::full_ball(&g), &g, &spec()).unwrap();
        let basis = solve(&k, true).unwrap();
        assert_eq!(basis.len(), b.dim());
        assert!(basis
            .functions
            .iter()
            .all(|f| (f.lambda - 1.0).abs() < 1e-10));

        // an exact identity keeps the canonical basis
        let exact = LocalisationMatrix::from_blocks(
            SystemId::II,
            b,
            Region::full_ball(&g),
            g,
            SymMatrix::identity(b.normal_dim()),
            SymMatrix::identity(b.tangential_dim()),
        )
        .unwrap();
        let basis = solve(&exact, true).unwrap();
        let mut seen = vec![false; b.dim()];
        for f in &basis.functions {
            assert_eq!(f.lambda, 1.0);
            let c = f.dense(b.dim());
            let nz: Vec<usize> = (0..c.len()).filter(|&i| c[i] != 0.0).collect();
            assert_eq!(nz.len(), 1);
            assert_eq!(c[nz[0]], 1.0);
            seen[nz[0]] = true;
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn blockwise_matches_dense() {
        let b = Bandlimit::new(2, 3).unwrap();
        for sys in SystemId::ALL {
            let k = assemble(sys, &b, &cone(40.0), &unit(), &spec()).unwrap();
            let blockwise = solve(&k, true).unwrap();
            let dense = solve(&k, false).unwrap();
            for (x, y) in blockwise.eigenvalues().iter().zip(dense.eigenvalues()) {
                assert_abs_diff_eq!(*x, y, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn eigenpairs_are_orthonormal_with_small_residual() {
        let b = Bandlimit::new(3, 4).unwrap();
        let k = assemble(SystemId::I, &b, &cone(45.0), &unit(), &spec()).unwrap();
        let dense = k.to_dense();
        let basis = solve(&k, true).unwrap();
        let vals = basis.eigenvalues();
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        assert!(vals.iter().all(|v| (-1e-8..=1.0 + 1e-8).contains(v)));
        assert_abs_diff_eq!(
            basis.eigenvalue_sum(),
            k.trace(),
            epsilon = 1e-8 * b.dim() as f64
        );
        let scale = dense.max_abs() * b.dim() as f64;
        let vecs: Vec<Vec<f64>> = (0..b.dim()).map(|i| basis.coefficients(i)).collect();
        for i in 0..10 {
            let kv = dense.matvec(&vecs[i]);
            let res: f64 = kv
                .iter()
                .zip(&vecs[i])
                .map(|(a, v)| (a - vals[i] * v).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(res <= 1e-9 * scale);
        }
        for i in 0..b.dim() {
            for j in i..b.dim() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((crate::linalg::dot(&vecs[i], &vecs[j]) - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sign_rule() {
        let mut v = vec![0.1, -0.9, 0.3];
        fix_sign(&mut v);
        assert_eq!(v, vec![-0.1, 0.9, -0.3]);
        let mut w = vec![-0.5, 0.5];
        fix_sign(&mut w);
        assert_eq!(w, vec![0.5, -0.5]);
    }

    #[test]
    fn shannon_small_cases() {
        let b = Bandlimit::new(2, 3).unwrap();
        for sys in SystemId::ALL {
            let full =
                shannon_number(sys, &b, &Region::full_ball(&unit()), &unit(), &spec()).unwrap();
            assert_abs_diff_eq!(full, b.dim() as f64, epsilon = 1e-9);
            for theta in [15.0, 45.0, 120.0] {
                let s = shannon_number(sys, &b, &cone(theta), &unit(), &spec()).unwrap();
                let c = shannon_closed_form(sys, &b, &cone(theta), &unit(), &spec()).unwrap();
                assert_abs_diff_eq!(s, c, epsilon = 1e-8 * b.dim() as f64);
            }
        }
    }

    #[test]
    fn closed_form_uses_normalised_radii() {
        let b = Bandlimit::new(2, 3).unwrap();
        let g = BallGeometry::new(3.0).unwrap();
        let r = Region::new(0.75, 2.25, 0.6, &g).unwrap();
        for sys in SystemId::ALL {
            let s = shannon_number(sys, &b, &r, &g, &spec()).unwrap();
            let c = shannon_closed_form(sys, &b, &r, &g, &spec()).unwrap();
            assert_abs_diff_eq!(s, c, epsilon = 1e-9);
        }
    }

    #[test]
    fn classify_edges() {
        let b = Bandlimit::new(1, 2).unwrap();
        let k = assemble(SystemId::I, &b, &cone(45.0), &unit(), &spec()).unwrap();
        let basis = solve(&k, true).unwrap();
        assert_eq!(
            classify(&basis, 0.0).well.len(),
            basis.len() - basis.functions.iter().filter(|f| f.lambda < 0.0).count()
        );
        assert!(classify(&basis, 1.0 + 1e-9).well.is_empty());
        let c = classify(&basis, DEFAULT_THRESHOLD);
        assert_eq!(c.well.len() + c.poor.len(), basis.len());
    }

    #[test]
    fn energy_ratio_cases() {
        let g = unit();
        let b = Bandlimit::new(2, 3).unwrap();
        let mut e = vec![0.0; b.dim()];
        e[b.normal_dim() + 4] = 2.0;
        e[3] = -1.0;
        for sys in SystemId::ALL {
            let full = energy_ratio(sys, &g, &b, &e, &Region::full_ball(&g)).unwrap();
            assert_abs_diff_eq!(full, 1.0, epsilon = 1e-8);
            let thin = Region::new(0.5, 0.5 + 1e-13, 1.0, &g).unwrap();
            assert!(energy_ratio(sys, &g, &b, &e, &thin).unwrap().abs() < 1e-10);
        }
        assert!(matches!(
            energy_ratio(SystemId::I, &g, &b, &vec![0.0; b.dim()], &cone(30.0)),
            Err(Error::ZeroCoefficients)
        ));
    }

    #[test]
    fn eigenvalues_match_energy_ratio() {
        let g = unit();
        let b = Bandlimit::new(2, 4).unwrap();
        let region = cone(50.0);
        for sys in SystemId::ALL {
            let k = assemble(sys, &b, &region, &g, &spec()).unwrap();
            let basis = solve(&k, true).unwrap();
            let top: Vec<Vec<f64>> = (0..4).map(|i| basis.coefficients(i)).collect();
            let gram = region_gram(sys, &g, &b, &top, &region).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    let expect = if i == j {
                        basis.functions[i].lambda
                    } else {
                        0.0
                    };
                    assert!((gram[i][j] - expect).abs() < 1e-8, "{sys} {i} {j}");
                }
            }
        }
    }
}
