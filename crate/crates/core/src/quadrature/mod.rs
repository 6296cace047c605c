//! One-dimensional adaptive Gauss-Kronrod integration and fixed tensor rules.
//!
//! [`integrate_adaptive`] is a worst-first bisection scheme in the style of
//! QUADPACK's QAG: each subinterval carries a Kronrod value and a
//! `|K - G|`-based error estimate, and the subinterval with the largest
//! estimate is split until the global estimate meets the tolerance.
//!
//! [`tensor_integrate_cone`] is a fixed-order product rule over a partial
//! cone, used as a brute-force reference for the analytic matrix entries.

mod gk_tables;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::locmat::Region;
use gk_tables::*;

/// Estimates below this are accepted when the integrator stops early.
pub const SOFT_ACCEPT_ERROR: f64 = 1e-9;

/// Settings of the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subintervals: usize,
    pub gk_points: usize,
}

impl Default for QuadratureSpec {
    /// 61-point rule, `1e-12` absolute and relative, 1000 subintervals.
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_subintervals: 1000,
            gk_points: 61,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "quadrature tolerances must be positive".into(),
            ));
        }
        if self.max_subintervals == 0 {
            return Err(Error::InvalidParameter(
                "max_subintervals must be at least 1".into(),
            ));
        }
        tables(self.gk_points).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub subintervals_used: usize,
}

/// A Gauss-Kronrod pair on `[-1, 1]`.
///
/// `nodes` are the Kronrod abscissae in increasing order. `gauss_weights` is
/// zero at nodes that belong only to the Kronrod extension.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussKronrodRule {
    pub nodes: Vec<f64>,
    pub gauss_weights: Vec<f64>,
    pub kronrod_weights: Vec<f64>,
}

type Tables = (&'static [f64], &'static [f64], &'static [f64]);

fn tables(points: usize) -> Result<Tables> {
    Ok(match points {
        15 => (&XGK15, &WG15, &WGK15),
        21 => (&XGK21, &WG21, &WGK21),
        31 => (&XGK31, &WG31, &WGK31),
        41 => (&XGK41, &WG41, &WGK41),
        51 => (&XGK51, &WG51, &WGK51),
        61 => (&XGK61, &WG61, &WGK61),
        other => return Err(Error::UnsupportedRule(other)),
    })
}

/// Expands the packed half-rule tables into full node and weight lists.
pub fn gauss_kronrod_nodes(points: usize) -> Result<GaussKronrodRule> {
    let (xgk, wg, wgk) = tables(points)?;
    let half = xgk.len();
    let gauss_at = |i: usize| -> f64 {
        if i % 2 == 1 {
            wg[(i - 1) / 2]
        } else if i == half - 1 && half % 2 == 0 {
            wg[half / 2 - 1]
        } else {
            0.0
        }
    };
    let mut nodes = Vec::with_capacity(points);
    let mut gauss_weights = Vec::with_capacity(points);
    let mut kronrod_weights = Vec::with_capacity(points);
    for i in 0..half {
        nodes.push(-xgk[i]);
        gauss_weights.push(gauss_at(i));
        kronrod_weights.push(wgk[i]);
    }
    for i in (0..half - 1).rev() {
        nodes.push(xgk[i]);
        gauss_weights.push(gauss_at(i));
        kronrod_weights.push(wgk[i]);
    }
    Ok(GaussKronrodRule {
        nodes,
        gauss_weights,
        kronrod_weights,
    })
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
    at_floor: bool,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    // max-heap on error; ties go to the leftmost piece
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.lo.total_cmp(&self.lo))
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> (f64, bool) {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let floor = 50.0 * f64::EPSILON * res_abs;
        if floor >= scaled {
            return (floor, true);
        }
    }
    (scaled, false)
}

fn apply_rule<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, t: &Tables) -> Piece {
    let (xgk, wg, wgk) = *t;
    let n = xgk.len();
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let f_center = f(center);

    let mut res_gauss = if n % 2 == 0 {
        f_center * wg[n / 2 - 1]
    } else {
        0.0
    };
    let mut res_kronrod = f_center * wgk[n - 1];
    let mut res_abs = res_kronrod.abs();
    let mut fv1 = [0.0f64; 32];
    let mut fv2 = [0.0f64; 32];

    for i in 0..n - 1 {
        let x = half * xgk[i];
        let a = f(center - x);
        let b = f(center + x);
        fv1[i] = a;
        fv2[i] = b;
        if i % 2 == 1 {
            res_gauss += wg[(i - 1) / 2] * (a + b);
        }
        res_kronrod += wgk[i] * (a + b);
        res_abs += wgk[i] * (a.abs() + b.abs());
    }
    let mean = 0.5 * res_kronrod;
    let mut res_asc = wgk[n - 1] * (f_center - mean).abs();
    for i in 0..n - 1 {
        res_asc += wgk[i] * ((fv1[i] - mean).abs() + (fv2[i] - mean).abs());
    }
    let err = (res_kronrod - res_gauss) * half;
    let scale = half.abs();
    let (error, at_floor) = rescale_error(err, res_abs * scale, res_asc * scale);
    Piece {
        lo,
        hi,
        value: res_kronrod * half,
        error,
        at_floor,
    }
}

/// Adaptive Gauss-Kronrod integration of `f` over `[lo, hi]`.
///
/// Stops once the summed error estimate is at most
/// `max(abs_tol, rel_tol * |value|)`. Running out of subintervals yields
/// [`Error::QuadratureBudget`]; if the worst remaining piece is already at
/// its floating-point noise floor the same error is returned early, since
/// further bisection cannot help. Both carry the best value found.
pub fn integrate_adaptive<F>(
    f: F,
    lo: f64,
    hi: f64,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64,
{
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(Error::InvalidParameter(format!(
            "integration bounds must satisfy lo < hi (got {lo}, {hi})"
        )));
    }
    let t = tables(spec.gk_points)?;
    let first = apply_rule(&f, lo, hi, &t);
    let mut heap = BinaryHeap::with_capacity(spec.max_subintervals + 1);
    let mut total = first.value;
    let mut total_err = first.error;
    heap.push(first);

    let finish = |heap: BinaryHeap<Piece>| -> (f64, f64, usize) {
        let mut pieces = heap.into_vec();
        pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let v = pieces.iter().map(|p| p.value).sum();
        let e = pieces.iter().map(|p| p.error).sum();
        (v, e, pieces.len())
    };

    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::Domain(format!(
                "integrand is not finite on [{lo}, {hi}]"
            )));
        }
        let tol = spec.abs_tol.max(spec.rel_tol * total.abs());
        if total_err <= tol {
            let (value, error_estimate, subintervals_used) = finish(heap);
            return Ok(QuadratureResult {
                value,
                error_estimate,
                subintervals_used,
            });
        }
        let worst = *heap.peek().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        let unsplittable = !(worst.lo < mid && mid < worst.hi);
        if heap.len() >= spec.max_subintervals || worst.at_floor || unsplittable {
            let (value, error_estimate, subintervals) = finish(heap);
            return Err(Error::QuadratureBudget {
                value,
                error_estimate,
                subintervals,
                noise_floor: worst.at_floor,
            });
        }
        heap.pop();
        let left = apply_rule(&f, worst.lo, mid, &t);
        let right = apply_rule(&f, mid, worst.hi, &t);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
}

/// Like [`integrate_adaptive`] but accepts an early stop whose error
/// estimate is below [`SOFT_ACCEPT_ERROR`] or made of rounding error only.
pub fn integrate_soft<F>(f: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    match integrate_adaptive(f, lo, hi, spec) {
        Ok(r) => Ok(r.value),
        Err(Error::QuadratureBudget {
            value,
            error_estimate,
            noise_floor,
            ..
        }) if noise_floor || error_estimate < SOFT_ACCEPT_ERROR => Ok(value),
        Err(e) => Err(e),
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_deriv(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_deriv(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Point counts of the product rule used by [`tensor_integrate_cone`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorOrders {
    pub radial: usize,
    pub longitude: usize,
    pub polar: usize,
}

impl TensorOrders {
    /// Orders that integrate products of two bandlimited fields exactly for
    /// the given degrees.
    pub fn for_bandlimit(max_radial: usize, max_angular: usize) -> Self {
        Self {
            radial: 2 * max_radial + max_angular + 8,
            longitude: 2 * max_angular + 8,
            polar: max_angular + 8,
        }
    }
}

/// A fixed product quadrature rule over a partial cone.
#[derive(Debug, Clone)]
pub struct ConeRule {
    pub radii: Vec<f64>,
    pub radial_weights: Vec<f64>,
    pub longitudes: Vec<f64>,
    pub longitude_weight: f64,
    pub polar: Vec<f64>,
    pub polar_weights: Vec<f64>,
}

impl ConeRule {
    /// Gauss-Legendre in `r` (including the `r^2` Jacobian) and in `t`,
    /// periodic trapezoid in `phi`.
    pub fn new(region: &Region, orders: TensorOrders) -> Self {
        let (xr, wr) = gauss_legendre(orders.radial);
        let half_r = 0.5 * (region.outer - region.inner);
        let mid_r = 0.5 * (region.outer + region.inner);
        let radii: Vec<f64> = xr.iter().map(|x| mid_r + half_r * x).collect();
        let radial_weights = wr
            .iter()
            .zip(&radii)
            .map(|(w, r)| w * half_r * r * r)
            .collect();

        let t_lo = region.cap_boundary();
        let (xt, wt) = gauss_legendre(orders.polar);
        let half_t = 0.5 * (1.0 - t_lo);
        let mid_t = 0.5 * (1.0 + t_lo);
        let polar = xt.iter().map(|x| mid_t + half_t * x).collect();
        let polar_weights = wt.iter().map(|w| w * half_t).collect();

        let nphi = orders.longitude;
        let longitudes = (0..nphi)
            .map(|k| 2.0 * PI * (k as f64 + 0.5) / nphi as f64)
            .collect();
        Self {
            radii,
            radial_weights,
            longitudes,
            longitude_weight: 2.0 * PI / nphi as f64,
            polar,
            polar_weights,
        }
    }

    /// Every `(r, phi, t, weight)` node of the rule.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.radii
            .iter()
            .zip(&self.radial_weights)
            .flat_map(move |(&r, &wr)| {
                self.polar
                    .iter()
                    .zip(&self.polar_weights)
                    .flat_map(move |(&t, &wt)| {
                        self.longitudes
                            .iter()
                            .map(move |&phi| (r, phi, t, wr * wt * self.longitude_weight))
                    })
            })
    }

    pub fn len(&self) -> usize {
        self.radii.len() * self.polar.len() * self.longitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Integrates `f(r, phi, t)` over the partial cone with volume element
/// `r^2 dr dphi dt`.
pub fn tensor_integrate_cone<F>(f: F, region: &Region, orders: TensorOrders) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> Result<f64>,
{
    let rule = ConeRule::new(region, orders);
    let mut acc = 0.0;
    for (r, phi, t, w) in rule.nodes() {
        acc += w * f(r, phi, t)?;
    }
    Ok(acc)
}
