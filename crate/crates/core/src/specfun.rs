//! Scalar special functions in the geomathematical conventions used by the
//! ball bases: Jacobi polynomials, associated Legendre functions without the
//! Condon-Shortley phase, and real fully normalised spherical harmonics.
//!
//! All routines evaluate by upward three-term recurrences in the degree with
//! the order held fixed. Degrees used by the library are small (a few dozen
//! at most), so no scaled variants are needed.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Degree and parameters of a Jacobi polynomial `P_m^{(alpha, beta)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiParams {
    pub degree: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl JacobiParams {
    pub fn new(degree: usize, alpha: f64, beta: f64) -> Self {
        Self {
            degree,
            alpha,
            beta,
        }
    }
}

/// Evaluates `P_m^{(alpha, beta)}(u)`.
///
/// Normalised so that `P_m(1) = binom(m + alpha, m)`.
pub fn jacobi_eval(params: JacobiParams, u: f64) -> f64 {
    let JacobiParams {
        degree,
        alpha,
        beta,
    } = params;
    let mut prev = 1.0;
    if degree == 0 {
        return prev;
    }
    let mut cur = (alpha + 1.0) + 0.5 * (alpha + beta + 2.0) * (u - 1.0);
    for n in 2..=degree {
        let next = jacobi_step(n, alpha, beta, u, cur, prev);
        prev = cur;
        cur = next;
    }
    cur
}

/// All values `P_0(u), ..., P_max(u)` of one Jacobi family.
pub fn jacobi_sequence(max_degree: usize, alpha: f64, beta: f64, u: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(max_degree + 1);
    out.push(1.0);
    if max_degree == 0 {
        return out;
    }
    out.push((alpha + 1.0) + 0.5 * (alpha + beta + 2.0) * (u - 1.0));
    for n in 2..=max_degree {
        let next = jacobi_step(n, alpha, beta, u, out[n - 1], out[n - 2]);
        out.push(next);
    }
    out
}

#[inline]
fn jacobi_step(n: usize, alpha: f64, beta: f64, u: f64, p1: f64, p2: f64) -> f64 {
    let n = n as f64;
    let s = 2.0 * n + alpha + beta;
    let a1 = 2.0 * n * (n + alpha + beta) * (s - 2.0);
    let a2 = (s - 1.0) * (alpha * alpha - beta * beta);
    let a3 = (s - 2.0) * (s - 1.0) * s;
    let a4 = 2.0 * (n + alpha - 1.0) * (n + beta - 1.0) * s;
    ((a2 + a3 * u) * p1 - a4 * p2) / a1
}

/// Degree and order of a real spherical harmonic `Y_{n,j}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SphHarmIndex {
    pub n: usize,
    pub j: i32,
}

impl SphHarmIndex {
    pub fn new(n: usize, j: i32) -> Result<Self> {
        if j.unsigned_abs() as usize > n {
            return Err(Error::InvalidIndex(format!(
                "|j| = {} exceeds n = {n}",
                j.abs()
            )));
        }
        Ok(Self { n, j })
    }

    pub fn order(&self) -> usize {
        self.j.unsigned_abs() as usize
    }
}

/// Associated Legendre function `P_{n,mu}(t) = (1-t^2)^{mu/2} (d/dt)^mu P_n(t)`.
///
/// No Condon-Shortley phase. Returns 0 for `mu > n`.
pub fn assoc_legendre(n: usize, mu: usize, t: f64) -> f64 {
    if mu > n {
        return 0.0;
    }
    let mut prev = 0.0;
    let mut cur = sectoral(mu, t);
    for k in (mu + 1)..=n {
        let next = legendre_step(k, mu, t, cur, prev);
        prev = cur;
        cur = next;
    }
    cur
}

/// `P_{k,mu}(t)` for `k = 0..=max_degree`, zero below the order.
pub fn assoc_legendre_column(max_degree: usize, mu: usize, t: f64) -> Vec<f64> {
    let mut out = vec![0.0; max_degree + 1];
    if mu > max_degree {
        return out;
    }
    out[mu] = sectoral(mu, t);
    for k in (mu + 1)..=max_degree {
        let p2 = if k >= mu + 2 { out[k - 2] } else { 0.0 };
        out[k] = legendre_step(k, mu, t, out[k - 1], p2);
    }
    out
}

// (2mu - 1)!! (1 - t^2)^{mu/2}
fn sectoral(mu: usize, t: f64) -> f64 {
    let s = (1.0 - t * t).max(0.0).sqrt();
    let mut p = 1.0;
    for k in 1..=mu {
        p *= (2 * k - 1) as f64 * s;
    }
    p
}

#[inline]
fn legendre_step(k: usize, mu: usize, t: f64, p1: f64, p2: f64) -> f64 {
    let kf = k as f64;
    let muf = mu as f64;
    ((2.0 * kf - 1.0) * t * p1 - (kf + muf - 1.0) * p2) / (kf - muf)
}

/// `(1 - t^2) d/dt P_{n,mu}(t)`, bounded on the closed interval.
///
/// Uses `(1-t^2) P'_{n,mu} = (n+mu) P_{n-1,mu} - n t P_{n,mu}`.
pub fn legendre_weighted_deriv(n: usize, mu: usize, t: f64) -> f64 {
    if mu > n {
        return 0.0;
    }
    let col = assoc_legendre_column(n, mu, t);
    let lower = if n >= 1 { col[n - 1] } else { 0.0 };
    (n + mu) as f64 * lower - n as f64 * t * col[n]
}

/// `d/dt P_{n,mu}(t)`.
///
/// At `t = +-1` the limit is returned where it is finite; for `mu = 1` the
/// derivative is unbounded there and a domain error is reported.
pub fn assoc_legendre_deriv(n: usize, mu: usize, t: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [-1, 1]")));
    }
    if mu > n {
        return Ok(0.0);
    }
    let w = 1.0 - t * t;
    if w > 0.0 {
        return Ok(legendre_weighted_deriv(n, mu, t) / w);
    }
    // endpoint limits
    let sign_n = if t > 0.0 || n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let nf = n as f64;
    match mu {
        // P_n'(+-1) = (+-1)^{n+1} n(n+1)/2
        0 => Ok(sign_n * t.signum() * nf * (nf + 1.0) / 2.0),
        1 => Err(Error::Domain(format!(
            "derivative of P_{{{n},1}} is unbounded at t = {t}"
        ))),
        // -2t P_n''(t) with P_n''(+-1) = (+-1)^n (n-1)n(n+1)(n+2)/8
        2 => Ok(-2.0 * t * sign_n * (nf - 1.0) * nf * (nf + 1.0) * (nf + 2.0) / 8.0),
        _ => Ok(0.0),
    }
}

/// Normalisation `b_{n,j} = sqrt((2n+1)/2 * (n-|j|)!/(n+|j|)!)`.
pub fn sph_norm(n: usize, j: i32) -> f64 {
    let mu = j.unsigned_abs() as usize;
    debug_assert!(mu <= n);
    let mut ratio = 1.0;
    for k in (n - mu + 1)..=(n + mu) {
        ratio /= k as f64;
    }
    ((2 * n + 1) as f64 / 2.0 * ratio).sqrt()
}

/// Longitudinal factor `c_j`: `sqrt2 cos(j phi)` for `j < 0`, 1 for `j = 0`,
/// `sqrt2 sin(j phi)` for `j > 0`.
pub fn trig_factor(j: i32, phi: f64) -> f64 {
    let jf = j as f64;
    match j.cmp(&0) {
        std::cmp::Ordering::Less => std::f64::consts::SQRT_2 * (jf * phi).cos(),
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Greater => std::f64::consts::SQRT_2 * (jf * phi).sin(),
    }
}

/// `d/dphi c_j(phi) = j c_{-j}(phi)`.
pub fn trig_factor_deriv(j: i32, phi: f64) -> f64 {
    j as f64 * trig_factor(-j, phi)
}

/// Real fully normalised spherical harmonic `Y_{n,j}` at longitude `phi` and
/// polar distance `t = cos(theta)`.
pub fn real_sph_harm(idx: SphHarmIndex, phi: f64, t: f64) -> f64 {
    sph_norm(idx.n, idx.j) * assoc_legendre(idx.n, idx.order(), t) * trig_factor(idx.j, phi)
        / (2.0 * PI).sqrt()
}
