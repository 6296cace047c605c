//! Rotation of coefficient vectors by Euler angles.
//!
//! For a rotation `R` the real harmonics of degree `n` satisfy
//! `Y_n(R xi) = D_n(R) Y_n(xi)` with an orthogonal `(2n+1)`-square block
//! `D_n`. The field `x -> R f(R^T x)` then has coefficients `D_n c` on every
//! `(i, m, n)` slice, for all three vector types alike.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::Bandlimit;
use crate::basis::{BasisIndex, FieldType};
use crate::error::{Error, Result};
use crate::specfun::{jacobi_eval, JacobiParams};

pub type Mat3 = [[f64; 3]; 3];

/// z-y-z Euler angles: `R = R_z(alpha) R_y(beta) R_z(gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub alpha: f64,
    pub beta_angle: f64,
    pub gamma: f64,
}

fn rot_z(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

fn rot_y(b: f64) -> Mat3 {
    let (s, c) = b.sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn mat_vec(a: &Mat3, x: &[f64; 3]) -> [f64; 3] {
    [
        a[0][0] * x[0] + a[0][1] * x[1] + a[0][2] * x[2],
        a[1][0] * x[0] + a[1][1] * x[1] + a[1][2] * x[2],
        a[2][0] * x[0] + a[2][1] * x[1] + a[2][2] * x[2],
    ]
}

pub fn transpose(a: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

impl EulerAngles {
    pub fn new(alpha: f64, beta_angle: f64, gamma: f64) -> Self {
        Self {
            alpha,
            beta_angle,
            gamma,
        }
    }

    pub fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn from_degrees(alpha: f64, beta_angle: f64, gamma: f64) -> Self {
        Self::new(
            alpha.to_radians(),
            beta_angle.to_radians(),
            gamma.to_radians(),
        )
    }

    /// Angles reduced to `[0, 2 pi)`.
    pub fn reduced(&self) -> Self {
        let r = |a: f64| a.rem_euclid(2.0 * PI);
        Self::new(r(self.alpha), r(self.beta_angle), r(self.gamma))
    }

    pub fn matrix(&self) -> Mat3 {
        mat_mul(
            &mat_mul(&rot_z(self.alpha), &rot_y(self.beta_angle)),
            &rot_z(self.gamma),
        )
    }

    /// Angles of a proper rotation matrix, with `beta` in `[0, pi]`.
    pub fn from_matrix(r: &Mat3) -> Self {
        let beta = r[2][2].clamp(-1.0, 1.0).acos();
        let sb = (r[0][2] * r[0][2] + r[1][2] * r[1][2]).sqrt();
        if sb > 1e-12 {
            Self::new(r[1][2].atan2(r[0][2]), beta, r[2][1].atan2(-r[2][0]))
        } else if r[2][2] > 0.0 {
            Self::new(r[1][0].atan2(r[0][0]), 0.0, 0.0)
        } else {
            Self::new((-r[1][0]).atan2(-r[0][0]), PI, 0.0)
        }
    }

    /// Angles of `self` applied after `first`.
    pub fn compose(&self, first: &EulerAngles) -> Self {
        Self::from_matrix(&mat_mul(&self.matrix(), &first.matrix()))
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Wigner small-d element `d^n_{m' m}(beta)` via its Jacobi-polynomial form.
pub fn wigner_small_d(n: usize, mp: i32, m: i32, beta: f64) -> f64 {
    let j = n as i32;
    let candidates = [(j + m, 0), (j - m, 1), (j + mp, 2), (j - mp, 3)];
    let (k, case) = candidates.iter().copied().min_by_key(|c| c.0).unwrap();
    let (a, lambda) = match case {
        0 => (mp - m, mp - m),
        1 => (m - mp, 0),
        2 => (m - mp, 0),
        _ => (mp - m, mp - m),
    };
    let b = 2 * j - 2 * k - a;
    let (k, a, b) = (k as usize, a as usize, b as usize);
    let sign = if lambda.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
    let ratio = binomial(2 * n - k, k + a) / binomial(k + b, b);
    let (s, c) = (0.5 * beta).sin_cos();
    sign * ratio.sqrt()
        * s.powi(a as i32)
        * c.powi(b as i32)
        * jacobi_eval(JacobiParams::new(k, a as f64, b as f64), beta.cos())
}

/// Real block `D_n` with `Y_{n,j}(R xi) = sum_{j'} D[j][j'] Y_{n,j'}(xi)`,
/// rows and columns ordered `j = -n..=n`.
pub fn real_wigner_block(n: usize, angles: &EulerAngles) -> Vec<Vec<f64>> {
    let size = 2 * n + 1;
    let ni = n as i32;
    let at = |j: i32| (j + ni) as usize;
    let phase = |k: i32| if k > 0 && k % 2 == 1 { -1.0 } else { 1.0 };

    // complex harmonics without the Condon-Shortley phase:
    // Z_k(R xi) = sum_{k'} W[k][k'] Z_{k'}(xi)
    let mut w = vec![vec![Complex64::new(0.0, 0.0); size]; size];
    for k in -ni..=ni {
        for kp in -ni..=ni {
            let d = wigner_small_d(n, k, kp, angles.beta_angle);
            let e = Complex64::from_polar(1.0, k as f64 * angles.alpha + kp as f64 * angles.gamma);
            w[at(k)][at(kp)] = e * d * phase(k) * phase(kp);
        }
    }

    // Y = U Z in the real convention
    let mut u = vec![vec![Complex64::new(0.0, 0.0); size]; size];
    u[at(0)][at(0)] = Complex64::new(1.0, 0.0);
    for k in 1..=ni {
        u[at(k)][at(k)] = Complex64::new(0.0, -FRAC_1_SQRT_2);
        u[at(k)][at(-k)] = Complex64::new(0.0, FRAC_1_SQRT_2);
        u[at(-k)][at(k)] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        u[at(-k)][at(-k)] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    }

    // D = U W U^H
    let mut uw = vec![vec![Complex64::new(0.0, 0.0); size]; size];
    for r in 0..size {
        for c in 0..size {
            uw[r][c] = (0..size).map(|t| u[r][t] * w[t][c]).sum();
        }
    }
    let mut d = vec![vec![0.0; size]; size];
    for r in 0..size {
        for c in 0..size {
            let v: Complex64 = (0..size).map(|t| uw[r][t] * u[c][t].conj()).sum();
            d[r][c] = v.re;
        }
    }
    d
}

/// The blocks `D_0, ..., D_N` for one rotation.
#[derive(Debug, Clone)]
pub struct WignerBlocks {
    pub angles: EulerAngles,
    blocks: Vec<Vec<Vec<f64>>>,
}

impl WignerBlocks {
    pub fn new(max_angular: usize, angles: &EulerAngles) -> Self {
        Self {
            angles: *angles,
            blocks: (0..=max_angular)
                .map(|n| real_wigner_block(n, angles))
                .collect(),
        }
    }

    pub fn block(&self, n: usize) -> &[Vec<f64>] {
        &self.blocks[n]
    }

    /// Applies `D_n` to every `(i, m, n)` slice of `coeffs`.
    pub fn apply(&self, bandlimit: &Bandlimit, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != bandlimit.dim() {
            return Err(Error::DimensionMismatch {
                expected: bandlimit.dim(),
                actual: coeffs.len(),
            });
        }
        if self.blocks.len() <= bandlimit.max_angular() {
            return Err(Error::InvalidParameter(format!(
                "rotation prepared up to degree {}, bandlimit needs {}",
                self.blocks.len() - 1,
                bandlimit.max_angular()
            )));
        }
        let mut out = vec![0.0; coeffs.len()];
        for field in [FieldType::Normal, FieldType::Gradient, FieldType::Curl] {
            for m in 0..=bandlimit.max_radial() {
                for n in field.min_degree()..=bandlimit.max_angular() {
                    let start = bandlimit.flat_index(&BasisIndex {
                        field,
                        m,
                        n,
                        j: -(n as i32),
                    })?;
                    let d = &self.blocks[n];
                    let src = &coeffs[start..start + 2 * n + 1];
                    for (r, row) in d.iter().enumerate() {
                        out[start + r] = row.iter().zip(src).map(|(a, b)| a * b).sum();
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Coefficients of `x -> R f(R^T x)` for the rotation `R` of `angles`.
pub fn rotate_coeffs(
    bandlimit: &Bandlimit,
    coeffs: &[f64],
    angles: &EulerAngles,
) -> Result<Vec<f64>> {
    WignerBlocks::new(bandlimit.max_angular(), angles).apply(bandlimit, coeffs)
}
