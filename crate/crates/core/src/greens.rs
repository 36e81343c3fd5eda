//! Scalar and dyadic Helmholtz kernels, the far-field projector and the
//! separable (addition theorem) expansions.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specialfuncs::{sph_bessel_j_array, sph_hankel1_array, sph_harmonics_all, Direction};
use crate::vector::{norm, sub, CMat3, CVec3, Vec3};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Wavenumber, support radius, truncation degree and base tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveContext {
    pub kappa: f64,
    pub radius: f64,
    pub degree: usize,
    pub tol: f64,
}

impl WaveContext {
    /// Context with the default degree and `tol = 1e-8`.
    pub fn new(kappa: f64, radius: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidArgument(format!("kappa must be positive, got {kappa}")));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(format!("R must be positive, got {radius}")));
        }
        Ok(Self { kappa, radius, degree: default_degree(kappa * radius), tol: 1e-8 })
    }

    pub fn with_degree(mut self, degree: usize) -> Self {
        self.degree = degree;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
        }
        self.tol = tol;
        Ok(self)
    }

    pub fn kr(&self) -> f64 {
        self.kappa * self.radius
    }
}

/// `⌈κR⌉ + ⌈4 (κR)^{1/3}⌉ + 10`.
pub fn default_degree(kr: f64) -> usize {
    kr.ceil() as usize + (4.0 * kr.cbrt()).ceil() as usize + 10
}

fn separation(x: Vec3, y: Vec3) -> Result<(Vec3, f64)> {
    let d = sub(x, y);
    let r = norm(d);
    if r == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    Ok((d, r))
}

fn green_at(kappa: f64, r: f64) -> Complex64 {
    Complex64::from_polar(1.0 / (4.0 * PI * r), kappa * r)
}

/// `g(x, y) = e^{iκ|x−y|} / (4π|x−y|)`.
pub fn scalar_green(x: Vec3, y: Vec3, ctx: &WaveContext) -> Result<Complex64> {
    let (_, r) = separation(x, y)?;
    Ok(green_at(ctx.kappa, r))
}

/// Gradient of `g` with respect to `x`.
pub fn grad_scalar_green(x: Vec3, y: Vec3, ctx: &WaveContext) -> Result<CVec3> {
    let (d, r) = separation(x, y)?;
    let g = green_at(ctx.kappa, r);
    let f = g * (I * ctx.kappa - 1.0 / r) / r;
    Ok([f * d[0], f * d[1], f * d[2]])
}

struct DyadicParts {
    dhat: Vec3,
    r: f64,
    a: Complex64,
    b: Complex64,
    da: Complex64,
    db: Complex64,
}

// G = A I + B d̂d̂ᵀ with A = g(1+q), B = −g(1+3q), q = (iκr − 1)/(κr)²
fn dyadic_parts(kappa: f64, d: Vec3, r: f64) -> DyadicParts {
    let inv_r = 1.0 / r;
    let a1 = inv_r / kappa;
    let a2 = a1 * a1;
    let g = green_at(kappa, r);
    let q = Complex64::new(-a2, a1);
    let dg = g * Complex64::new(-inv_r, kappa);
    let dq = Complex64::new(2.0 * a2 * inv_r, -a1 * inv_r);
    let one_q = 1.0 + q;
    let one_3q = 1.0 + 3.0 * q;
    let a = g * one_q;
    let b = -g * one_3q;
    let da = dg * one_q + g * dq;
    let db = -dg * one_3q - 3.0 * g * dq;
    DyadicParts { dhat: [d[0] * inv_r, d[1] * inv_r, d[2] * inv_r], r, a, b, da, db }
}

/// `G(x, y) = (I + κ⁻²∇∇) g(x, y)`, symmetric.
pub fn dyadic_green(x: Vec3, y: Vec3, ctx: &WaveContext) -> Result<CMat3> {
    let (d, r) = separation(x, y)?;
    let p = dyadic_parts(ctx.kappa, d, r);
    let mut m = [[Complex64::new(0.0, 0.0); 3]; 3];
    for l in 0..3 {
        for s in 0..3 {
            m[l][s] = p.b * (p.dhat[l] * p.dhat[s]);
        }
        m[l][l] += p.a;
    }
    Ok(m)
}

/// `G` together with `∂G/∂x_k` for `k = 0, 1, 2`.
pub fn dyadic_green_with_jacobian(x: Vec3, y: Vec3, ctx: &WaveContext) -> Result<(CMat3, [CMat3; 3])> {
    let (d, r) = separation(x, y)?;
    let p = dyadic_parts(ctx.kappa, d, r);
    let u = p.dhat;
    let zero = Complex64::new(0.0, 0.0);
    let mut g = [[zero; 3]; 3];
    let mut dg = [[[zero; 3]; 3]; 3];
    let b_r = p.b / p.r;
    for l in 0..3 {
        for s in 0..3 {
            let uu = u[l] * u[s];
            g[l][s] = p.b * uu + if l == s { p.a } else { zero };
            for k in 0..3 {
                let mut v = p.db * (u[k] * uu);
                if l == s {
                    v += p.da * u[k];
                }
                let mut t = -2.0 * uu * u[k];
                if l == k {
                    t += u[s];
                }
                if s == k {
                    t += u[l];
                }
                v += b_r * t;
                dg[k][l][s] = v;
            }
        }
    }
    Ok((g, dg))
}

/// `G(x, y) v` and its x-derivatives `∂_k (G v)`, without forming the
/// 3×3×3 tensor. `d = x − y`, `r = |d| > 0`.
#[inline]
pub(crate) fn dyadic_apply(kappa: f64, d: Vec3, r: f64, v: CVec3, with_jacobian: bool) -> (CVec3, [CVec3; 3]) {
    let p = dyadic_parts(kappa, d, r);
    let u = p.dhat;
    let uv = v[0] * u[0] + v[1] * u[1] + v[2] * u[2];
    let bu = p.b * uv;
    let e = [p.a * v[0] + bu * u[0], p.a * v[1] + bu * u[1], p.a * v[2] + bu * u[2]];
    let mut jac = [[Complex64::new(0.0, 0.0); 3]; 3];
    if with_jacobian {
        let b_r = p.b / p.r;
        let dbu = p.db * uv - 2.0 * b_r * uv;
        for k in 0..3 {
            for l in 0..3 {
                let mut t = p.da * u[k] * v[l] + dbu * (u[k] * u[l]) + b_r * u[l] * v[k];
                if l == k {
                    t += b_r * uv;
                }
                jac[k][l] = t;
            }
        }
    }
    (e, jac)
}

/// `Ĝ(x̂) = I − x̂x̂ᵀ`; rejects directions off the unit sphere by more than 1e-12.
pub fn farfield_projector(xhat: Vec3) -> Result<[[f64; 3]; 3]> {
    let n = norm(xhat);
    if !((n - 1.0).abs() <= 1e-12) {
        return Err(Error::InvalidArgument(format!("projector direction has norm {n}, expected 1")));
    }
    Ok(projector(xhat))
}

pub(crate) fn projector(u: Vec3) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for l in 0..3 {
        for s in 0..3 {
            m[l][s] = if l == s { 1.0 } else { 0.0 } - u[l] * u[s];
        }
    }
    m
}

fn check_ordering(x: Vec3, y: Vec3) -> Result<(f64, f64)> {
    let rx = norm(x);
    let ry = norm(y);
    if !(rx > ry) {
        return Err(Error::InvalidArgument(format!(
            "expansion requires |x| > |y|, got |x| = {rx}, |y| = {ry}"
        )));
    }
    Ok((rx, ry))
}

/// `Σ_{n ≤ degree} Σ_m f_n(κ|x|) Y_n^m(x̂) j_n(κ|y|) conj(Y_n^m(ŷ))` with
/// outer radial factors `f`.
fn separable_sum(x: Vec3, y: Vec3, degree: usize, fx: &[Complex64], jy: &[f64]) -> Complex64 {
    let yx = sph_harmonics_all(degree, Direction::of(x));
    let yy = sph_harmonics_all(degree, Direction::of(y));
    let mut total = Complex64::new(0.0, 0.0);
    for n in 0..=degree {
        let mut ang = Complex64::new(0.0, 0.0);
        for k in n * n..(n + 1) * (n + 1) {
            ang += yx[k] * yy[k].conj();
        }
        total += fx[n] * jy[n] * ang;
    }
    total
}

/// Truncated addition-theorem expansion of `g(x, y)`, valid for `|x| > |y|`.
pub fn expansion_scalar_green(x: Vec3, y: Vec3, ctx: &WaveContext, degree: usize) -> Result<Complex64> {
    let (rx, ry) = check_ordering(x, y)?;
    let h = sph_hankel1_array(degree, ctx.kappa * rx)?;
    let j = sph_bessel_j_array(degree, ctx.kappa * ry);
    Ok(I * ctx.kappa * separable_sum(x, y, degree, &h, &j))
}

/// Truncated expansion of `j_0(κ|x − y|)`, valid for `|x| > |y|`.
pub fn expansion_j0(x: Vec3, y: Vec3, ctx: &WaveContext, degree: usize) -> Result<Complex64> {
    let (rx, ry) = check_ordering(x, y)?;
    let jx: Vec<Complex64> = sph_bessel_j_array(degree, ctx.kappa * rx).into_iter().map(Complex64::from).collect();
    let jy = sph_bessel_j_array(degree, ctx.kappa * ry);
    Ok(4.0 * PI * separable_sum(x, y, degree, &jx, &jy))
}

/// `j_1(z)/z`, finite at zero.
pub(crate) fn j1_over_z(z: f64) -> f64 {
    if z.abs() < 0.05 {
        let z2 = z * z;
        1.0 / 3.0 - z2 / 30.0 + z2 * z2 / 840.0 - z2 * z2 * z2 / 45360.0
    } else {
        (z.sin() / z - z.cos()) / (z * z)
    }
}

/// `(I + κ⁻²∇_y∇_y) j_0(κ|x − y|)`, a real symmetric matrix.
pub fn j0_dyadic(x: Vec3, y: Vec3, kappa: f64) -> [[f64; 3]; 3] {
    let d = sub(x, y);
    let rho = norm(d);
    let z = kappa * rho;
    let j0 = if z < 1e-4 { 1.0 - z * z / 6.0 } else { z.sin() / z };
    let q = j1_over_z(z);
    let iso = j0 - q;
    // (3 j_1/z − j_0) = z² j_2(z)/z², well behaved; j_2(z)/z² series for small z
    let aniso_over_rho2 = if z < 0.05 {
        let z2 = z * z;
        kappa * kappa * (1.0 / 15.0 - z2 / 210.0 + z2 * z2 / 7560.0)
    } else {
        (3.0 * q - j0) / (rho * rho)
    };
    let mut m = [[0.0; 3]; 3];
    for l in 0..3 {
        for s in 0..3 {
            m[l][s] = aniso_over_rho2 * d[l] * d[s];
        }
        m[l][l] += iso;
    }
    m
}

/// `∇_y j_0(κ|x − y|) = κ² (j_1(z)/z) (x − y)`.
pub fn grad_y_j0(x: Vec3, y: Vec3, kappa: f64) -> Vec3 {
    let d = sub(x, y);
    let z = kappa * norm(d);
    let c = kappa * kappa * j1_over_z(z);
    [c * d[0], c * d[1], c * d[2]]
}
