//! Radiated fields: direct quadrature and multipole series, far-field
//! patterns, the Fourier transform of `𝒥` on the wavenumber sphere, the
//! near-field functionals `U`, `V` and the Silver–Müller residual.
//!
//! Far-field normalization: `E_∞(x̂) = Ĝ(x̂) ∫ e^{−iκx̂·y} J(y) dy`, so that
//! `E(x) = e^{iκ|x|}/(4π|x|) · E_∞(x̂) + O(|x|⁻²)`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::greens::{dyadic_apply, farfield_projector, projector, WaveContext};
use crate::multipole::{Family, MultipoleCoeffs};
use crate::quadrature::{build_sphere_rule, integrate, BallRule, Rule, SphereRule};
use crate::sources::SourceSpec;
use crate::specialfuncs::{sph_hankel1_array, sph_harmonics_all, Direction, HarmonicIndex};
use crate::vector::{cnorm, cross, dot, norm, rccross, rmatvec, sub, CMat3, CVec3, Vec3, CZERO3};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Default minimum distance between evaluation points and the support.
pub fn proximity_margin(ctx: &WaveContext) -> f64 {
    0.05 * ctx.radius
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Series,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Series => "series",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FieldSample {
    pub point: Vec3,
    pub e: CVec3,
    pub method: Method,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FarFieldSample {
    pub direction: Vec3,
    pub e_inf: CVec3,
}

/// Source values pre-multiplied by quadrature weights, ready for repeated
/// field evaluation.
#[derive(Debug, Clone)]
pub struct DirectField {
    kappa: f64,
    support_radius: f64,
    min_distance: f64,
    nodes: Vec<Vec3>,
    weighted: Vec<CVec3>,
}

impl DirectField {
    pub fn new(src: &SourceSpec, ctx: &WaveContext, rule: &BallRule) -> Result<Self> {
        let mut nodes = Vec::with_capacity(rule.nodes().len());
        let mut weighted = Vec::with_capacity(rule.nodes().len());
        for (i, (y, w)) in rule.nodes().iter().zip(rule.weights()).enumerate() {
            let j = src.eval(*y);
            if !j.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::NonFinite { index: i });
            }
            if cnorm(j) > 0.0 {
                nodes.push(*y);
                weighted.push([j[0] * *w, j[1] * *w, j[2] * *w]);
            }
        }
        Ok(Self {
            kappa: ctx.kappa,
            support_radius: src.support_radius.min(rule.radius),
            min_distance: proximity_margin(ctx),
            nodes,
            weighted,
        })
    }

    pub fn with_min_distance(mut self, d: f64) -> Self {
        self.min_distance = d;
        self
    }

    fn check(&self, x: Vec3) -> Result<()> {
        let dist = norm(x) - self.support_radius;
        if !(dist >= self.min_distance) {
            return Err(Error::Proximity { distance: dist, min: self.min_distance });
        }
        Ok(())
    }

    fn accumulate(&self, x: Vec3, with_jacobian: bool) -> (CVec3, CMat3) {
        let mut e = CZERO3;
        let mut jac = [CZERO3; 3];
        for (y, wj) in self.nodes.iter().zip(&self.weighted) {
            let d = sub(x, *y);
            let r = norm(d);
            let (ev, jv) = dyadic_apply(self.kappa, d, r, *wj, with_jacobian);
            for l in 0..3 {
                e[l] += ev[l];
            }
            if with_jacobian {
                for k in 0..3 {
                    for l in 0..3 {
                        jac[k][l] += jv[k][l];
                    }
                }
            }
        }
        (e, jac)
    }

    /// `E(x) = ∫ G(x, y) J(y) dy`.
    pub fn field(&self, x: Vec3) -> Result<CVec3> {
        self.check(x)?;
        Ok(self.accumulate(x, false).0)
    }

    /// `E(x)` and `∂_k E_l(x)` (`jac[k][l]`), from the analytic kernel derivative.
    pub fn field_and_jacobian(&self, x: Vec3) -> Result<(CVec3, CMat3)> {
        self.check(x)?;
        Ok(self.accumulate(x, true))
    }

    /// Jacobian by Richardson-extrapolated central differences of [`Self::field`]
    /// with step `h` (validation path).
    pub fn jacobian_fd(&self, x: Vec3, h: f64) -> Result<CMat3> {
        let mut jac = [CZERO3; 3];
        for (k, row) in jac.iter_mut().enumerate() {
            let at = |s: f64| -> Result<CVec3> {
                let mut p = x;
                p[k] += s * h;
                self.field(p)
            };
            let (p1, m1, p2, m2) = (at(0.5)?, at(-0.5)?, at(1.0)?, at(-1.0)?);
            for l in 0..3 {
                let fine = (p1[l] - m1[l]) / h;
                let coarse = (p2[l] - m2[l]) / (2.0 * h);
                row[l] = (4.0 * fine - coarse) / 3.0;
            }
        }
        Ok(jac)
    }

    /// Fields at many points, in parallel, order preserved.
    pub fn field_many(&self, points: &[Vec3]) -> Result<Vec<CVec3>> {
        points.par_iter().map(|x| self.field(*x)).collect()
    }
}

/// `E(x)` by ball quadrature of `G(x, ·) J`.
pub fn field_direct(src: &SourceSpec, ctx: &WaveContext, rule: &BallRule, x: Vec3) -> Result<CVec3> {
    DirectField::new(src, ctx, rule)?.field(x)
}

/// `curl E` from a Jacobian laid out as `jac[k][l] = ∂_k E_l`.
pub fn curl_from_jacobian(jac: &CMat3) -> CVec3 {
    [jac[1][2] - jac[2][1], jac[2][0] - jac[0][2], jac[0][1] - jac[1][0]]
}

pub fn div_from_jacobian(jac: &CMat3) -> Complex64 {
    jac[0][0] + jac[1][1] + jac[2][2]
}

/// `E(x) = iκ Σ h_n(κ|x|) Y_n^m(x̂) β_n^m`, valid for `|x| > R`.
pub fn field_series(coeffs: &MultipoleCoeffs, ctx: &WaveContext, x: Vec3) -> Result<CVec3> {
    let r = norm(x);
    if !(r > ctx.radius) {
        return Err(Error::InvalidArgument(format!(
            "series evaluation needs |x| > R = {}, got {r}",
            ctx.radius
        )));
    }
    let n = coeffs.degree;
    let h = sph_hankel1_array(n, ctx.kappa * r)?;
    let y = sph_harmonics_all(n, Direction::of(x));
    let mut e = CZERO3;
    for idx in HarmonicIndex::all(n) {
        let i = idx.linear();
        let c = h[idx.n] * y[i];
        for l in 0..3 {
            e[l] += c * coeffs.beta[i][l];
        }
    }
    Ok([I * ctx.kappa * e[0], I * ctx.kappa * e[1], I * ctx.kappa * e[2]])
}

/// `∫ J(y) e^{−iξ·y} dy` for arbitrary `ξ`.
pub fn fourier_transform(src: &SourceSpec, rule: &BallRule, xi: Vec3) -> Result<CVec3> {
    let v = integrate(rule, 3, |_, y, out| {
        let j = src.eval(y);
        let ph = Complex64::from_polar(1.0, -dot(xi, y));
        for l in 0..3 {
            out[l] = j[l] * ph;
        }
    })?;
    Ok([v[0], v[1], v[2]])
}

/// `E_∞(x̂) = Ĝ(x̂) ∫ e^{−iκx̂·y} J(y) dy`.
pub fn farfield_direct(src: &SourceSpec, ctx: &WaveContext, rule: &BallRule, xhat: Vec3) -> Result<CVec3> {
    let p = farfield_projector(xhat)?;
    let xi = [ctx.kappa * xhat[0], ctx.kappa * xhat[1], ctx.kappa * xhat[2]];
    Ok(rmatvec(&p, fourier_transform(src, rule, xi)?))
}

/// Which coefficient combination the far-field series uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FarFieldVariant {
    /// `4π Σ (−i)^n Ĝ(x̂) α_n^m Y_n^m(x̂)`
    Projector,
    /// `4π Σ (−i)^n (α_n^m + η_n^m) Y_n^m(x̂)`
    AlphaEta,
}

pub fn farfield_series(coeffs: &MultipoleCoeffs, xhat: Vec3, variant: FarFieldVariant) -> Result<CVec3> {
    let p = farfield_projector(xhat)?;
    let eta = match variant {
        FarFieldVariant::AlphaEta => Some(coeffs.family(Family::Eta).ok_or(Error::MissingCoefficients("eta"))?),
        FarFieldVariant::Projector => None,
    };
    let n = coeffs.degree;
    let y = sph_harmonics_all(n, Direction::of(xhat));
    let mut powers = Vec::with_capacity(n + 1);
    let mut c = Complex64::new(4.0 * PI, 0.0);
    for _ in 0..=n {
        powers.push(c);
        c *= -I;
    }
    let mut acc = CZERO3;
    for idx in HarmonicIndex::all(n) {
        let i = idx.linear();
        let w = powers[idx.n] * y[i];
        let mut v = coeffs.alpha[i];
        if let Some(eta) = eta {
            for l in 0..3 {
                v[l] += eta[i][l];
            }
        }
        for l in 0..3 {
            acc[l] += w * v[l];
        }
    }
    Ok(match variant {
        FarFieldVariant::Projector => rmatvec(&p, acc),
        FarFieldVariant::AlphaEta => acc,
    })
}

fn check_on_sphere(xi: Vec3, kappa: f64) -> Result<()> {
    let n = norm(xi);
    if !((n - kappa).abs() <= 1e-10) {
        return Err(Error::OffSphere { norm: n, kappa });
    }
    Ok(())
}

/// `𝒥̂(ξ) = ∫ 𝒥(y) e^{−iξ·y} dy` on `|ξ| = κ`.
pub fn fourier_source_transform(src: &SourceSpec, ctx: &WaveContext, rule: &BallRule, xi: Vec3) -> Result<CVec3> {
    check_on_sphere(xi, ctx.kappa)?;
    if !src.has_jcal() {
        return Err(Error::InsufficientRegularity(format!("source `{}` has no 𝒥 evaluator", src.name)));
    }
    src.eval_jcal([0.0; 3])?;
    let v = integrate(rule, 3, |_, y, out| {
        let j = src.eval_jcal(y).unwrap_or([Complex64::new(f64::NAN, 0.0); 3]);
        let ph = Complex64::from_polar(1.0, -dot(xi, y));
        for l in 0..3 {
            out[l] = j[l] * ph;
        }
    })?;
    Ok([v[0], v[1], v[2]])
}

/// `E` and `∇E` sampled on a sphere `|y| = R′` enclosing the support.
#[derive(Debug, Clone)]
pub struct SurfaceData {
    pub rule: SphereRule,
    pub kappa: f64,
    pub e: Vec<CVec3>,
    pub jac: Vec<CMat3>,
}

/// Default sphere rule for the near-field functionals. The ball rule leaves
/// its quadrature error in `E` near harmonic degree `2·n_polar`; the surface
/// rule must integrate that band times the plane wave exactly, or the error
/// aliases back into `U` and `V`.
pub fn default_surface_rule(ctx: &WaveContext, ball: &BallRule, rprime: f64) -> Result<SphereRule> {
    let n_polar = ball.n_polar + (ctx.kappa * rprime).ceil() as usize + 8;
    build_sphere_rule(rprime, n_polar, 2 * n_polar)
}

impl SurfaceData {
    pub fn compute(src: &SourceSpec, ctx: &WaveContext, rule: &BallRule, surface: SphereRule) -> Result<Self> {
        if !(surface.radius > ctx.radius) {
            return Err(Error::InvalidArgument(format!(
                "surface radius R' = {} must exceed R = {}",
                surface.radius, ctx.radius
            )));
        }
        let field = DirectField::new(src, ctx, rule)?.with_min_distance(0.0);
        let vals: Vec<(CVec3, CMat3)> =
            surface.nodes().par_iter().map(|y| field.field_and_jacobian(*y)).collect::<Result<_>>()?;
        let (e, jac) = vals.into_iter().unzip();
        Ok(Self { rule: surface, kappa: ctx.kappa, e, jac })
    }

    /// `∫_{∂B_{R′}} [n×(∇×E) + iξ×(n×E)] e^{−iξ·y} ds` before projection.
    pub fn u_raw(&self, xi: Vec3) -> Result<CVec3> {
        check_on_sphere(xi, self.kappa)?;
        let normals = self.rule.normals();
        let v = integrate(&self.rule, 3, |i, y, out| {
            let n = normals[i];
            let curl = curl_from_jacobian(&self.jac[i]);
            let a = rccross(n, curl);
            let ne = rccross(n, self.e[i]);
            let b = rccross(xi, ne);
            let ph = Complex64::from_polar(1.0, -dot(xi, y));
            for l in 0..3 {
                out[l] = (a[l] + I * b[l]) * ph;
            }
        })?;
        Ok([v[0], v[1], v[2]])
    }

    /// `U(ξ) = Ĝ(ξ̂) · u_raw(ξ)`; equals `𝒥̂(ξ)` for `|ξ| = κ`.
    pub fn u(&self, xi: Vec3) -> Result<CVec3> {
        let raw = self.u_raw(xi)?;
        let k = norm(xi);
        Ok(rmatvec(&projector([xi[0] / k, xi[1] / k, xi[2] / k]), raw))
    }

    /// `V(ξ) = ∫_{∂B_{R′}} [−i(ξ·n)E − ∂_nE] e^{−iξ·y} ds`; equals `𝒥̂(ξ)`.
    pub fn v(&self, xi: Vec3) -> Result<CVec3> {
        check_on_sphere(xi, self.kappa)?;
        let normals = self.rule.normals();
        let v = integrate(&self.rule, 3, |i, y, out| {
            let n = normals[i];
            let xn = dot(xi, n);
            let ph = Complex64::from_polar(1.0, -dot(xi, y));
            let jac = &self.jac[i];
            for l in 0..3 {
                let dn = n[0] * jac[0][l] + n[1] * jac[1][l] + n[2] * jac[2][l];
                out[l] = (-I * xn * self.e[i][l] - dn) * ph;
            }
        })?;
        Ok([v[0], v[1], v[2]])
    }

    /// Largest `|∇·E|` over the surface nodes.
    pub fn max_divergence(&self) -> f64 {
        self.jac.iter().map(|j| div_from_jacobian(j).norm()).fold(0.0, f64::max)
    }
}

/// `U(ξ)` on the sphere `surface` (radius `R′ > R`).
pub fn nearfield_u(src: &SourceSpec, ctx: &WaveContext, rule: &BallRule, surface: SphereRule, xi: Vec3) -> Result<CVec3> {
    check_on_sphere(xi, ctx.kappa)?;
    SurfaceData::compute(src, ctx, rule, surface)?.u(xi)
}

/// `V(ξ)` on the sphere `surface` (radius `R′ > R`).
pub fn nearfield_v(src: &SourceSpec, ctx: &WaveContext, rule: &BallRule, surface: SphereRule, xi: Vec3) -> Result<CVec3> {
    check_on_sphere(xi, ctx.kappa)?;
    SurfaceData::compute(src, ctx, rule, surface)?.v(xi)
}

/// `n` roughly uniform unit vectors (Fibonacci lattice), deterministic.
pub fn fibonacci_directions(n: usize) -> Vec<Vec3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let s = (1.0 - z * z).sqrt();
            let (sp, cp) = (golden * i as f64).sin_cos();
            [s * cp, s * sp, z]
        })
        .collect()
}

/// `max |(∇×E)(x) × x − iκ|x| E(x)|` over `n_dirs` points with `|x| = r`.
pub fn silver_muller_residual(src: &SourceSpec, ctx: &WaveContext, rule: &BallRule, r: f64, n_dirs: usize) -> Result<f64> {
    let field = DirectField::new(src, ctx, rule)?;
    if !(r > ctx.radius + proximity_margin(ctx)) {
        return Err(Error::Proximity { distance: r - ctx.radius, min: proximity_margin(ctx) });
    }
    let vals: Vec<f64> = fibonacci_directions(n_dirs)
        .par_iter()
        .map(|d| {
            let x = [r * d[0], r * d[1], r * d[2]];
            let (e, jac) = field.field_and_jacobian(x)?;
            let curl = curl_from_jacobian(&jac);
            let cx = [
                curl[1] * x[2] - curl[2] * x[1],
                curl[2] * x[0] - curl[0] * x[2],
                curl[0] * x[1] - curl[1] * x[0],
            ];
            let res = [cx[0] - I * ctx.kappa * r * e[0], cx[1] - I * ctx.kappa * r * e[1], cx[2] - I * ctx.kappa * r * e[2]];
            Ok(cnorm(res))
        })
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// Field-scan CSV: `x1,x2,x3,ReE1,ImE1,ReE2,ImE2,ReE3,ImE3,method`.
pub fn write_field_csv<W: Write>(mut w: W, samples: &[FieldSample]) -> std::io::Result<()> {
    writeln!(w, "x1,x2,x3,ReE1,ImE1,ReE2,ImE2,ReE3,ImE3,method")?;
    for s in samples {
        let mut row: Vec<String> = s.point.iter().map(|v| format!("{v:.16e}")).collect();
        for c in s.e {
            row.push(format!("{:.16e}", c.re));
            row.push(format!("{:.16e}", c.im));
        }
        row.push(s.method.as_str().into());
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Far-field CSV: `theta,phi,ReEinf1,ImEinf1,ReEinf2,ImEinf2,ReEinf3,ImEinf3`.
pub fn write_farfield_csv<W: Write>(mut w: W, samples: &[FarFieldSample]) -> std::io::Result<()> {
    writeln!(w, "theta,phi,ReEinf1,ImEinf1,ReEinf2,ImEinf2,ReEinf3,ImEinf3")?;
    for s in samples {
        let d = s.direction;
        let theta = d[2].clamp(-1.0, 1.0).acos();
        let mut phi = d[1].atan2(d[0]);
        if phi < 0.0 {
            phi += 2.0 * PI;
        }
        let mut row = vec![format!("{theta:.16e}"), format!("{phi:.16e}")];
        for c in s.e_inf {
            row.push(format!("{:.16e}", c.re));
            row.push(format!("{:.16e}", c.im));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Unit vector for polar angles `(θ, φ)`.
pub fn direction(theta: f64, phi: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

/// Unit vector orthogonal to `v` (used to build transverse test vectors).
pub fn orthogonal_unit(v: Vec3) -> Vec3 {
    let a = if v[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let c = cross(v, a);
    let n = norm(c);
    [c[0] / n, c[1] / n, c[2] / n]
}
