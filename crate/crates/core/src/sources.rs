//! Evaluable current densities: the nonradiating constructions and a few
//! radiating controls, all behind [`SourceSpec`].

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::{j1_over_z, WaveContext};
use crate::quadrature::{build_ball_rule, default_ball_counts, integrate, integrate_interval, BallRule};
use crate::specialfuncs::sph_bessel_j;
use crate::vector::{cnorm, cross, dot, norm, to_complex, CVec3, Vec3, CZERO3};

pub type VectorField = Arc<dyn Fn(Vec3) -> CVec3 + Send + Sync>;
pub type ScalarField = Arc<dyn Fn(Vec3) -> Complex64 + Send + Sync>;

/// Regularity class of a source; decides which coefficient pairing is valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegularityClass {
    L2,
    HdivZeroTrace,
    HdivGrad,
    DivergenceFree,
}

impl RegularityClass {
    /// Coefficient family paired with α to form β (`None` means β = α).
    pub fn pairing(self) -> Option<Pairing> {
        match self {
            RegularityClass::L2 => Some(Pairing::Gamma),
            RegularityClass::HdivZeroTrace => Some(Pairing::Zeta),
            RegularityClass::HdivGrad => Some(Pairing::Eta),
            RegularityClass::DivergenceFree => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pairing {
    Gamma,
    Zeta,
    Eta,
}

impl fmt::Display for Pairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pairing::Gamma => "gamma",
            Pairing::Zeta => "zeta",
            Pairing::Eta => "eta",
        })
    }
}

/// A finite-difference derivative together with its Richardson error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Estimated<T> {
    pub value: T,
    pub error: f64,
}

/// Immutable, shareable description of a current density `J` on `B_R`.
#[derive(Clone)]
pub struct SourceSpec {
    pub name: String,
    pub kappa: f64,
    pub radius: f64,
    pub support_radius: f64,
    pub regularity: RegularityClass,
    /// Minimum radial node count needed for the source's profile.
    pub radial_nodes: usize,
    j: VectorField,
    div: Option<ScalarField>,
    graddiv: Option<VectorField>,
    jcal: Option<VectorField>,
}

impl fmt::Debug for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SourceSpec")
            .field("name", &self.name)
            .field("kappa", &self.kappa)
            .field("radius", &self.radius)
            .field("support_radius", &self.support_radius)
            .field("regularity", &self.regularity)
            .field("has_div", &self.div.is_some())
            .field("has_graddiv", &self.graddiv.is_some())
            .field("has_jcal", &self.jcal.is_some())
            .finish()
    }
}

impl SourceSpec {
    /// Generic constructor. `support_radius` must not exceed the context radius.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        ctx: &WaveContext,
        support_radius: f64,
        regularity: RegularityClass,
        j: VectorField,
        div: Option<ScalarField>,
        graddiv: Option<VectorField>,
        jcal: Option<VectorField>,
    ) -> Result<Self> {
        if !(support_radius > 0.0 && support_radius <= ctx.radius * (1.0 + 1e-14)) {
            return Err(Error::InvalidArgument(format!(
                "support radius {support_radius} must lie in (0, R = {}]",
                ctx.radius
            )));
        }
        let (div, graddiv, jcal) = if regularity == RegularityClass::DivergenceFree {
            let zero: ScalarField = Arc::new(|_| Complex64::new(0.0, 0.0));
            let zero_v: VectorField = Arc::new(|_| CZERO3);
            (Some(zero), Some(zero_v), jcal.or_else(|| Some(j.clone())))
        } else {
            (div, graddiv, jcal)
        };
        Ok(Self {
            name: name.into(),
            kappa: ctx.kappa,
            radius: ctx.radius,
            support_radius,
            regularity,
            radial_nodes: 0,
            j,
            div,
            graddiv,
            jcal,
        })
    }

    pub fn with_radial_nodes(mut self, n: usize) -> Self {
        self.radial_nodes = n;
        self
    }

    /// The zero current on `B_R`.
    pub fn zero(ctx: &WaveContext) -> Self {
        let zero: VectorField = Arc::new(|_| CZERO3);
        Self::new("zero", ctx, ctx.radius, RegularityClass::DivergenceFree, zero, None, None, None)
            .expect("context radius is a valid support radius")
    }

    #[inline]
    fn outside(&self, y: Vec3) -> bool {
        norm(y) > self.support_radius
    }

    /// `J(y)`; exactly zero outside the support ball.
    pub fn eval(&self, y: Vec3) -> CVec3 {
        if self.outside(y) {
            return CZERO3;
        }
        (self.j)(y)
    }

    pub fn has_div(&self) -> bool {
        self.div.is_some()
    }

    pub fn has_graddiv(&self) -> bool {
        self.graddiv.is_some()
    }

    pub fn has_jcal(&self) -> bool {
        self.jcal.is_some() || (self.graddiv.is_some() && self.regularity != RegularityClass::L2)
    }

    fn step(&self) -> f64 {
        1e-4 * self.radius
    }

    /// `∇·J(y)`, analytic when available, otherwise by finite differences.
    pub fn eval_div(&self, y: Vec3) -> Complex64 {
        self.eval_div_estimated(y).value
    }

    pub fn eval_div_estimated(&self, y: Vec3) -> Estimated<Complex64> {
        if self.outside(y) {
            return Estimated { value: Complex64::new(0.0, 0.0), error: 0.0 };
        }
        if let Some(d) = &self.div {
            return Estimated { value: d(y), error: 0.0 };
        }
        let h = self.step();
        let mut value = Complex64::new(0.0, 0.0);
        let mut error = 0.0;
        for k in 0..3 {
            let e = richardson(|p| self.eval(p)[k], y, k, h);
            value += e.value;
            error += e.error;
        }
        Estimated { value, error }
    }

    /// `∇(∇·J)(y)`; refuses sources that are only square integrable.
    pub fn eval_graddiv(&self, y: Vec3) -> Result<CVec3> {
        Ok(self.eval_graddiv_estimated(y)?.value)
    }

    pub fn eval_graddiv_estimated(&self, y: Vec3) -> Result<Estimated<CVec3>> {
        if self.regularity == RegularityClass::L2 {
            return Err(Error::InsufficientRegularity(format!(
                "source `{}` is only L2; grad-div is undefined",
                self.name
            )));
        }
        if self.outside(y) {
            return Ok(Estimated { value: CZERO3, error: 0.0 });
        }
        if let Some(g) = &self.graddiv {
            return Ok(Estimated { value: g(y), error: 0.0 });
        }
        let h = self.step();
        let mut value = CZERO3;
        let mut error = 0.0;
        for (k, slot) in value.iter_mut().enumerate() {
            let e = richardson(|p| self.eval_div(p), y, k, h);
            *slot = e.value;
            error += e.error;
        }
        Ok(Estimated { value, error })
    }

    /// `𝒥 = J + κ⁻²∇(∇·J)`.
    pub fn eval_jcal(&self, y: Vec3) -> Result<CVec3> {
        if self.outside(y) {
            return Ok(CZERO3);
        }
        if let Some(f) = &self.jcal {
            return Ok(f(y));
        }
        let gd = self.eval_graddiv(y)?;
        let j = self.eval(y);
        let k2 = self.kappa * self.kappa;
        Ok([j[0] + gd[0] / k2, j[1] + gd[1] / k2, j[2] + gd[2] / k2])
    }

    /// Ball rule over the support with the default counts for `ctx`, raised
    /// to the source's radial node requirement.
    pub fn default_rule(&self, ctx: &WaveContext) -> Result<BallRule> {
        let (n_r, n_p, n_a) = default_ball_counts(ctx.kappa, ctx.radius, ctx.degree);
        build_ball_rule(self.support_radius, n_r.max(self.radial_nodes), n_p, n_a)
    }

    /// `‖J‖_{L²(B_R)}` under `rule`.
    pub fn l2_norm(&self, rule: &BallRule) -> Result<f64> {
        let v = integrate(rule, 1, |_, y, out| {
            let j = self.eval(y);
            out[0] = cnorm(j).powi(2).into();
        })?;
        Ok(v[0].re.max(0.0).sqrt())
    }
}

/// Fourth-order central difference of `f` along axis `k`, with one Richardson
/// step (h and h/2). The error estimate is the size of the Richardson
/// correction.
fn richardson<F: Fn(Vec3) -> Complex64>(f: F, y: Vec3, k: usize, h: f64) -> Estimated<Complex64> {
    let d4 = |h: f64| {
        let at = |s: f64| {
            let mut p = y;
            p[k] += s * h;
            f(p)
        };
        (8.0 * (at(1.0) - at(-1.0)) - (at(2.0) - at(-2.0))) / (12.0 * h)
    };
    let coarse = d4(h);
    let fine = d4(0.5 * h);
    let value = fine + (fine - coarse) / 15.0;
    Estimated { value, error: (value - fine).norm() }
}

// ---------------------------------------------------------------------------
// Bump profile ψ(t) = exp(1/(t² − 1)) for |t| < 1

/// `(ψ, ψ′/t, ψ″)` at `t ≥ 0`; `ψ′/t` is finite at the origin.
pub fn bump(t: f64) -> (f64, f64, f64) {
    if t >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let s = t * t - 1.0;
    let p = (1.0 / s).exp();
    let dp_over_t = p * (-2.0 / (s * s));
    let ddp = p * (4.0 * t * t / s.powi(4) - 2.0 / (s * s) + 8.0 * t * t / s.powi(3));
    (p, dp_over_t, ddp)
}

/// Radial profile `f(r) = ψ(r/ρ)` with `f`, `f′/r`, `f″`.
#[derive(Debug, Clone, Copy)]
struct RadialBump {
    rho: f64,
}

struct Profile {
    f: f64,
    fp_over_r: f64,
    fpp: f64,
}

impl RadialBump {
    fn at(&self, y: Vec3) -> Profile {
        let t = norm(y) / self.rho;
        let (p, dp_t, ddp) = bump(t);
        let r2 = self.rho * self.rho;
        Profile { f: p, fp_over_r: dp_t / r2, fpp: ddp / r2 }
    }
}

impl Profile {
    /// `H_f p = f″ (r̂·p) r̂ + (f′/r)(p − (r̂·p) r̂)`.
    fn hessian_times(&self, y: Vec3, p: Vec3) -> Vec3 {
        let r = norm(y);
        if r == 0.0 {
            // f′/r → f″ at the origin, so H_f = f″ I
            return [self.fpp * p[0], self.fpp * p[1], self.fpp * p[2]];
        }
        let u = [y[0] / r, y[1] / r, y[2] / r];
        let up = dot(u, p);
        let a = self.fp_over_r;
        let b = (self.fpp - a) * up;
        [a * p[0] + b * u[0], a * p[1] + b * u[1], a * p[2] + b * u[2]]
    }

    fn laplacian(&self) -> f64 {
        self.fpp + 2.0 * self.fp_over_r
    }
}

/// Radial node count that resolves bump integrands to ~1e-10.
const BUMP_RADIAL_NODES: usize = 64;

fn check_vec(name: &str, v: Vec3) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be finite")))
    }
}

fn check_inner_radius(rho: f64, ctx: &WaveContext) -> Result<()> {
    if !(rho > 0.0 && rho < ctx.radius) {
        return Err(Error::InvalidArgument(format!(
            "profile radius rho = {rho} must satisfy 0 < rho < R = {}",
            ctx.radius
        )));
    }
    Ok(())
}

/// `J = ∇×∇×F − κ²F` for `F(x) = p ψ(|x|/ρ)`.
pub fn curlcurl_source(p: Vec3, rho: f64, ctx: &WaveContext) -> Result<SourceSpec> {
    check_vec("polarization", p)?;
    check_inner_radius(rho, ctx)?;
    let b = RadialBump { rho };
    let k2 = ctx.kappa * ctx.kappa;
    let j: VectorField = Arc::new(move |y| {
        let pr = b.at(y);
        let h = pr.hessian_times(y, p);
        let c = pr.laplacian() + k2 * pr.f;
        to_complex([h[0] - c * p[0], h[1] - c * p[1], h[2] - c * p[2]])
    });
    let div: ScalarField = Arc::new(move |y| {
        let pr = b.at(y);
        (-k2 * pr.fp_over_r * dot(y, p)).into()
    });
    let graddiv: VectorField = Arc::new(move |y| {
        let h = b.at(y).hessian_times(y, p);
        to_complex([-k2 * h[0], -k2 * h[1], -k2 * h[2]])
    });
    let jcal: VectorField = Arc::new(move |y| {
        let pr = b.at(y);
        let c = -(pr.laplacian() + k2 * pr.f);
        to_complex([c * p[0], c * p[1], c * p[2]])
    });
    Ok(SourceSpec::new("curlcurl", ctx, rho, RegularityClass::HdivGrad, j, Some(div), Some(graddiv), Some(jcal))?
        .with_radial_nodes(BUMP_RADIAL_NODES))
}

/// `J = ∇Q` for `Q(x) = ψ(|x|/ρ) (amplitude + tilt·x)`.
pub fn gradient_source(amplitude: f64, tilt: Vec3, rho: f64, ctx: &WaveContext) -> Result<SourceSpec> {
    check_vec("tilt", tilt)?;
    if !amplitude.is_finite() {
        return Err(Error::InvalidArgument("amplitude must be finite".into()));
    }
    if !(rho > 0.0 && rho <= ctx.radius) {
        return Err(Error::InvalidArgument(format!("rho = {rho} must lie in (0, R]")));
    }
    let b = RadialBump { rho };
    let q = move |y: Vec3| b.at(y).f * (amplitude + dot(tilt, y));
    check_boundary_trace(&q, ctx.radius)?;
    let j: VectorField = Arc::new(move |y| {
        let pr = b.at(y);
        let lin = amplitude + dot(tilt, y);
        let c = pr.fp_over_r * lin;
        to_complex([c * y[0] + pr.f * tilt[0], c * y[1] + pr.f * tilt[1], c * y[2] + pr.f * tilt[2]])
    });
    Ok(SourceSpec::new("gradient", ctx, rho, RegularityClass::L2, j, None, None, None)?
        .with_radial_nodes(BUMP_RADIAL_NODES))
}

/// Rejects scalar potentials that do not vanish on `|x| = radius`, sampled on
/// a Fibonacci lattice.
pub fn check_boundary_trace<Q: Fn(Vec3) -> f64>(q: &Q, radius: f64) -> Result<()> {
    let n = 400;
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
        let s = (1.0 - z * z).sqrt();
        let (sp, cp) = (golden * i as f64).sin_cos();
        worst = worst.max(q([radius * s * cp, radius * s * sp, radius * z]).abs());
    }
    if worst > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "scalar potential does not vanish on the boundary (max |Q| = {worst:.3e})"
        )));
    }
    Ok(())
}

/// Requires `κR` to be a zero of `j_0`.
fn check_bessel_root(ctx: &WaveContext) -> Result<()> {
    let v = sph_bessel_j(0, ctx.kr());
    if v.abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "kappa R = {} is not a zero of j_0 (j_0 = {v:.3e})",
            ctx.kr()
        )));
    }
    Ok(())
}

fn check_power(name: &str, m: u32) -> Result<()> {
    if m <= 2 {
        return Err(Error::InvalidArgument(format!("{name} = {m} must exceed 2")));
    }
    Ok(())
}

/// `N^m = m ∫_0^R j_0^{m−1}(κr) j_1²(κr) r² dr`.
pub fn bessel_normalizer(m: u32, ctx: &WaveContext) -> f64 {
    let k = ctx.kappa;
    let mf = m as f64;
    integrate_interval(0.0, ctx.radius, 64, |r| {
        let z = k * r;
        let j0 = sph_bessel_j(0, z);
        let j1 = sph_bessel_j(1, z);
        mf * j0.powi(m as i32 - 1) * j1 * j1 * r * r
    })
}

/// Weighted sum `Σ c_l j_0^{m_l}(κ|x|)` and its derivatives, all radial.
#[derive(Debug, Clone)]
struct BesselPowers {
    kappa: f64,
    terms: Vec<(f64, f64)>,
}

impl BesselPowers {
    fn pieces(&self, r: f64) -> (f64, f64, f64, f64) {
        let z = self.kappa * r;
        let j0 = sph_bessel_j(0, z);
        let j1_z = j1_over_z(z);
        let j1 = j1_z * z;
        (z, j0, j1, j1_z)
    }

    /// Radial component of `J = Σ c ∇j_0^m`, divided by `r` (so `J = g·y`).
    fn grad_over_r(&self, r: f64) -> f64 {
        let (_, j0, _, j1_z) = self.pieces(r);
        let k2 = self.kappa * self.kappa;
        self.terms.iter().map(|(c, m)| -c * k2 * m * j0.powf(m - 1.0) * j1_z).sum()
    }

    /// `∇·J = κ² Σ c [m(m−1) j_0^{m−2} j_1² − m j_0^m]`.
    fn div(&self, r: f64) -> f64 {
        let (_, j0, j1, _) = self.pieces(r);
        let k2 = self.kappa * self.kappa;
        self.terms
            .iter()
            .map(|(c, m)| c * k2 * (m * (m - 1.0) * j0.powf(m - 2.0) * j1 * j1 - m * j0.powf(*m)))
            .sum()
    }

    /// Radial derivative of [`Self::div`] divided by `r`.
    fn graddiv_over_r(&self, r: f64) -> f64 {
        let (_, j0, j1, j1_z) = self.pieces(r);
        let k4 = self.kappa.powi(4);
        self.terms
            .iter()
            .map(|(c, m)| {
                // each term carries one factor j_1 = z (j_1/z)
                let t1 = -m * (m - 1.0) * (m - 2.0) * j0.powf(m - 3.0) * j1 * j1;
                let t2 = 2.0 * m * (m - 1.0) * j0.powf(m - 2.0) * (j0 - 2.0 * j1_z);
                let t3 = m * m * j0.powf(m - 1.0);
                c * k4 * j1_z * (t1 + t2 + t3)
            })
            .sum()
    }
}

fn bessel_spec(name: &str, terms: Vec<(f64, f64)>, ctx: &WaveContext) -> Result<SourceSpec> {
    let bp = BesselPowers { kappa: ctx.kappa, terms };
    let k2 = ctx.kappa * ctx.kappa;
    let radial = |g: f64, y: Vec3| to_complex([g * y[0], g * y[1], g * y[2]]);
    let b1 = bp.clone();
    let j: VectorField = Arc::new(move |y| radial(b1.grad_over_r(norm(y)), y));
    let b2 = bp.clone();
    let div: ScalarField = Arc::new(move |y| b2.div(norm(y)).into());
    let b3 = bp.clone();
    let graddiv: VectorField = Arc::new(move |y| radial(b3.graddiv_over_r(norm(y)), y));
    let b4 = bp;
    let jcal: VectorField = Arc::new(move |y| {
        let r = norm(y);
        radial(b4.grad_over_r(r) + b4.graddiv_over_r(r) / k2, y)
    });
    SourceSpec::new(name, ctx, ctx.radius, RegularityClass::HdivZeroTrace, j, Some(div), Some(graddiv), Some(jcal))
}

/// `J = ∇j_0^{m1}(κ|x|)/N^{m1} − ∇j_0^{m2}(κ|x|)/N^{m2}` on `B_R`, `κR` a zero of `j_0`.
pub fn bessel_pair_source(ctx: &WaveContext, m1: u32, m2: u32) -> Result<SourceSpec> {
    check_bessel_root(ctx)?;
    check_power("m1", m1)?;
    check_power("m2", m2)?;
    if m1 == m2 {
        return Err(Error::InvalidArgument("m1 and m2 must differ".into()));
    }
    let n1 = bessel_normalizer(m1, ctx);
    let n2 = bessel_normalizer(m2, ctx);
    bessel_spec("bessel_pair", vec![(1.0 / n1, m1 as f64), (-1.0 / n2, m2 as f64)], ctx)
}

/// `J = ∇j_0^s(κ|x|)` on `B_R`.
pub fn bessel_single_source(ctx: &WaveContext, s: u32) -> Result<SourceSpec> {
    check_bessel_root(ctx)?;
    check_power("s", s)?;
    bessel_spec("bessel_single", vec![(1.0, s as f64)], ctx)
}

/// Radial profile of the radiating dipole control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DipoleProfile {
    #[default]
    Bump,
    Sharp,
}

/// `J = p ψ(|x|/ρ)` (bump) or `J = p 1_{|x| ≤ ρ}` (sharp).
pub fn dipole_ball_source(p: Vec3, rho: f64, profile: DipoleProfile, ctx: &WaveContext) -> Result<SourceSpec> {
    check_vec("polarization", p)?;
    match profile {
        DipoleProfile::Bump => {
            check_inner_radius(rho, ctx)?;
            let b = RadialBump { rho };
            let k2 = ctx.kappa * ctx.kappa;
            let j: VectorField = Arc::new(move |y| {
                let f = b.at(y).f;
                to_complex([f * p[0], f * p[1], f * p[2]])
            });
            let div: ScalarField = Arc::new(move |y| (b.at(y).fp_over_r * dot(y, p)).into());
            let graddiv: VectorField = Arc::new(move |y| to_complex(b.at(y).hessian_times(y, p)));
            let jcal: VectorField = Arc::new(move |y| {
                let pr = b.at(y);
                let h = pr.hessian_times(y, p);
                to_complex([pr.f * p[0] + h[0] / k2, pr.f * p[1] + h[1] / k2, pr.f * p[2] + h[2] / k2])
            });
            Ok(SourceSpec::new("dipole_ball", ctx, rho, RegularityClass::HdivGrad, j, Some(div), Some(graddiv), Some(jcal))?
                .with_radial_nodes(BUMP_RADIAL_NODES))
        }
        DipoleProfile::Sharp => {
            if !(rho > 0.0 && rho <= ctx.radius) {
                return Err(Error::InvalidArgument(format!("rho = {rho} must lie in (0, R]")));
            }
            let j: VectorField = Arc::new(move |_| to_complex(p));
            SourceSpec::new("dipole_ball_sharp", ctx, rho, RegularityClass::L2, j, None, None, None)
        }
    }
}

/// Divergence-free radiating control `J = ∇×(a ψ(|x|/ρ))`.
pub fn curl_bump_source(a: Vec3, rho: f64, ctx: &WaveContext) -> Result<SourceSpec> {
    check_vec("axis", a)?;
    check_inner_radius(rho, ctx)?;
    let b = RadialBump { rho };
    let j: VectorField = Arc::new(move |y| {
        let g = b.at(y).fp_over_r;
        let c = cross(y, a);
        to_complex([g * c[0], g * c[1], g * c[2]])
    });
    Ok(SourceSpec::new("curl_bump", ctx, rho, RegularityClass::DivergenceFree, j, None, None, None)?
        .with_radial_nodes(BUMP_RADIAL_NODES))
}

// ---------------------------------------------------------------------------
// JSON descriptor

/// `{"kind": ..., "params": {...}, "kappa": ..., "R": ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceDescriptor {
    pub kind: String,
    #[serde(default)]
    pub params: serde_json::Value,
    pub kappa: f64,
    #[serde(rename = "R")]
    pub radius: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurlcurlParams {
    #[serde(default = "default_p")]
    p: Vec3,
    #[serde(default = "default_rho")]
    rho: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GradientParams {
    #[serde(default = "default_rho")]
    rho: f64,
    #[serde(default = "default_amplitude")]
    amplitude: f64,
    #[serde(default = "default_tilt")]
    tilt: Vec3,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairParams {
    #[serde(default = "default_m1")]
    m1: u32,
    #[serde(default = "default_m2")]
    m2: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SingleParams {
    #[serde(default = "default_m1")]
    s: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DipoleParams {
    #[serde(default = "default_p")]
    p: Vec3,
    #[serde(default = "default_rho")]
    rho: f64,
    #[serde(default)]
    profile: DipoleProfile,
}

fn default_p() -> Vec3 {
    [0.0, 0.0, 1.0]
}
fn default_rho() -> f64 {
    0.5
}
fn default_amplitude() -> f64 {
    1.0
}
fn default_tilt() -> Vec3 {
    [0.5, -0.3, 0.8]
}
fn default_m1() -> u32 {
    3
}
fn default_m2() -> u32 {
    4
}

fn params<T: serde::de::DeserializeOwned>(v: &serde_json::Value) -> Result<T> {
    let v = if v.is_null() { serde_json::Value::Object(Default::default()) } else { v.clone() };
    serde_json::from_value(v).map_err(|e| Error::Descriptor(e.to_string()))
}

impl SourceDescriptor {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Descriptor(e.to_string()))
    }

    /// Wave context with default degree and tolerance.
    pub fn context(&self) -> Result<WaveContext> {
        WaveContext::new(self.kappa, self.radius).map_err(|e| Error::Descriptor(e.to_string()))
    }

    /// Builds the source against `ctx` (normally [`Self::context`], possibly
    /// with overrides applied).
    pub fn build(&self, ctx: &WaveContext) -> Result<SourceSpec> {
        match self.kind.as_str() {
            "curlcurl" => {
                let p: CurlcurlParams = params(&self.params)?;
                curlcurl_source(p.p, p.rho, ctx)
            }
            "gradient" => {
                let p: GradientParams = params(&self.params)?;
                gradient_source(p.amplitude, p.tilt, p.rho, ctx)
            }
            "bessel_pair" => {
                let p: PairParams = params(&self.params)?;
                bessel_pair_source(ctx, p.m1, p.m2)
            }
            "bessel_single" => {
                let p: SingleParams = params(&self.params)?;
                bessel_single_source(ctx, p.s)
            }
            "dipole_ball" => {
                let p: DipoleParams = params(&self.params)?;
                dipole_ball_source(p.p, p.rho, p.profile, ctx)
            }
            other => Err(Error::Descriptor(format!("unknown source kind `{other}`"))),
        }
    }
}
