//! Null-space residuals and the aggregate nonradiation verdict.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{default_surface_rule, farfield_direct, fourier_source_transform, SurfaceData};
use crate::greens::{grad_y_j0, j0_dyadic, WaveContext};
use crate::multipole::{coeff_table, scale_floor};
use crate::quadrature::{build_ball_rule, integrate, BallRule, Rule};
use crate::sources::{RegularityClass, SourceSpec};
use crate::vector::{cnorm, csub, is_finite3, norm, CVec3, Vec3};

/// The 26 directions of a cube's vertices, edge midpoints and face centres,
/// scaled to radius `r`.
pub fn cube_points(r: f64) -> Vec<Vec3> {
    let mut pts = Vec::with_capacity(26);
    for i in -1i32..=1 {
        for j in -1i32..=1 {
            for k in -1i32..=1 {
                if i == 0 && j == 0 && k == 0 {
                    continue;
                }
                let v = [i as f64, j as f64, k as f64];
                let n = norm(v);
                pts.push([r * v[0] / n, r * v[1] / n, r * v[2] / n]);
            }
        }
    }
    pts
}

/// The 12 vertices of a regular icosahedron, as unit vectors.
pub fn icosahedron_directions() -> Vec<Vec3> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let n = (1.0 + phi * phi).sqrt();
    let mut out = Vec::with_capacity(12);
    for s in [1.0, -1.0] {
        for t in [1.0, -1.0] {
            out.push([0.0, s / n, t * phi / n]);
            out.push([s / n, t * phi / n, 0.0]);
            out.push([t * phi / n, 0.0, s / n]);
        }
    }
    out
}

fn check_exterior(points: &[Vec3], radius: f64) -> Result<()> {
    for p in points {
        let r = norm(*p);
        if !(r > radius) {
            return Err(Error::InvalidArgument(format!(
                "null-space test point has |x| = {r}, must exceed R = {radius}"
            )));
        }
    }
    Ok(())
}

// A vector field sampled once at the rule nodes, reused for every test point.
fn sampled<F: Fn(Vec3) -> Result<CVec3>>(rule: &BallRule, f: F) -> Result<Vec<CVec3>> {
    rule.nodes()
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let v = f(*y)?;
            if !is_finite3(&v) {
                return Err(Error::NonFinite { index: i });
            }
            Ok(v)
        })
        .collect()
}

// Max over points of |∫ K(x, y) · data(y)| / scale, with `kernel` mapping
// (x, node index, node) to the contribution.
fn max_residual<K>(rule: &BallRule, points: &[Vec3], scale: f64, kernel: K) -> Result<f64>
where
    K: Fn(Vec3, usize, Vec3) -> CVec3 + Sync,
{
    let mut worst: f64 = 0.0;
    for x in points {
        let v = integrate(rule, 3, |i, y, out| {
            let c = kernel(*x, i, y);
            out.copy_from_slice(&c);
        })?;
        worst = worst.max(cnorm([v[0], v[1], v[2]]));
    }
    Ok(worst / scale_floor(scale))
}

fn j0(z: f64) -> f64 {
    if z < 1e-4 {
        1.0 - z * z / 6.0
    } else {
        z.sin() / z
    }
}

/// `max_x |∫ (I + κ⁻²∇∇) j_0(κ|x − y|) J(y) dy| / ‖J‖`.
pub fn nullspace_residual_n1(src: &SourceSpec, ctx: &WaveContext, rule: &BallRule, points: &[Vec3]) -> Result<f64> {
    check_exterior(points, ctx.radius)?;
    let j = sampled(rule, |y| Ok(src.eval(y)))?;
    let scale = src.l2_norm(rule)?;
    let kappa = ctx.kappa;
    max_residual(rule, points, scale, |x, i, y| {
        let m = j0_dyadic(x, y, kappa);
        let v = j[i];
        [0, 1, 2].map(|l| m[l][0] * v[0] + m[l][1] * v[1] + m[l][2] * v[2])
    })
}

fn n2_admissible(src: &SourceSpec) -> bool {
    match src.regularity {
        RegularityClass::HdivZeroTrace | RegularityClass::DivergenceFree => true,
        // a support strictly inside B_R has zero trace on the sphere
        RegularityClass::HdivGrad => src.support_radius < src.radius,
        RegularityClass::L2 => false,
    }
}

/// `max_x |∫ j_0 J − κ⁻² ∫ ∇_y j_0 (∇·J)| / ‖J‖`.
pub fn nullspace_residual_n2(src: &SourceSpec, ctx: &WaveContext, rule: &BallRule, points: &[Vec3]) -> Result<f64> {
    if !n2_admissible(src) {
        return Err(Error::InsufficientRegularity(format!(
            "source `{}` ({:?}) needs a divergence with zero trace on the sphere",
            src.name, src.regularity
        )));
    }
    check_exterior(points, ctx.radius)?;
    let j = sampled(rule, |y| Ok(src.eval(y)))?;
    let div = sampled(rule, |y| Ok([src.eval_div(y), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]))?;
    let scale = src.l2_norm(rule)?;
    let kappa = ctx.kappa;
    let k2 = 1.0 / (kappa * kappa);
    max_residual(rule, points, scale, |x, i, y| {
        let a = j0(kappa * norm(crate::vector::sub(x, y)));
        let g = grad_y_j0(x, y, kappa);
        let d = div[i][0] * k2;
        [0, 1, 2].map(|l| j[i][l] * a - d * g[l])
    })
}

/// `max_x |∫ j_0 (J + κ⁻²∇(∇·J))| / ‖J‖`.
pub fn nullspace_residual_n3(src: &SourceSpec, ctx: &WaveContext, rule: &BallRule, points: &[Vec3]) -> Result<f64> {
    if !src.has_jcal() {
        return Err(Error::InsufficientRegularity(format!("source `{}` has no grad-div evaluator", src.name)));
    }
    check_exterior(points, ctx.radius)?;
    let jc = sampled(rule, |y| src.eval_jcal(y))?;
    let scale = src.l2_norm(rule)?;
    let kappa = ctx.kappa;
    max_residual(rule, points, scale, |x, i, y| {
        let a = j0(kappa * norm(crate::vector::sub(x, y)));
        [0, 1, 2].map(|l| jc[i][l] * a)
    })
}

/// Sampling choices for [`classify`].
#[derive(Debug, Clone)]
pub struct ClassifyParams {
    /// Ball rule override `(n_r, n_polar, n_azim)`; `None` uses the source default.
    pub ball_counts: Option<(usize, usize, usize)>,
    /// Radius of the sphere carrying `U` and `V`.
    pub rprime: f64,
    /// Surface rule override `(n_polar, n_azim)`.
    pub surface_counts: Option<(usize, usize)>,
    /// Unit directions; far field at `x̂ = d`, transforms at `ξ = κd`.
    pub directions: Vec<Vec3>,
    /// Exterior points for the null-space integrals.
    pub points: Vec<Vec3>,
}

impl ClassifyParams {
    pub fn defaults(ctx: &WaveContext) -> Self {
        Self {
            ball_counts: None,
            rprime: 1.25 * ctx.radius,
            surface_counts: None,
            directions: icosahedron_directions(),
            points: cube_points(1.5 * ctx.radius),
        }
    }

    pub fn with_rprime(mut self, rprime: f64) -> Self {
        self.rprime = rprime;
        self
    }

    fn validate(&self, ctx: &WaveContext) -> Result<()> {
        if !(self.rprime > ctx.radius) || !self.rprime.is_finite() {
            return Err(Error::InvalidArgument(format!("R' = {} must exceed R = {}", self.rprime, ctx.radius)));
        }
        if self.directions.is_empty() || self.points.is_empty() {
            return Err(Error::InvalidArgument("classification needs directions and exterior points".into()));
        }
        for d in &self.directions {
            if !((norm(*d) - 1.0).abs() <= 1e-12) {
                return Err(Error::InvalidArgument(format!("direction {d:?} is not a unit vector")));
            }
        }
        check_exterior(&self.points, ctx.radius)
    }

    pub fn ball_rule(&self, src: &SourceSpec, ctx: &WaveContext) -> Result<BallRule> {
        match self.ball_counts {
            Some((nr, np, na)) => build_ball_rule(src.support_radius.min(ctx.radius), nr, np, na),
            None => src.default_rule(ctx),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Overall {
    Nonradiating,
    Radiating,
    Inconsistent,
}

impl Overall {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(self) -> i32 {
        match self {
            Overall::Nonradiating => 0,
            Overall::Radiating => 1,
            Overall::Inconsistent => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    /// `None` (JSON `null`) when the test does not apply.
    pub residual: Option<f64>,
    pub threshold: f64,
    pub verdict: Verdict,
}

impl TestResult {
    pub fn judge(residual: f64, threshold: f64) -> Self {
        let verdict = if residual <= threshold { Verdict::Pass } else { Verdict::Fail };
        Self { residual: Some(residual), threshold, verdict }
    }

    pub fn not_applicable(threshold: f64) -> Self {
        Self { residual: None, threshold, verdict: Verdict::NotApplicable }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub beta_table: TestResult,
    pub farfield: TestResult,
    pub fourier_sphere: TestResult,
    #[serde(rename = "nearfield_U")]
    pub nearfield_u: TestResult,
    #[serde(rename = "nearfield_V")]
    pub nearfield_v: TestResult,
    #[serde(rename = "nullspace_N1")]
    pub nullspace_n1: TestResult,
    #[serde(rename = "nullspace_N2")]
    pub nullspace_n2: TestResult,
    #[serde(rename = "nullspace_N3")]
    pub nullspace_n3: TestResult,
    pub overall: Overall,
}

impl ClassificationReport {
    pub fn tests(&self) -> [(&'static str, &TestResult); 8] {
        [
            ("beta_table", &self.beta_table),
            ("farfield", &self.farfield),
            ("fourier_sphere", &self.fourier_sphere),
            ("nearfield_U", &self.nearfield_u),
            ("nearfield_V", &self.nearfield_v),
            ("nullspace_N1", &self.nullspace_n1),
            ("nullspace_N2", &self.nullspace_n2),
            ("nullspace_N3", &self.nullspace_n3),
        ]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn aggregate(tests: &[&TestResult]) -> Overall {
    let applicable: Vec<_> = tests.iter().filter(|t| t.verdict != Verdict::NotApplicable).collect();
    if applicable.iter().all(|t| t.verdict == Verdict::Pass) {
        Overall::Nonradiating
    } else if applicable.iter().all(|t| t.verdict == Verdict::Fail) {
        Overall::Radiating
    } else {
        Overall::Inconsistent
    }
}

/// Residuals of every test that applies to the source's class, each relative
/// to `‖J‖_{L²}`.
pub fn classify(src: &SourceSpec, ctx: &WaveContext, params: &ClassifyParams) -> Result<ClassificationReport> {
    params.validate(ctx)?;
    let tol = ctx.tol;
    let loose = 10.0 * tol;
    let rule = params.ball_rule(src, ctx)?;
    let scale = scale_floor(src.l2_norm(&rule)?);

    let beta_table = TestResult::judge(coeff_table(src, ctx, &rule)?.beta_residual(), tol);

    let mut ff: f64 = 0.0;
    for d in &params.directions {
        ff = ff.max(cnorm(farfield_direct(src, ctx, &rule, *d)?));
    }
    let farfield = TestResult::judge(ff / scale, tol);

    let xis: Vec<Vec3> = params.directions.iter().map(|d| d.map(|c| ctx.kappa * c)).collect();
    let fourier_sphere = if src.has_jcal() {
        let mut worst: f64 = 0.0;
        for xi in &xis {
            worst = worst.max(cnorm(fourier_source_transform(src, ctx, &rule, *xi)?));
        }
        TestResult::judge(worst / scale, tol)
    } else {
        TestResult::not_applicable(tol)
    };

    let surface = match params.surface_counts {
        Some((np, na)) => crate::quadrature::build_sphere_rule(params.rprime, np, na)?,
        None => default_surface_rule(ctx, &rule, params.rprime)?,
    };
    let sd = SurfaceData::compute(src, ctx, &rule, surface)?;
    let (mut wu, mut wv): (f64, f64) = (0.0, 0.0);
    for xi in &xis {
        wu = wu.max(cnorm(sd.u(*xi)?));
        wv = wv.max(cnorm(sd.v(*xi)?));
    }
    let nearfield_u = TestResult::judge(wu / scale, loose);
    let nearfield_v = TestResult::judge(wv / scale, loose);

    let nullspace_n1 = TestResult::judge(nullspace_residual_n1(src, ctx, &rule, &params.points)?, loose);
    let nullspace_n2 = if n2_admissible(src) && src.has_div() {
        TestResult::judge(nullspace_residual_n2(src, ctx, &rule, &params.points)?, tol)
    } else {
        TestResult::not_applicable(tol)
    };
    let nullspace_n3 = if src.has_jcal() {
        TestResult::judge(nullspace_residual_n3(src, ctx, &rule, &params.points)?, tol)
    } else {
        TestResult::not_applicable(tol)
    };

    let overall = aggregate(&[
        &beta_table,
        &farfield,
        &fourier_sphere,
        &nearfield_u,
        &nearfield_v,
        &nullspace_n1,
        &nullspace_n2,
        &nullspace_n3,
    ]);
    Ok(ClassificationReport {
        beta_table,
        farfield,
        fourier_sphere,
        nearfield_u,
        nearfield_v,
        nullspace_n1,
        nullspace_n2,
        nullspace_n3,
        overall,
    })
}

/// `|U(ξ) − 𝒥̂(ξ)|` and `|V(ξ) − 𝒥̂(ξ)|` relative to `|𝒥̂(ξ)|`, maximized over
/// `directions` (unit vectors, `ξ = κd`).
pub fn nearfield_identity_errors(
    src: &SourceSpec,
    ctx: &WaveContext,
    rule: &BallRule,
    rprime: f64,
    directions: &[Vec3],
) -> Result<(f64, f64)> {
    let surface = default_surface_rule(ctx, rule, rprime)?;
    let sd = SurfaceData::compute(src, ctx, rule, surface)?;
    let (mut eu, mut ev): (f64, f64) = (0.0, 0.0);
    for d in directions {
        let xi = d.map(|c| ctx.kappa * c);
        let jh = fourier_source_transform(src, ctx, rule, xi)?;
        let r = scale_floor(cnorm(jh));
        eu = eu.max(cnorm(csub(sd.u(xi)?, jh)) / r);
        ev = ev.max(cnorm(csub(sd.v(xi)?, jh)) / r);
    }
    Ok((eu, ev))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use crate::sources::{bessel_pair_source, curl_bump_source, dipole_ball_source, gradient_source, DipoleProfile};

    #[test]
    fn point_sets() {
        let p = cube_points(1.5);
        assert_eq!(p.len(), 26);
        assert!(p.iter().all(|x| (norm(*x) - 1.5).abs() < 1e-15));
        let c = p.iter().fold([0.0; 3], |a, x| crate::vector::add(a, *x));
        assert!(norm(c) < 1e-14);
        let d = icosahedron_directions();
        assert_eq!(d.len(), 12);
        // every vertex has five nearest neighbours at the same angle
        for a in &d {
            let near = d.iter().filter(|b| (crate::vector::dot(*a, **b) - 1.0 / 5f64.sqrt()).abs() < 1e-12).count();
            assert_eq!(near, 5);
        }
    }

    #[test]
    fn aggregate_rules() {
        let p = TestResult::judge(0.0, 1.0);
        let f = TestResult::judge(2.0, 1.0);
        let n = TestResult::not_applicable(1.0);
        assert_eq!(aggregate(&[&p, &n, &p]), Overall::Nonradiating);
        assert_eq!(aggregate(&[&f, &n, &f]), Overall::Radiating);
        assert_eq!(aggregate(&[&p, &f]), Overall::Inconsistent);
    }

    #[test]
    fn nan_residual_fails() {
        assert_eq!(TestResult::judge(f64::NAN, 1.0).verdict, Verdict::Fail);
    }

    #[test]
    fn interior_points_rejected() {
        let ctx = WaveContext::new(1.0, 1.0).unwrap();
        let src = gradient_source(1.0, [0.5, -0.3, 0.8], 0.5, &ctx).unwrap();
        let rule = build_ball_rule(0.5, 8, 8, 16).unwrap();
        let pts = [[2.0, 0.0, 0.0], [0.0, 0.9, 0.0]];
        assert!(matches!(nullspace_residual_n1(&src, &ctx, &rule, &pts), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            nullspace_residual_n2(&src, &ctx, &rule, &pts[..1]),
            Err(Error::InsufficientRegularity(_))
        ));
    }

    #[test]
    fn zero_source_is_nonradiating() {
        let ctx = WaveContext::new(1.0, 1.0).unwrap();
        let src = SourceSpec::zero(&ctx);
        let params = ClassifyParams { ball_counts: Some((6, 6, 12)), surface_counts: Some((6, 12)), ..ClassifyParams::defaults(&ctx) };
        let rep = classify(&src, &ctx, &params).unwrap();
        assert_eq!(rep.overall, Overall::Nonradiating);
        for (_, t) in rep.tests() {
            assert!(t.residual.is_none_or(|r| r == 0.0));
        }
    }

    #[test]
    fn json_field_names() {
        let t = TestResult::not_applicable(1e-8);
        let rep = ClassificationReport {
            beta_table: TestResult::judge(1e-9, 1e-8),
            farfield: t,
            fourier_sphere: t,
            nearfield_u: t,
            nearfield_v: t,
            nullspace_n1: t,
            nullspace_n2: t,
            nullspace_n3: t,
            overall: Overall::Nonradiating,
        };
        let v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|s| s.as_str()).collect();
        assert_eq!(
            keys,
            [
                "beta_table",
                "farfield",
                "fourier_sphere",
                "nearfield_U",
                "nearfield_V",
                "nullspace_N1",
                "nullspace_N2",
                "nullspace_N3",
                "overall"
            ]
        );
        assert_eq!(v["farfield"]["verdict"], "not_applicable");
        assert!(v["farfield"]["residual"].is_null());
        assert_eq!(v["beta_table"]["verdict"], "pass");
        assert_eq!(v["overall"], "nonradiating");
    }

    #[test]
    fn null_space_examples() {
        let c1 = WaveContext::new(1.0, 1.0).unwrap();
        let pts = cube_points(1.5);

        let grad = gradient_source(1.0, [0.5, -0.3, 0.8], 0.5, &c1).unwrap();
        let rule = grad.default_rule(&c1).unwrap();
        assert!(nullspace_residual_n1(&grad, &c1, &rule, &pts).unwrap() <= 1e-5);

        let dip = dipole_ball_source([0.0, 0.0, 1.0], 0.5, DipoleProfile::Bump, &c1).unwrap();
        let rule = dip.default_rule(&c1).unwrap();
        assert!(nullspace_residual_n1(&dip, &c1, &rule, &pts).unwrap() >= 1e-2);
        assert!(nullspace_residual_n3(&dip, &c1, &rule, &pts).unwrap() >= 1e-2);

        let pc = WaveContext::new(PI, 1.0).unwrap();
        let bp = bessel_pair_source(&pc, 3, 4).unwrap();
        let rule = bp.default_rule(&pc).unwrap();
        assert!(nullspace_residual_n2(&bp, &pc, &rule, &pts).unwrap() <= 1e-6);

        // ∇·J = 0 removes the correction term: N2 reduces to its first term,
        // which is the N3 integrand with 𝒥 = J.
        let cb = curl_bump_source([0.2, 0.4, -0.3], 0.5, &c1).unwrap();
        let rule = cb.default_rule(&c1).unwrap();
        let n2 = nullspace_residual_n2(&cb, &c1, &rule, &pts).unwrap();
        let first = nullspace_residual_n3(&cb, &c1, &rule, &pts).unwrap();
        assert!((n2 - first).abs() <= 1e-8 * first.max(1.0));
        assert!(n2 > 1e-2);
    }
}
