//! Multipole moments of a source against the regular wave functions
//! `u_n^m(y) = j_n(κ|y|) conj(Y_n^m(ŷ))`.
//!
//! All families share one packed layout: entry `HarmonicIndex::linear()` of
//! each vector holds the 3-vector coefficient for `(n, m)`.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::greens::WaveContext;
use crate::quadrature::{integrate, BallRule};
use crate::sources::{Pairing, RegularityClass, SourceSpec};
use crate::specialfuncs::{phase_powers, sph_bessel_j_with_derivative, Direction, HarmonicIndex, LegendreTable};
use crate::vector::{cadd, cnorm, CVec3, Vec3, CZERO3};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Evaluator for `u_n^m`, `∇u_n^m` and the Hessian of `u_n^m`, `n ≤ degree`.
#[derive(Debug, Clone, Copy)]
pub struct RegularWaves {
    pub degree: usize,
    pub kappa: f64,
}

impl RegularWaves {
    pub fn new(degree: usize, kappa: f64) -> Self {
        Self { degree, kappa }
    }

    pub fn len(&self) -> usize {
        HarmonicIndex::count(self.degree)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `u_n^m(y)` for all packed indices.
    pub fn values(&self, y: Vec3) -> Vec<Complex64> {
        let mut u = vec![ZERO; self.len()];
        self.fill(y, &mut u, None);
        u
    }

    /// Values and Cartesian gradients.
    pub fn values_and_gradients(&self, y: Vec3) -> (Vec<Complex64>, Vec<CVec3>) {
        let mut u = vec![ZERO; self.len()];
        let mut g = vec![CZERO3; self.len()];
        self.fill(y, &mut u, Some(&mut g));
        (u, g)
    }

    fn fill(&self, y: Vec3, u: &mut [Complex64], grad: Option<&mut [CVec3]>) {
        let nmax = self.degree;
        let r = crate::vector::norm(y);
        let z = self.kappa * r;
        let (j, jp) = sph_bessel_j_with_derivative(nmax, z);
        let dir = Direction::of(y);
        let table = LegendreTable::new(nmax, dir.cos_theta, dir.sin_theta);
        // e^{-imφ}
        let phases = phase_powers(nmax, dir.phase.conj());
        for n in 0..=nmax {
            let base = n * n + n;
            for m in 0..=n {
                let v = phases[m] * (j[n] * table.value(n, m));
                u[base + m] = v;
                u[base - m] = v.conj();
            }
        }
        let Some(grad) = grad else { return };

        let (c, s) = (dir.cos_theta, dir.sin_theta);
        let (cp, sp) = (dir.phase.re, dir.phase.im);
        let rhat = [s * cp, s * sp, c];
        let that = [c * cp, c * sp, -s];
        let phat = [-sp, cp, 0.0];
        let k = self.kappa;
        for n in 0..=nmax {
            // κ j_n(z)/z, with its limit at the origin
            let jz = if z > 0.0 {
                k * j[n] / z
            } else if n == 1 {
                k / 3.0
            } else {
                0.0
            };
            let base = n * n + n;
            for m in 0..=n {
                let e = phases[m];
                let radial = e * (k * jp[n] * table.value(n, m));
                let polar = e * (jz * table.dtheta(n, m));
                let azim = -I * e * (jz * m as f64 * table.over_sin(n, m));
                let mut gv = CZERO3;
                for a in 0..3 {
                    gv[a] = radial * rhat[a] + polar * that[a] + azim * phat[a];
                }
                grad[base + m] = gv;
                grad[base - m] = [gv[0].conj(), gv[1].conj(), gv[2].conj()];
            }
        }
    }

    /// Hessians by central differences of the analytic gradient, one Richardson
    /// step (`h`, `h/2`), symmetrized. `out[i][a]` is row `a` of the Hessian.
    pub fn hessians(&self, y: Vec3, h: f64) -> Vec<[CVec3; 3]> {
        let len = self.len();
        let mut out = vec![[CZERO3; 3]; len];
        let central = |a: usize, step: f64| {
            let mut p = y;
            let mut q = y;
            p[a] += step;
            q[a] -= step;
            let (_, gp) = self.values_and_gradients(p);
            let (_, gq) = self.values_and_gradients(q);
            (gp, gq)
        };
        for a in 0..3 {
            let (gp1, gq1) = central(a, h);
            let (gp2, gq2) = central(a, 0.5 * h);
            for i in 0..len {
                for b in 0..3 {
                    let d1 = (gp1[i][b] - gq1[i][b]) / (2.0 * h);
                    let d2 = (gp2[i][b] - gq2[i][b]) / h;
                    out[i][a][b] = (4.0 * d2 - d1) / 3.0;
                }
            }
        }
        for hm in out.iter_mut() {
            for a in 0..3 {
                for b in (a + 1)..3 {
                    let avg = 0.5 * (hm[a][b] + hm[b][a]);
                    hm[a][b] = avg;
                    hm[b][a] = avg;
                }
            }
        }
        out
    }
}

/// Coefficient family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Alpha,
    Gamma,
    Zeta,
    Eta,
}

impl From<Pairing> for Family {
    fn from(p: Pairing) -> Self {
        match p {
            Pairing::Gamma => Family::Gamma,
            Pairing::Zeta => Family::Zeta,
            Pairing::Eta => Family::Eta,
        }
    }
}

fn zeta_allowed(src: &SourceSpec) -> bool {
    match src.regularity {
        RegularityClass::HdivZeroTrace | RegularityClass::DivergenceFree => true,
        // a support strictly inside B_R has zero trace on ∂B_R
        _ => src.support_radius < src.radius && src.regularity != RegularityClass::L2,
    }
}

fn eta_allowed(src: &SourceSpec) -> bool {
    matches!(src.regularity, RegularityClass::HdivGrad | RegularityClass::DivergenceFree)
}

fn check_family(src: &SourceSpec, fam: Family) -> Result<()> {
    let ok = match fam {
        Family::Alpha | Family::Gamma => true,
        Family::Zeta => zeta_allowed(src),
        Family::Eta => eta_allowed(src),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InsufficientRegularity(format!(
            "{fam:?} coefficients are not defined for source `{}` of class {:?}",
            src.name, src.regularity
        )))
    }
}

/// Integrates every requested family for all `n ≤ degree` in one pass over
/// the rule. Results come back in the order of `families`.
pub fn moments(
    src: &SourceSpec,
    ctx: &WaveContext,
    rule: &BallRule,
    degree: usize,
    families: &[Family],
) -> Result<Vec<Vec<CVec3>>> {
    for f in families {
        check_family(src, *f)?;
    }
    let waves = RegularWaves::new(degree, ctx.kappa);
    let count = waves.len();
    let nf = families.len();
    let need_grad = families.contains(&Family::Zeta);
    let need_hess = families.contains(&Family::Gamma);
    let need_graddiv = families.contains(&Family::Eta);
    let inv_k2 = 1.0 / (ctx.kappa * ctx.kappa);
    let h = 1e-4 * ctx.radius;

    let flat = integrate(rule, nf * count * 3, |_, y, out| {
        let j = src.eval(y);
        if cnorm(j) == 0.0 && !need_graddiv && !need_grad {
            return;
        }
        let (u, g) = if need_grad { waves.values_and_gradients(y) } else { (waves.values(y), Vec::new()) };
        let hess = if need_hess { waves.hessians(y, h) } else { Vec::new() };
        let div = if need_grad { src.eval_div(y) } else { ZERO };
        let gd = if need_graddiv { src.eval_graddiv(y).unwrap_or(CZERO3) } else { CZERO3 };
        for (fi, fam) in families.iter().enumerate() {
            let block = &mut out[fi * count * 3..(fi + 1) * count * 3];
            for i in 0..count {
                let v: CVec3 = match fam {
                    Family::Alpha => [u[i] * j[0], u[i] * j[1], u[i] * j[2]],
                    Family::Gamma => {
                        let hm = &hess[i];
                        let mut v = CZERO3;
                        for a in 0..3 {
                            v[a] = (hm[a][0] * j[0] + hm[a][1] * j[1] + hm[a][2] * j[2]) * inv_k2;
                        }
                        v
                    }
                    Family::Zeta => {
                        let c = -div * inv_k2;
                        [g[i][0] * c, g[i][1] * c, g[i][2] * c]
                    }
                    Family::Eta => {
                        let c = u[i] * inv_k2;
                        [c * gd[0], c * gd[1], c * gd[2]]
                    }
                };
                block[3 * i..3 * i + 3].copy_from_slice(&v);
            }
        }
    })?;

    Ok((0..nf)
        .map(|fi| {
            (0..count)
                .map(|i| {
                    let o = (fi * count + i) * 3;
                    [flat[o], flat[o + 1], flat[o + 2]]
                })
                .collect()
        })
        .collect())
}

fn single(src: &SourceSpec, ctx: &WaveContext, rule: &BallRule, n: usize, m: i64, fam: Family) -> Result<CVec3> {
    if n > ctx.degree {
        return Err(Error::InvalidArgument(format!("degree n = {n} exceeds truncation N = {}", ctx.degree)));
    }
    let idx = HarmonicIndex::new(n, m)?;
    let all = moments(src, ctx, rule, n, &[fam])?;
    Ok(all[0][idx.linear()])
}

/// `α_n^m = ∫ u_n^m J`.
pub fn coeff_alpha(src: &SourceSpec, ctx: &WaveContext, rule: &BallRule, n: usize, m: i64) -> Result<CVec3> {
    single(src, ctx, rule, n, m, Family::Alpha)
}

/// `γ_n^m = κ⁻² ∫ (∇∇u_n^m) J`.
pub fn coeff_gamma(src: &SourceSpec, ctx: &WaveContext, rule: &BallRule, n: usize, m: i64) -> Result<CVec3> {
    single(src, ctx, rule, n, m, Family::Gamma)
}

/// `ζ_n^m = −κ⁻² ∫ ∇u_n^m (∇·J)`.
pub fn coeff_zeta(src: &SourceSpec, ctx: &WaveContext, rule: &BallRule, n: usize, m: i64) -> Result<CVec3> {
    single(src, ctx, rule, n, m, Family::Zeta)
}

/// `η_n^m = κ⁻² ∫ u_n^m ∇(∇·J)`.
pub fn coeff_eta(src: &SourceSpec, ctx: &WaveContext, rule: &BallRule, n: usize, m: i64) -> Result<CVec3> {
    single(src, ctx, rule, n, m, Family::Eta)
}

/// Coefficient table up to `degree`, with β assembled from the class pairing.
#[derive(Debug, Clone, Serialize)]
pub struct MultipoleCoeffs {
    pub degree: usize,
    pub kappa: f64,
    pub pairing: Option<Pairing>,
    pub alpha: Vec<CVec3>,
    pub gamma: Option<Vec<CVec3>>,
    pub zeta: Option<Vec<CVec3>>,
    pub eta: Option<Vec<CVec3>>,
    pub beta: Vec<CVec3>,
    /// `‖J‖_{L²}`, the reference scale for relative thresholds.
    pub source_scale: f64,
}

impl MultipoleCoeffs {
    /// All-zero table (useful as a neutral element in tests).
    pub fn zeros(degree: usize, kappa: f64) -> Self {
        let z = vec![CZERO3; HarmonicIndex::count(degree)];
        Self {
            degree,
            kappa,
            pairing: None,
            alpha: z.clone(),
            gamma: None,
            zeta: Some(z.clone()),
            eta: Some(z.clone()),
            beta: z,
            source_scale: 0.0,
        }
    }

    pub fn family(&self, fam: Family) -> Option<&[CVec3]> {
        match fam {
            Family::Alpha => Some(&self.alpha),
            Family::Gamma => self.gamma.as_deref(),
            Family::Zeta => self.zeta.as_deref(),
            Family::Eta => self.eta.as_deref(),
        }
    }

    pub fn get(&self, fam: Family, idx: HarmonicIndex) -> Option<CVec3> {
        self.family(fam).and_then(|v| v.get(idx.linear()).copied())
    }

    pub fn beta_at(&self, idx: HarmonicIndex) -> CVec3 {
        self.beta[idx.linear()]
    }

    /// The family paired with α (zeros for divergence-free sources).
    pub fn paired(&self) -> Vec<CVec3> {
        match self.pairing {
            Some(p) => self.family(p.into()).map(|v| v.to_vec()).unwrap_or_default(),
            None => vec![CZERO3; self.alpha.len()],
        }
    }

    /// `max |v_n^m|` over `n ≤ up_to`.
    pub fn max_norm(values: &[CVec3], up_to: usize) -> f64 {
        values.iter().take(HarmonicIndex::count(up_to)).map(|v| cnorm(*v)).fold(0.0, f64::max)
    }

    /// `max |β| / scale` over the whole table.
    pub fn beta_residual(&self) -> f64 {
        Self::max_norm(&self.beta, self.degree) / scale_floor(self.source_scale)
    }

    /// CSV with columns `n,m,pairing` followed by real/imaginary parts of α,
    /// the paired family and β.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header = vec!["n".to_string(), "m".to_string(), "pairing".to_string()];
        for fam in ["alpha", "pair", "beta"] {
            for c in 1..=3 {
                header.push(format!("Re_{fam}{c}"));
                header.push(format!("Im_{fam}{c}"));
            }
        }
        writeln!(w, "{}", header.join(","))?;
        let paired = self.paired();
        let tag = self.pairing.map(|p| p.to_string()).unwrap_or_else(|| "none".into());
        for (i, idx) in HarmonicIndex::all(self.degree).enumerate() {
            let mut row = vec![idx.n.to_string(), idx.m.to_string(), tag.clone()];
            for v in [self.alpha[i], paired[i], self.beta[i]] {
                for c in v {
                    row.push(format!("{:.16e}", c.re));
                    row.push(format!("{:.16e}", c.im));
                }
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Denominator for relative thresholds; keeps the zero source at residual 0.
pub fn scale_floor(scale: f64) -> f64 {
    scale.max(f64::MIN_POSITIVE)
}

/// Every coefficient valid for the source's class, for `n ≤ ctx.degree`.
pub fn coeff_table(src: &SourceSpec, ctx: &WaveContext, rule: &BallRule) -> Result<MultipoleCoeffs> {
    let pairing = src.regularity.pairing();
    let mut fams = vec![Family::Alpha];
    if let Some(p) = pairing {
        fams.push(p.into());
    }
    let mut res = moments(src, ctx, rule, ctx.degree, &fams)?.into_iter();
    let alpha = res.next().expect("alpha requested");
    let paired = res.next();
    let count = alpha.len();
    let zeros = || Some(vec![CZERO3; count]);
    let (gamma, zeta, eta) = match pairing {
        Some(Pairing::Gamma) => (paired.clone(), None, None),
        Some(Pairing::Zeta) => (None, paired.clone(), None),
        Some(Pairing::Eta) => (None, None, paired.clone()),
        None => (None, zeros(), zeros()),
    };
    let beta = match &paired {
        Some(p) => alpha.iter().zip(p).map(|(a, b)| cadd(*a, *b)).collect(),
        None => alpha.clone(),
    };
    Ok(MultipoleCoeffs {
        degree: ctx.degree,
        kappa: ctx.kappa,
        pairing,
        alpha,
        gamma,
        zeta,
        eta,
        beta,
        source_scale: src.l2_norm(rule)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::build_ball_rule;
    use crate::sources::{dipole_ball_source, DipoleProfile};
    use crate::specialfuncs::sph_harmonic;
    use std::f64::consts::PI;

    #[test]
    fn values_match_direct_harmonics() {
        let w = RegularWaves::new(6, 1.7);
        let y = [0.3, -0.4, 0.5];
        let u = w.values(y);
        let r = crate::vector::norm(y);
        let th = (y[2] / r).acos();
        let ph = y[1].atan2(y[0]);
        for idx in HarmonicIndex::all(6) {
            let expect = crate::specialfuncs::sph_bessel_j(idx.n, 1.7 * r) * sph_harmonic(idx, th, ph).conj();
            assert!((u[idx.linear()] - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn gradients_match_differences() {
        let w = RegularWaves::new(8, 2.2);
        for y in [[0.3, -0.4, 0.5], [0.0, 0.0, 0.4], [1e-3, 2e-3, -0.6], [0.05, 0.02, 0.01]] {
            let (_, g) = w.values_and_gradients(y);
            let h = 1e-4;
            for a in 0..3 {
                let at = |s: f64| {
                    let mut p = y;
                    p[a] += s * h;
                    w.values(p)
                };
                let (p1, m1, p2, m2) = (at(1.0), at(-1.0), at(2.0), at(-2.0));
                for i in 0..w.len() {
                    let fd = (8.0 * (p1[i] - m1[i]) - (p2[i] - m2[i])) / (12.0 * h);
                    assert!((g[i][a] - fd).norm() < 1e-9, "y={y:?} i={i} a={a}");
                }
            }
        }
    }

    #[test]
    fn gradients_at_origin_use_limits() {
        let k = 1.3;
        let w = RegularWaves::new(3, k);
        let (_, g) = w.values_and_gradients([0.0; 3]);
        let c0 = k / 3.0 * (3.0 / (4.0 * PI)).sqrt();
        let c1 = k / 3.0 * (3.0 / (8.0 * PI)).sqrt();
        let i10 = HarmonicIndex::new(1, 0).unwrap().linear();
        let i11 = HarmonicIndex::new(1, 1).unwrap().linear();
        let i1m = HarmonicIndex::new(1, -1).unwrap().linear();
        assert!((g[i10][2] - c0).norm() < 1e-15 && g[i10][0].norm() < 1e-15);
        assert!((g[i11][0] - c1).norm() < 1e-15 && (g[i11][1] + I * c1).norm() < 1e-15);
        assert!((g[i1m][1] - I * c1).norm() < 1e-15);
        for (i, gv) in g.iter().enumerate() {
            if ![i10, i11, i1m].contains(&i) {
                assert!(cnorm(*gv) < 1e-15);
            }
        }
    }

    #[test]
    fn hessian_trace_is_helmholtz() {
        let k = 1.9;
        let w = RegularWaves::new(10, k);
        for y in [[0.3, -0.4, 0.5], [0.0, 0.1, 0.7], [-0.8, 0.2, 0.1]] {
            let u = w.values(y);
            let hs = w.hessians(y, 1e-4);
            for i in 0..w.len() {
                let tr = hs[i][0][0] + hs[i][1][1] + hs[i][2][2];
                assert!((tr + k * k * u[i]).norm() < 1e-8, "y={y:?} i={i}");
            }
        }
    }

    #[test]
    fn sharp_dipole_monopole_coefficient() {
        let ctx = WaveContext::new(1.0, 1.0).unwrap();
        let src = dipole_ball_source([0.0, 0.0, 1.0], 1.0, DipoleProfile::Sharp, &ctx).unwrap();
        let rule = src.default_rule(&ctx).unwrap();
        let a = coeff_alpha(&src, &ctx, &rule, 0, 0).unwrap();
        // √(4π)(sin 1 − cos 1)
        assert!((a[2].re - 1.0676151695177978).abs() < 1e-12);
        assert!(a[0].norm() < 1e-15 && a[1].norm() < 1e-15 && a[2].im.abs() < 1e-15);
    }

    #[test]
    fn bump_dipole_monopole_matches_radial_oracle() {
        let ctx = WaveContext::new(1.0, 1.0).unwrap();
        let src = dipole_ball_source([0.0, 0.0, 1.0], 0.5, DipoleProfile::Bump, &ctx).unwrap();
        let rule = src.default_rule(&ctx).unwrap();
        let a = coeff_alpha(&src, &ctx, &rule, 0, 0).unwrap();
        // ∫ j_0(r) ψ(r/ρ) dy / √(4π) by composite Simpson with 20000 panels
        let n = 20000;
        let h = 0.5 / n as f64;
        let f = |r: f64| {
            let t: f64 = r / 0.5;
            let b = if t < 1.0 { (1.0 / (t * t - 1.0)).exp() } else { 0.0 };
            let j0 = if r == 0.0 { 1.0 } else { r.sin() / r };
            j0 * b * r * r
        };
        let mut s = f(0.0) + f(0.5);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let oracle = 4.0 * PI * s * h / 3.0 / (4.0 * PI).sqrt();
        assert!((a[2].re - oracle).abs() < 1e-11 * oracle, "{} vs {oracle}", a[2].re);
    }

    #[test]
    fn zero_source_table_is_zero() {
        let ctx = WaveContext::new(2.0, 1.0).unwrap().with_degree(6);
        let src = SourceSpec::zero(&ctx);
        let rule = build_ball_rule(1.0, 10, 10, 20).unwrap();
        let t = coeff_table(&src, &ctx, &rule).unwrap();
        assert!(t.beta.iter().all(|v| cnorm(*v) == 0.0));
        assert_eq!(t.source_scale, 0.0);
        assert_eq!(t.beta_residual(), 0.0);
        assert!(t.pairing.is_none());
    }

    #[test]
    fn wrong_class_is_rejected() {
        let ctx = WaveContext::new(1.0, 1.0).unwrap();
        let src = dipole_ball_source([0.0, 0.0, 1.0], 1.0, DipoleProfile::Sharp, &ctx).unwrap();
        let rule = build_ball_rule(1.0, 8, 8, 16).unwrap();
        assert!(matches!(coeff_eta(&src, &ctx, &rule, 1, 0), Err(Error::InsufficientRegularity(_))));
        assert!(matches!(coeff_zeta(&src, &ctx, &rule, 1, 0), Err(Error::InsufficientRegularity(_))));
        assert!(coeff_alpha(&src, &ctx, &rule, ctx.degree + 1, 0).is_err());
        assert!(coeff_alpha(&src, &ctx, &rule, 2, 3).is_err());
    }

    #[test]
    fn csv_layout() {
        let t = MultipoleCoeffs::zeros(2, 1.0);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 9);
        assert!(lines[0].starts_with("n,m,pairing,Re_alpha1,Im_alpha1"));
        assert_eq!(lines[0].split(',').count(), 3 + 18);
        assert!(lines[1].starts_with("0,0,none,0.0000000000000000e0"));
        assert!(lines[2].starts_with("1,-1,"));
    }
}
