#![allow(clippy::needless_range_loop)]

mod common;

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;

use nonrad_core::classify::{cube_points, nullspace_residual_n1, nullspace_residual_n2, nullspace_residual_n3};
use nonrad_core::fields::{farfield_direct, fibonacci_directions, DirectField, div_from_jacobian, fourier_source_transform};
use nonrad_core::greens::{dyadic_green, farfield_projector, grad_scalar_green, scalar_green, WaveContext};
use nonrad_core::multipole::{coeff_table, moments, Family, MultipoleCoeffs};
use nonrad_core::quadrature::{build_ball_rule, integrate, integrate_interval, BallRule, Rule};
use nonrad_core::sources::{RegularityClass, SourceSpec};
use nonrad_core::specialfuncs::*;
use nonrad_core::vector::{cnorm, csub, norm, Vec3};

fn unit_vec() -> impl Strategy<Value = Vec3> {
    (-1.0f64..1.0, 0.0..2.0 * PI).prop_map(|(z, phi)| {
        let s = (1.0 - z * z).sqrt();
        [s * phi.cos(), s * phi.sin(), z]
    })
}

fn scaled(d: Vec3, r: f64) -> Vec3 {
    [r * d[0], r * d[1], r * d[2]]
}

// ---------------------------------------------------------------- special functions

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn wronskian(n in 1usize..=20, x in 0.1f64..50.0) {
        let j = sph_bessel_j_array(n, x);
        let y = sph_neumann_array(n, x).unwrap();
        let w = j[n] * y[n - 1] - j[n - 1] * y[n];
        let expect = 1.0 / (x * x);
        prop_assert!((w - expect).abs() <= 1e-10 * expect, "n={} x={} w={} expect={}", n, x, w, expect);
    }

    #[test]
    fn bessel_ode_residual(n in 0usize..=20, x in 0.5f64..50.0) {
        let h = 1e-3;
        let f = |t: f64| sph_bessel_j(n, t);
        let (v, d) = sph_bessel_j_with_derivative(n, x);
        let f2 = (f(x + h) - 2.0 * v[n] + f(x - h)) / (h * h);
        let nn = (n * (n + 1)) as f64;
        let res = f2 + 2.0 / x * d[n] + (1.0 - nn / (x * x)) * v[n];
        prop_assert!(res.abs() <= 1e-6 * v[n].abs().max(1.0));
    }

    #[test]
    fn harmonic_conjugation(n in 0usize..=20, mm in 0usize..=40, theta in 0.0f64..PI, phi in 0.0f64..2.0 * PI) {
        let m = (mm % (2 * n + 1)) as i64 - n as i64;
        let idx = HarmonicIndex::new(n, m).unwrap();
        let a = sph_harmonic(idx, theta, phi).conj();
        let b = sph_harmonic(idx, theta, -phi);
        prop_assert!((a - b).norm() <= 1e-13);
        // no Condon–Shortley phase: Y_n^{−m} = conj(Y_n^m)
        let neg = sph_harmonic(HarmonicIndex::new(n, -m).unwrap(), theta, phi);
        prop_assert!((neg - a).norm() <= 1e-13);
    }

    #[test]
    fn unsold_sum(n in 0usize..=30, d in unit_vec()) {
        let all = sph_harmonics_all(n, Direction::of(d));
        let s: f64 = (-(n as i64)..=n as i64)
            .map(|m| all[HarmonicIndex::new(n, m).unwrap().linear()].norm_sqr())
            .sum();
        prop_assert!((s - (2 * n + 1) as f64 / (4.0 * PI)).abs() <= 1e-12 * (2 * n + 1) as f64);
    }
}

// ---------------------------------------------------------------- quadrature

struct Permuted {
    nodes: Vec<Vec3>,
    weights: Vec<f64>,
}

impl Rule for Permuted {
    fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }
    fn weights(&self) -> &[f64] {
        &self.weights
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn node_order_does_not_matter(seed in any::<u64>(), k in unit_vec()) {
        let rule = build_ball_rule(1.0, 10, 10, 20).unwrap();
        let mut order: Vec<usize> = (0..rule.len()).collect();
        order.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
        let perm = Permuted {
            nodes: order.iter().map(|&i| rule.nodes()[i]).collect(),
            weights: order.iter().map(|&i| rule.weights()[i]).collect(),
        };
        let f = |y: Vec3, out: &mut [Complex64]| {
            out[0] = Complex64::from_polar(1.0, 2.5 * (k[0] * y[0] + k[1] * y[1] + k[2] * y[2]));
            out[1] = Complex64::new(y[0] * y[0] + y[1] * y[2], 0.0);
        };
        let a = integrate(&rule, 2, |_, y, out| f(y, out)).unwrap();
        let b = integrate(&perm, 2, |_, y, out| f(y, out)).unwrap();
        for l in 0..2 {
            prop_assert!((a[l] - b[l]).norm() <= 1e-14 * a[l].norm().max(1.0));
        }
    }

    #[test]
    fn degree_exactness(n in 0usize..=10, mm in 0usize..=20, kappa in 0.5f64..4.0) {
        let m = (mm % (2 * n + 1)) as i64 - n as i64;
        let idx = HarmonicIndex::new(n, m).unwrap();
        let rule = build_ball_rule(1.0, 32, 24, 48).unwrap();
        let v = integrate(&rule, 1, |_, y, out| {
            let r = norm(y);
            let yv = sph_harmonics_all(n, Direction::of(y))[idx.linear()];
            out[0] = sph_bessel_j(n, kappa * r) * yv * yv.conj();
        }).unwrap()[0];
        // ∫|Y|² = 1 on the sphere leaves the radial integral
        let oracle = integrate_interval(0.0, 1.0, 80, |r| sph_bessel_j(n, kappa * r) * r * r);
        prop_assert!((v.re - oracle).abs() <= 1e-10 * oracle.abs().max(1e-3));
        prop_assert!(v.im.abs() <= 1e-12);
    }
}

// ---------------------------------------------------------------- Green's functions

fn sixth_order_laplacian<F: Fn(Vec3) -> Complex64>(f: F, x: Vec3, h: f64) -> Complex64 {
    const C: [f64; 7] = [1.0 / 90.0, -3.0 / 20.0, 1.5, -49.0 / 18.0, 1.5, -3.0 / 20.0, 1.0 / 90.0];
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..3 {
        for (s, c) in C.iter().enumerate() {
            let mut p = x;
            p[k] += (s as f64 - 3.0) * h;
            acc += *c * f(p);
        }
    }
    acc / (h * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projector_laws(d in unit_vec()) {
        let p = farfield_projector(d).unwrap();
        let mut tr = 0.0;
        for i in 0..3 {
            tr += p[i][i];
            let px: f64 = (0..3).map(|k| p[i][k] * d[k]).sum();
            prop_assert!(px.abs() <= 1e-12);
            for j in 0..3 {
                prop_assert!((p[i][j] - p[j][i]).abs() <= 1e-12);
                let sq: f64 = (0..3).map(|k| p[i][k] * p[k][j]).sum();
                prop_assert!((sq - p[i][j]).abs() <= 1e-12);
            }
        }
        // idempotent and symmetric, so rank = trace
        prop_assert!((tr - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn helmholtz_residual(d in unit_vec(), r in 1.0f64..3.0, y in unit_vec(), kappa in 0.5f64..3.0) {
        let ctx = WaveContext::new(kappa, 1.0).unwrap();
        let yv = scaled(y, 0.4);
        let x = [yv[0] + r * d[0], yv[1] + r * d[1], yv[2] + r * d[2]];
        let g = |p: Vec3| scalar_green(p, yv, &ctx).unwrap();
        let res = sixth_order_laplacian(g, x, 0.02) + kappa * kappa * g(x);
        prop_assert!(res.norm() <= 1e-4 * g(x).norm());
    }

    #[test]
    fn dyadic_matches_differences_of_gradient(d in unit_vec(), r in 0.5f64..3.0, kappa in 0.5f64..3.0) {
        let ctx = WaveContext::new(kappa, 1.0).unwrap();
        let y = [0.1, -0.2, 0.3];
        let x = [y[0] + r * d[0], y[1] + r * d[1], y[2] + r * d[2]];
        let m = dyadic_green(x, y, &ctx).unwrap();
        let h = 1e-4;
        let g0 = scalar_green(x, y, &ctx).unwrap();
        let mut fd = [[Complex64::new(0.0, 0.0); 3]; 3];
        for l in 0..3 {
            let mut p = x;
            let mut q = x;
            p[l] += h;
            q[l] -= h;
            let gp = grad_scalar_green(p, y, &ctx).unwrap();
            let gq = grad_scalar_green(q, y, &ctx).unwrap();
            for s in 0..3 {
                fd[l][s] = (gp[s] - gq[s]) / (2.0 * h * kappa * kappa);
            }
            fd[l][l] += g0;
        }
        let big = m.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
        for l in 0..3 {
            for s in 0..3 {
                prop_assert!((m[l][s] - fd[l][s]).norm() <= 1e-5 * big);
                prop_assert!((m[l][s] - m[s][l]).norm() <= 1e-15 * big);
            }
        }
        let swapped = dyadic_green(y, x, &ctx).unwrap();
        prop_assert!(swapped.iter().flatten().zip(m.iter().flatten()).all(|(a, b)| (a - b).norm() <= 1e-14 * big));
    }
}

// ---------------------------------------------------------------- sources

fn fd_div(src: &SourceSpec, y: Vec3, h: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..3 {
        let at = |s: f64| {
            let mut p = y;
            p[k] += s * h;
            src.eval(p)[k]
        };
        acc += (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * h);
    }
    acc
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sources_vanish_outside_support(d in unit_vec(), t in 1.0f64..2.0) {
        for (src, _) in common::all_smooth() {
            let y = scaled(d, src.support_radius * t + 1e-12);
            prop_assert_eq!(src.eval(y), [Complex64::new(0.0, 0.0); 3], "{}", src.name);
        }
    }

    #[test]
    fn analytic_divergence_matches_differences(d in unit_vec(), t in 0.02f64..0.95) {
        for (src, ctx) in common::all_smooth() {
            if !src.has_div() {
                continue;
            }
            let y = scaled(d, src.support_radius * t);
            let div = src.eval_div(y);
            let fd = fd_div(&src, y, 1e-4 * src.support_radius);
            let scale = div.norm().max(ctx.kappa * cnorm(src.eval(y))).max(1e-12);
            prop_assert!((div - fd).norm() <= 1e-6 * scale, "{}: {} vs {}", src.name, div, fd);
        }
    }

    #[test]
    fn zero_trace_class_has_zero_normal_component(d in unit_vec()) {
        for (src, ctx) in [common::bessel_pair(), common::bessel_single()] {
            prop_assert_eq!(src.regularity, RegularityClass::HdivZeroTrace);
            let j = src.eval(scaled(d, ctx.radius * (1.0 - 1e-15)));
            let jn: Complex64 = (0..3).map(|l| j[l] * d[l]).sum();
            prop_assert!(jn.norm() <= 1e-10);
        }
    }

    #[test]
    fn farfield_is_transverse(d in unit_vec()) {
        for (src, ctx) in [common::dipole(), common::curl_bump()] {
            let rule = src.default_rule(&ctx).unwrap();
            let e = farfield_direct(&src, &ctx, &rule, d).unwrap();
            let along: Complex64 = (0..3).map(|l| e[l] * d[l]).sum();
            prop_assert!(along.norm() <= 1e-12 * cnorm(e));
        }
    }
}

// ---------------------------------------------------------------- multipole coefficients

#[test]
fn pairings_agree_for_a_source_admitting_all_three() {
    let (src, ctx) = common::dipole();
    let rule = src.default_rule(&ctx).unwrap();
    let res = moments(&src, &ctx, &rule, 6, &[Family::Alpha, Family::Gamma, Family::Zeta, Family::Eta]).unwrap();
    let scale = src.l2_norm(&rule).unwrap();
    for i in 0..res[0].len() {
        let b: Vec<_> = (1..4).map(|f| [0, 1, 2].map(|l| res[0][i][l] + res[f][i][l])).collect();
        assert!(cnorm(csub(b[0], b[1])) <= 1e-5 * scale, "γ vs ζ at {i}");
        assert!(cnorm(csub(b[1], b[2])) <= 1e-5 * scale, "ζ vs η at {i}");
    }
    // the dipole radiates, so the common β is far from zero
    assert!(MultipoleCoeffs::max_norm(&res[0], 6) > 1e-2 * scale);
}

#[test]
fn divergence_free_source_has_beta_equal_alpha() {
    let (src, ctx) = common::curl_bump();
    let rule = src.default_rule(&ctx).unwrap();
    let res = moments(&src, &ctx, &rule, 6, &[Family::Zeta, Family::Eta]).unwrap();
    assert!(res.iter().flatten().all(|v| cnorm(*v) == 0.0));
    let t = coeff_table(&src, &ctx, &rule).unwrap();
    assert!(t.pairing.is_none());
    assert_eq!(t.alpha, t.beta);
    assert!(t.beta_residual() > 1e-3);
}

#[test]
fn alpha_conjugation_symmetry_for_real_sources() {
    for (src, ctx) in [common::dipole(), common::curlcurl(), common::gradient(), common::bessel_single(), common::curl_bump()] {
        let rule = src.default_rule(&ctx).unwrap();
        let scale = src.l2_norm(&rule).unwrap();
        let a = &moments(&src, &ctx, &rule, 6, &[Family::Alpha]).unwrap()[0];
        for idx in HarmonicIndex::all(6) {
            let p = a[idx.linear()];
            let q = a[HarmonicIndex::new(idx.n, -idx.m).unwrap().linear()];
            let diff = cnorm([p[0] - q[0].conj(), p[1] - q[1].conj(), p[2] - q[2].conj()]);
            assert!(diff <= 1e-13 * scale, "{} ({}, {})", src.name, idx.n, idx.m);
        }
    }
}

fn doubled(rule: &BallRule) -> BallRule {
    build_ball_rule(rule.radius, 2 * rule.n_r, 2 * rule.n_polar, 2 * rule.n_azim).unwrap()
}

#[test]
fn coefficients_are_converged_under_refinement() {
    for (src, ctx) in common::all_smooth() {
        let rule = src.default_rule(&ctx).unwrap();
        let fine = doubled(&rule);
        let scale = src.l2_norm(&fine).unwrap();
        let mut fams = vec![Family::Alpha];
        // γ needs finite-difference Hessians; the other pairings cover the same β
        if let Some(p) = src.regularity.pairing() {
            if p != nonrad_core::sources::Pairing::Gamma {
                fams.push(p.into());
            }
        }
        let a = moments(&src, &ctx, &rule, 8, &fams).unwrap();
        let b = moments(&src, &ctx, &fine, 8, &fams).unwrap();
        for (fa, fb) in a.iter().zip(&b) {
            for (x, y) in fa.iter().zip(fb) {
                assert!(cnorm(csub(*x, *y)) <= 1e-9 * scale, "{}", src.name);
            }
        }
    }
}

// ---------------------------------------------------------------- fields

#[test]
fn exterior_field_is_divergence_free() {
    for (src, ctx) in common::all_smooth() {
        let rule = src.default_rule(&ctx).unwrap();
        let field = DirectField::new(&src, &ctx, &rule).unwrap();
        let pts: Vec<Vec3> = fibonacci_directions(8).into_iter().map(|d| scaled(d, 1.5 * ctx.radius)).collect();
        let e_max = pts.iter().map(|x| cnorm(field.field(*x).unwrap())).fold(0.0, f64::max);
        let e_scale = e_max.max(src.l2_norm(&rule).unwrap());
        for x in &pts {
            let jac = field.jacobian_fd(*x, 1e-3).unwrap();
            assert!(div_from_jacobian(&jac).norm() <= 1e-5 * e_scale, "{}", src.name);
            let (_, exact) = field.field_and_jacobian(*x).unwrap();
            assert!(div_from_jacobian(&exact).norm() <= 1e-9 * e_scale, "{}", src.name);
        }
    }
}

// ---------------------------------------------------------------- classification

fn verdicts(src: &SourceSpec, ctx: &WaveContext, rule: &BallRule, pts: &[Vec3]) -> Vec<bool> {
    let mut v = vec![nullspace_residual_n1(src, ctx, rule, pts).unwrap() <= 10.0 * ctx.tol];
    if let Ok(r) = nullspace_residual_n2(src, ctx, rule, pts) {
        v.push(r <= ctx.tol);
    }
    if let Ok(r) = nullspace_residual_n3(src, ctx, rule, pts) {
        v.push(r <= ctx.tol);
    }
    v
}

#[test]
fn null_space_verdicts_do_not_depend_on_the_point_set() {
    for (src, ctx) in common::all_smooth() {
        let rule = src.default_rule(&ctx).unwrap();
        let a = verdicts(&src, &ctx, &rule, &cube_points(1.5 * ctx.radius));
        let far: Vec<Vec3> = fibonacci_directions(20).into_iter().map(|d| scaled(d, 2.2 * ctx.radius)).collect();
        let b = verdicts(&src, &ctx, &rule, &far);
        assert_eq!(a, b, "{}", src.name);
        assert!(a.iter().all(|v| *v == a[0]), "{}: mixed verdicts {a:?}", src.name);
    }
}

// Residuals sitting at rounding level may wobble by more than 2×; that floor
// is excluded.
const ROUNDING_FLOOR: f64 = 1e-14;

#[test]
fn nonradiating_residuals_do_not_grow_under_refinement() {
    let pts = cube_points(1.5);
    for (src, ctx) in [common::bessel_pair(), common::bessel_single(), common::curlcurl(), common::gradient()] {
        let coarse = src.default_rule(&ctx).unwrap();
        let fine = doubled(&coarse);
        let residuals = |rule: &BallRule| -> Vec<f64> {
            let scale = src.l2_norm(rule).unwrap();
            let mut r = vec![nullspace_residual_n1(&src, &ctx, rule, &pts).unwrap()];
            r.extend(nullspace_residual_n2(&src, &ctx, rule, &pts).ok());
            r.extend(nullspace_residual_n3(&src, &ctx, rule, &pts).ok());
            let dirs = fibonacci_directions(12);
            r.push(dirs.iter().map(|d| cnorm(farfield_direct(&src, &ctx, rule, *d).unwrap())).fold(0.0, f64::max) / scale);
            if src.has_jcal() {
                let xi = |d: &Vec3| d.map(|c| ctx.kappa * c);
                r.push(
                    dirs.iter()
                        .map(|d| cnorm(fourier_source_transform(&src, &ctx, rule, xi(d)).unwrap()))
                        .fold(0.0, f64::max)
                        / scale,
                );
            }
            r
        };
        let a = residuals(&coarse);
        let b = residuals(&fine);
        for (x, y) in a.iter().zip(&b) {
            assert!(*y <= 2.0 * x + ROUNDING_FLOOR, "{}: {x:e} -> {y:e}", src.name);
        }
    }
}
