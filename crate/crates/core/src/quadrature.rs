//! Product Gauss–Legendre rules on balls and spheres, and a deterministic
//! integrator over them.
//!
//! Nodes are evaluated in parallel, but the reduction never depends on the
//! thread count: nodes are split into fixed chunks of [`CHUNK`] entries, each
//! chunk is summed with Neumaier compensation in node order, and the chunk
//! partials are combined (again compensated) in chunk order.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::vector::Vec3;

pub const CHUNK: usize = 256;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-16 * z.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, z);
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

fn legendre_and_derivative(n: usize, z: f64) -> (f64, f64) {
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

/// Anything [`integrate`] can run over.
pub trait Rule {
    fn nodes(&self) -> &[Vec3];
    fn weights(&self) -> &[f64];
}

/// Product rule on the ball `|y| ≤ radius`. Nodes are ordered radius-major,
/// then polar, then azimuth.
#[derive(Debug, Clone)]
pub struct BallRule {
    pub radius: f64,
    pub n_r: usize,
    pub n_polar: usize,
    pub n_azim: usize,
    nodes: Vec<Vec3>,
    weights: Vec<f64>,
}

/// Product rule on the sphere `|y| = radius`.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub radius: f64,
    pub n_polar: usize,
    pub n_azim: usize,
    nodes: Vec<Vec3>,
    weights: Vec<f64>,
    normals: Vec<Vec3>,
}

impl Rule for BallRule {
    fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }
    fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Rule for SphereRule {
    fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }
    fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl SphereRule {
    /// Outward unit normals, aligned with [`Rule::nodes`].
    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }
}

impl BallRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn unit_sphere_grid(n_polar: usize, n_azim: usize) -> Vec<(Vec3, f64)> {
    let (t, wt) = gauss_legendre(n_polar);
    let dphi = 2.0 * PI / n_azim as f64;
    let mut out = Vec::with_capacity(n_polar * n_azim);
    for (ti, wti) in t.iter().zip(&wt) {
        let s = (1.0 - ti * ti).max(0.0).sqrt();
        for k in 0..n_azim {
            let (sp, cp) = (k as f64 * dphi).sin_cos();
            out.push(([s * cp, s * sp, *ti], wti * dphi));
        }
    }
    out
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

fn check_count(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
    }
    Ok(())
}

/// Gauss–Legendre in `r` (with the `r²` Jacobian folded into the weights),
/// Gauss–Legendre in `cos θ`, trapezoid in `φ`.
pub fn build_ball_rule(radius: f64, n_r: usize, n_polar: usize, n_azim: usize) -> Result<BallRule> {
    check_positive("ball radius", radius)?;
    check_count("n_r", n_r)?;
    check_count("n_polar", n_polar)?;
    check_count("n_azim", n_azim)?;
    let (x, wx) = gauss_legendre(n_r);
    let grid = unit_sphere_grid(n_polar, n_azim);
    let mut nodes = Vec::with_capacity(n_r * grid.len());
    let mut weights = Vec::with_capacity(n_r * grid.len());
    for (xi, wi) in x.iter().zip(&wx) {
        let r = 0.5 * radius * (xi + 1.0);
        let wr = 0.5 * radius * wi * r * r;
        for (dir, wd) in &grid {
            nodes.push([r * dir[0], r * dir[1], r * dir[2]]);
            weights.push(wr * wd);
        }
    }
    Ok(BallRule { radius, n_r, n_polar, n_azim, nodes, weights })
}

pub fn build_sphere_rule(radius: f64, n_polar: usize, n_azim: usize) -> Result<SphereRule> {
    check_positive("sphere radius", radius)?;
    check_count("n_polar", n_polar)?;
    check_count("n_azim", n_azim)?;
    let grid = unit_sphere_grid(n_polar, n_azim);
    let r2 = radius * radius;
    let nodes = grid.iter().map(|(d, _)| [radius * d[0], radius * d[1], radius * d[2]]).collect();
    let normals = grid.iter().map(|(d, _)| *d).collect();
    let weights = grid.iter().map(|(_, w)| w * r2).collect();
    Ok(SphereRule { radius, n_polar, n_azim, nodes, weights, normals })
}

/// Default `(n_r, n_polar, n_azim)` for wavenumber `kappa`, radius `radius`
/// and truncation degree `degree`.
pub fn default_ball_counts(kappa: f64, radius: f64, degree: usize) -> (usize, usize, usize) {
    let n_r = (2.0 * kappa * radius).ceil() as usize + 16;
    (n_r, degree + 8, 2 * degree + 8)
}

/// Neumaier-compensated running sums over a fixed number of real lanes.
#[derive(Debug, Clone)]
struct Compensated {
    sum: Vec<f64>,
    comp: Vec<f64>,
}

impl Compensated {
    fn new(lanes: usize) -> Self {
        Self { sum: vec![0.0; lanes], comp: vec![0.0; lanes] }
    }

    #[inline]
    fn add(&mut self, lane: usize, v: f64) {
        let s = self.sum[lane];
        let t = s + v;
        if s.abs() >= v.abs() {
            self.comp[lane] += (s - t) + v;
        } else {
            self.comp[lane] += (v - t) + s;
        }
        self.sum[lane] = t;
    }

    fn finish(&self) -> Vec<f64> {
        self.sum.iter().zip(&self.comp).map(|(s, c)| s + c).collect()
    }
}

/// `Σ_i w_i f(node_i)` for a `width`-component complex integrand.
///
/// `f(i, y, out)` writes the integrand at node `i` (position `y`) into `out`,
/// which arrives zeroed. The result is independent of the rayon pool size.
pub fn integrate<R, F>(rule: &R, width: usize, f: F) -> Result<Vec<Complex64>>
where
    R: Rule + ?Sized,
    F: Fn(usize, Vec3, &mut [Complex64]) + Sync,
{
    let nodes = rule.nodes();
    let weights = rule.weights();
    let partials: Vec<Result<Vec<f64>>> = nodes
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut acc = Compensated::new(2 * width);
            let mut out = vec![Complex64::new(0.0, 0.0); width];
            for (k, y) in chunk.iter().enumerate() {
                let i = c * CHUNK + k;
                out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
                f(i, *y, &mut out);
                let w = weights[i];
                for (lane, v) in out.iter().enumerate() {
                    if !(v.re.is_finite() && v.im.is_finite()) {
                        return Err(Error::NonFinite { index: i });
                    }
                    acc.add(2 * lane, w * v.re);
                    acc.add(2 * lane + 1, w * v.im);
                }
            }
            Ok(acc.finish())
        })
        .collect();

    let mut total = Compensated::new(2 * width);
    for part in partials {
        let part = part?;
        for (lane, v) in part.into_iter().enumerate() {
            total.add(lane, v);
        }
    }
    let flat = total.finish();
    Ok(flat.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect())
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<R, F>(rule: &R, f: F) -> Result<Complex64>
where
    R: Rule + ?Sized,
    F: Fn(Vec3) -> Complex64 + Sync,
{
    let v = integrate(rule, 1, |_, y, out| out[0] = f(y))?;
    Ok(v[0])
}

/// Fixed-order Gauss–Legendre approximation of `∫_a^b f`.
pub fn integrate_interval<F: Fn(f64) -> f64>(a: f64, b: f64, n: usize, f: F) -> f64 {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let mut acc = Compensated::new(1);
    for (xi, wi) in x.iter().zip(&w) {
        acc.add(0, wi * f(mid + half * xi));
    }
    half * acc.finish()[0]
}
