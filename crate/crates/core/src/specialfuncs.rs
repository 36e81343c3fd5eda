//! Spherical Bessel, Neumann and Hankel functions, associated Legendre
//! functions and spherical harmonics.
//!
//! Harmonic convention used throughout the crate:
//!
//! ```text
//! Y_n^m(θ, φ) = N_n^m P_n^{|m|}(cos θ) e^{imφ},
//! N_n^m      = sqrt((2n+1)(n-|m|)! / (4π (n+|m|)!)),
//! P_n^m(t)   = (1 - t²)^{m/2} d^m/dt^m P_n(t)
//! ```
//!
//! There is no Condon–Shortley phase, so `conj(Y_n^m(θ, φ)) = Y_n^m(θ, -φ)`
//! and `Y_n^{-m} = conj(Y_n^m)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::vector::Vec3;

/// Degree/order pair of a spherical harmonic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HarmonicIndex {
    pub n: usize,
    pub m: i64,
}

impl HarmonicIndex {
    pub fn new(n: usize, m: i64) -> Result<Self> {
        if m.unsigned_abs() as usize > n {
            return Err(Error::InvalidArgument(format!(
                "harmonic order m = {m} exceeds degree n = {n}"
            )));
        }
        Ok(Self { n, m })
    }

    /// Position in the packed `(n, m)` ordering `n² + n + m`.
    #[inline]
    pub fn linear(self) -> usize {
        ((self.n * self.n + self.n) as i64 + self.m) as usize
    }

    pub fn from_linear(k: usize) -> Self {
        let n = (k as f64).sqrt() as usize;
        // guard against sqrt rounding
        let n = if (n + 1) * (n + 1) <= k { n + 1 } else { n };
        let m = k as i64 - (n * n + n) as i64;
        Self { n, m }
    }

    /// Number of harmonics with degree at most `nmax`.
    #[inline]
    pub fn count(nmax: usize) -> usize {
        (nmax + 1) * (nmax + 1)
    }

    pub fn all(nmax: usize) -> impl Iterator<Item = HarmonicIndex> {
        (0..Self::count(nmax)).map(Self::from_linear)
    }
}

// ---------------------------------------------------------------------------
// Spherical Bessel family

fn j0_closed(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

fn j1_closed(x: f64) -> f64 {
    if x.abs() < 0.25 {
        let x2 = x * x;
        x / 3.0 * (1.0 - x2 / 10.0 * (1.0 - x2 / 28.0 * (1.0 - x2 / 54.0 * (1.0 - x2 / 88.0))))
    } else {
        (x.sin() / x - x.cos()) / x
    }
}

/// `j_0, ..., j_nmax` at `x ≥ 0` by Miller's downward recurrence.
///
/// The unnormalised sequence is scaled against whichever of the closed forms
/// `j_0 = sin x / x` or `j_1` is larger in magnitude, so the result stays
/// accurate near the zeros of `j_0` (e.g. `x = π`).
pub fn sph_bessel_j_array(nmax: usize, x: f64) -> Vec<f64> {
    debug_assert!(x >= 0.0, "sph_bessel_j_array: x must be non-negative");
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let x = x.abs();
    let top = (nmax as f64).max(x);
    let start = top.ceil() as usize + 24 + (40.0 * (top + 1.0)).sqrt().ceil() as usize;

    let mut upper = 0.0_f64;
    let mut current = 1e-30_f64;
    let mut j0_raw = 0.0;
    let mut j1_raw = 0.0;
    for k in (0..=start).rev() {
        // current holds j_k, upper holds j_{k+1}
        if k <= nmax {
            out[k] = current;
        }
        if k == 1 {
            j1_raw = current;
        }
        if k == 0 {
            j0_raw = current;
            break;
        }
        let lower = (2 * k + 1) as f64 / x * current - upper;
        upper = current;
        current = lower;
        if current.abs() > 1e200 {
            let s = 1e-200;
            current *= s;
            upper *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
            j1_raw *= s;
        }
    }
    let j0 = j0_closed(x);
    let j1 = j1_closed(x);
    let norm = if j0.abs() >= j1.abs() { j0 / j0_raw } else { j1 / j1_raw };
    for v in out.iter_mut() {
        *v *= norm;
    }
    out
}

/// Spherical Bessel function of the first kind `j_n(x)`, `x ≥ 0`.
pub fn sph_bessel_j(n: usize, x: f64) -> f64 {
    sph_bessel_j_array(n, x)[n]
}

/// Values and first derivatives of `j_0 .. j_nmax` at `x`.
pub fn sph_bessel_j_with_derivative(nmax: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let all = sph_bessel_j_array(nmax + 1, x);
    let mut d = vec![0.0; nmax + 1];
    d[0] = -all[1];
    for n in 1..=nmax {
        d[n] = (n as f64 * all[n - 1] - (n + 1) as f64 * all[n + 1]) / (2 * n + 1) as f64;
    }
    let mut v = all;
    v.truncate(nmax + 1);
    (v, d)
}

/// `y_0 .. y_nmax` at `x > 0` by upward recurrence.
pub fn sph_neumann_array(nmax: usize, x: f64) -> Result<Vec<f64>> {
    if x <= 0.0 || !x.is_finite() {
        return Err(Error::Domain(format!("spherical Neumann function needs x > 0, got {x}")));
    }
    let mut out = vec![0.0; nmax + 1];
    let (s, c) = x.sin_cos();
    out[0] = -c / x;
    if nmax >= 1 {
        out[1] = -c / (x * x) - s / x;
    }
    for n in 1..nmax {
        out[n + 1] = (2 * n + 1) as f64 / x * out[n] - out[n - 1];
    }
    Ok(out)
}

/// Spherical Neumann function `y_n(x)`, `x > 0`.
pub fn sph_neumann(n: usize, x: f64) -> Result<f64> {
    Ok(sph_neumann_array(n, x)?[n])
}

/// `h_0^{(1)} .. h_nmax^{(1)}` at `x > 0`.
pub fn sph_hankel1_array(nmax: usize, x: f64) -> Result<Vec<Complex64>> {
    let y = sph_neumann_array(nmax, x)?;
    let j = sph_bessel_j_array(nmax, x);
    Ok(j.into_iter().zip(y).map(|(a, b)| Complex64::new(a, b)).collect())
}

/// Spherical Hankel function of the first kind `h_n^{(1)}(x) = j_n(x) + i y_n(x)`.
pub fn sph_hankel1(n: usize, x: f64) -> Result<Complex64> {
    Ok(sph_hankel1_array(n, x)?[n])
}

// ---------------------------------------------------------------------------
// Legendre functions

/// Associated Legendre function `P_n^m(t)` without the Condon–Shortley phase.
///
/// Upward recurrence in the degree for fixed `m`, seeded by
/// `P_m^m(t) = (2m-1)!! (1-t²)^{m/2}`. Returns zero when `m > n`.
pub fn assoc_legendre(n: usize, m_abs: usize, t: f64) -> f64 {
    debug_assert!(t.abs() <= 1.0 + 1e-14, "assoc_legendre: |t| > 1");
    if m_abs > n {
        return 0.0;
    }
    let s = (1.0 - t * t).max(0.0).sqrt();
    let mut pmm = 1.0;
    for k in 1..=m_abs {
        pmm *= (2 * k - 1) as f64 * s;
    }
    if n == m_abs {
        return pmm;
    }
    let mut prev = pmm;
    let mut cur = t * (2 * m_abs + 1) as f64 * pmm;
    for l in (m_abs + 2)..=n {
        let next = ((2 * l - 1) as f64 * t * cur - (l + m_abs - 1) as f64 * prev) / (l - m_abs) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

/// `N_n^m` for moderate degrees. The harmonic tables below never form it
/// explicitly; this is kept for direct evaluation and tests.
pub fn harmonic_normalization(n: usize, m_abs: usize) -> f64 {
    // (n-m)!/(n+m)! as a running product to avoid overflow
    let mut ratio = 1.0;
    for k in (n - m_abs + 1)..=(n + m_abs) {
        ratio /= k as f64;
    }
    ((2 * n + 1) as f64 * ratio / (4.0 * PI)).sqrt()
}

#[inline]
fn tri(n: usize, m: usize) -> usize {
    n * (n + 1) / 2 + m
}

/// Orthonormalised associated Legendre values `N_n^m P_n^m(cos θ)` for
/// `0 ≤ m ≤ n ≤ lmax`, together with their θ-derivatives and the quotients
/// `N_n^m P_n^m / sin θ` (m ≥ 1), which stay finite on the polar axis.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    lmax: usize,
    p: Vec<f64>,
    p_over_s: Vec<f64>,
    dp: Vec<f64>,
}

impl LegendreTable {
    pub fn new(lmax: usize, cos_theta: f64, sin_theta: f64) -> Self {
        let len = tri(lmax, lmax) + 1;
        let t = cos_theta;
        let s = sin_theta;
        let mut p = vec![0.0; len];
        let mut q = vec![0.0; len];

        // m = 0 column
        p[0] = 1.0 / (4.0 * PI).sqrt();
        if lmax >= 1 {
            p[tri(1, 0)] = 3f64.sqrt() * t * p[0];
        }
        for n in 2..=lmax {
            let nf = n as f64;
            let a = ((4.0 * nf * nf - 1.0) / (nf * nf)).sqrt();
            let b = (((nf - 1.0) * (nf - 1.0)) / (4.0 * (nf - 1.0) * (nf - 1.0) - 1.0)).sqrt();
            p[tri(n, 0)] = a * (t * p[tri(n - 1, 0)] - b * p[tri(n - 2, 0)]);
        }

        // m ≥ 1 columns, recurred on P/s so the pole is harmless
        let mut diag = 1.0 / (4.0 * PI).sqrt(); // c_m s^{m-1} with s factored once
        for m in 1..=lmax {
            let mf = m as f64;
            let factor = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt();
            diag = if m == 1 { factor * diag } else { factor * s * diag };
            q[tri(m, m)] = diag;
            if m < lmax {
                q[tri(m + 1, m)] = (2.0 * mf + 3.0).sqrt() * t * diag;
            }
            for n in (m + 2)..=lmax {
                let nf = n as f64;
                let a = ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt();
                let b = (((nf - 1.0) * (nf - 1.0) - mf * mf) / (4.0 * (nf - 1.0) * (nf - 1.0) - 1.0)).sqrt();
                q[tri(n, m)] = a * (t * q[tri(n - 1, m)] - b * q[tri(n - 2, m)]);
            }
            for n in m..=lmax {
                p[tri(n, m)] = s * q[tri(n, m)];
            }
        }

        let mut dp = vec![0.0; len];
        for n in 0..=lmax {
            let nf = n as f64;
            if n >= 1 {
                dp[tri(n, 0)] = -(nf * (nf + 1.0)).sqrt() * p[tri(n, 1)];
            }
            for m in 1..=n {
                let mf = m as f64;
                let lower = ((nf + mf) * (nf - mf + 1.0)).sqrt() * p[tri(n, m - 1)];
                let upper = if m < n {
                    ((nf - mf) * (nf + mf + 1.0)).sqrt() * p[tri(n, m + 1)]
                } else {
                    0.0
                };
                dp[tri(n, m)] = 0.5 * (lower - upper);
            }
        }

        Self { lmax, p, p_over_s: q, dp }
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    /// `N_n^m P_n^m(cos θ)`, `m ≥ 0`.
    #[inline]
    pub fn value(&self, n: usize, m: usize) -> f64 {
        self.p[tri(n, m)]
    }

    /// θ-derivative of [`Self::value`].
    #[inline]
    pub fn dtheta(&self, n: usize, m: usize) -> f64 {
        self.dp[tri(n, m)]
    }

    /// `N_n^m P_n^m(cos θ) / sin θ` for `m ≥ 1`; zero for `m = 0`.
    #[inline]
    pub fn over_sin(&self, n: usize, m: usize) -> f64 {
        if m == 0 {
            0.0
        } else {
            self.p_over_s[tri(n, m)]
        }
    }
}

/// Polar angles of a direction in the form the tables consume.
#[derive(Debug, Clone, Copy)]
pub struct Direction {
    pub cos_theta: f64,
    pub sin_theta: f64,
    /// `e^{iφ}`; `1` on the polar axis.
    pub phase: Complex64,
}

impl Direction {
    /// Direction of a non-zero vector (the origin maps to the north pole).
    pub fn of(v: Vec3) -> Self {
        let rho = (v[0] * v[0] + v[1] * v[1]).sqrt();
        let r = (rho * rho + v[2] * v[2]).sqrt();
        if r == 0.0 {
            return Self { cos_theta: 1.0, sin_theta: 0.0, phase: Complex64::new(1.0, 0.0) };
        }
        let phase = if rho > 0.0 {
            Complex64::new(v[0] / rho, v[1] / rho)
        } else {
            Complex64::new(1.0, 0.0)
        };
        Self { cos_theta: v[2] / r, sin_theta: rho / r, phase }
    }

    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { cos_theta: c, sin_theta: s.abs(), phase: Complex64::from_polar(1.0, phi) }
    }
}

/// Spherical harmonic `Y_n^m(θ, φ)` in the crate convention.
pub fn sph_harmonic(idx: HarmonicIndex, theta: f64, phi: f64) -> Complex64 {
    let ma = idx.m.unsigned_abs() as usize;
    let (s, c) = theta.sin_cos();
    let table = LegendreTable::new(idx.n, c, s.abs());
    let value = table.value(idx.n, ma);
    Complex64::from_polar(value, idx.m as f64 * phi)
}

/// All `Y_n^m` with `n ≤ lmax` at one direction, packed by
/// [`HarmonicIndex::linear`].
pub fn sph_harmonics_all(lmax: usize, dir: Direction) -> Vec<Complex64> {
    let table = LegendreTable::new(lmax, dir.cos_theta, dir.sin_theta);
    let phases = phase_powers(lmax, dir.phase);
    let mut out = vec![Complex64::new(0.0, 0.0); HarmonicIndex::count(lmax)];
    for n in 0..=lmax {
        let base = n * n + n;
        out[base] = table.value(n, 0).into();
        for m in 1..=n {
            let y = phases[m] * table.value(n, m);
            out[base + m] = y;
            out[base - m] = y.conj();
        }
    }
    out
}

/// `e^{imφ}` for `m = 0..=lmax`.
pub(crate) fn phase_powers(lmax: usize, phase: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(lmax + 1);
    let mut cur = Complex64::new(1.0, 0.0);
    for _ in 0..=lmax {
        out.push(cur);
        cur *= phase;
    }
    out
}
