#![allow(dead_code)]

use std::f64::consts::PI;

use nonrad_core::greens::WaveContext;
use nonrad_core::sources::*;

pub fn unit_ctx() -> WaveContext {
    WaveContext::new(1.0, 1.0).unwrap()
}

pub fn pi_ctx() -> WaveContext {
    WaveContext::new(PI, 1.0).unwrap()
}

pub fn bessel_pair() -> (SourceSpec, WaveContext) {
    let ctx = pi_ctx();
    (bessel_pair_source(&ctx, 3, 4).unwrap(), ctx)
}

pub fn bessel_single() -> (SourceSpec, WaveContext) {
    let ctx = pi_ctx();
    (bessel_single_source(&ctx, 3).unwrap(), ctx)
}

pub fn curlcurl() -> (SourceSpec, WaveContext) {
    let ctx = unit_ctx();
    (curlcurl_source([0.0, 0.0, 1.0], 0.5, &ctx).unwrap(), ctx)
}

pub fn gradient() -> (SourceSpec, WaveContext) {
    let ctx = unit_ctx();
    (gradient_source(1.0, [0.5, -0.3, 0.8], 0.5, &ctx).unwrap(), ctx)
}

pub fn dipole() -> (SourceSpec, WaveContext) {
    let ctx = unit_ctx();
    (dipole_ball_source([0.0, 0.0, 1.0], 0.5, DipoleProfile::Bump, &ctx).unwrap(), ctx)
}

pub fn curl_bump() -> (SourceSpec, WaveContext) {
    let ctx = unit_ctx();
    (curl_bump_source([0.2, 0.4, -0.3], 0.5, &ctx).unwrap(), ctx)
}

/// The five descriptor kinds with their default parameters.
pub fn builtin() -> Vec<(SourceSpec, WaveContext)> {
    vec![bessel_pair(), bessel_single(), curlcurl(), gradient(), dipole()]
}

/// Built-ins plus the divergence-free radiating control.
pub fn all_smooth() -> Vec<(SourceSpec, WaveContext)> {
    let mut v = builtin();
    v.push(curl_bump());
    v
}
