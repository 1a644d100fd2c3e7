#![allow(dead_code)]

use frontprop::{Grid, InitialDatum, ScalarField};
use std::f64::consts::PI;

/// Truncated cone `clamp(r - |x|, -1, 1)`: the exact signed distance datum of
/// a disk.
pub fn disk_datum(half_width: f64, h: f64, r: f64) -> InitialDatum {
    let g = Grid::centered(2, half_width, h).unwrap();
    InitialDatum::from_fn(g, -1.0, |p| r - p[0].hypot(p[1])).unwrap()
}

pub fn disk_indicator(g: &Grid, r: f64) -> Vec<f64> {
    (0..g.len())
        .map(|i| {
            let p = g.point(i);
            if p[0].hypot(p[1]) <= r { 1.0 } else { 0.0 }
        })
        .collect()
}

/// Zero crossing of `u` along the ray from the origin in direction `angle`,
/// by bisection on the bilinear interpolant.
pub fn ray_radius(u: &ScalarField, angle: f64, r_max: f64) -> f64 {
    let (c, s) = (angle.cos(), angle.sin());
    let (mut a, mut b) = (0.0, r_max);
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if u.interpolate([m * c, m * s]) >= 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    a
}

/// Largest deviation of the zero level from radius `r` over 64 rays.
pub fn radius_error(u: &ScalarField, r: f64, r_max: f64) -> f64 {
    (0..64)
        .map(|k| (ray_radius(u, 2.0 * PI * k as f64 / 64.0, r_max) - r).abs())
        .fold(0.0, f64::max)
}

/// Classical RK4 for the scalar ODE `r' = f(r, t)`.
pub fn rk4_radius(r0: f64, t_end: f64, dt: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
    let n = (t_end / dt).ceil() as usize;
    let dt = t_end / n as f64;
    let mut r = r0;
    for k in 0..n {
        let t = k as f64 * dt;
        let k1 = f(r, t);
        let k2 = f(r + 0.5 * dt * k1, t + 0.5 * dt);
        let k3 = f(r + 0.5 * dt * k2, t + 0.5 * dt);
        let k4 = f(r + dt * k3, t + dt);
        r += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    r
}
