//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use ratiolab_core::{Density, Profile, Side};

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Fixed-step RK4 for `y'' = -z^2 rho y`, `y(0) = 0`, `y'(0) = rho(0)^{1/4}`,
/// with the step grid refined so that every breakpoint is a node. Returns the
/// unwrapped phase `atan2(z rho^{1/4} y, rho^{-1/4} y')` at every node.
pub fn rk4_phase(rho: &Density, z: f64, steps_per_unit: usize) -> Vec<(f64, f64)> {
    let mut edges = vec![0.0];
    edges.extend(rho.breakpoints());
    edges.push(1.0);
    let rhs = |x: f64, y: [f64; 2], side: Side| [y[1], -z * z * rho.eval(x, side) * y[0]];
    let mut y = [0.0, rho.eval(0.0, Side::Right).powf(0.25)];
    let mut out = vec![(0.0, 0.0)];
    let mut phase = 0.0f64;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = ((b - a) * steps_per_unit as f64).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        for i in 0..n {
            let x = a + i as f64 * h;
            let k1 = rhs(x, y, Side::Right);
            let k2 = rhs(x + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]], Side::Right);
            let k3 = rhs(x + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]], Side::Right);
            let end = if i + 1 == n { b } else { x + h };
            let k4 = rhs(end, [y[0] + h * k3[0], y[1] + h * k3[1]], Side::Left);
            for j in 0..2 {
                y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            let side = if end >= 1.0 { Side::Left } else { Side::Right };
            let r = rho.eval(end, side);
            let raw = (z * r.powf(0.25) * y[0]).atan2(r.powf(-0.25) * y[1]);
            let mut d = raw - phase.rem_euclid(2.0 * PI);
            while d > PI {
                d -= 2.0 * PI;
            }
            while d < -PI {
                d += 2.0 * PI;
            }
            phase += d;
            out.push((end, phase));
        }
    }
    out
}

pub fn rk4_endpoint_phase(rho: &Density, z: f64) -> f64 {
    rk4_phase(rho, z, 20_000).last().unwrap().1
}

/// `d/dz [phi(1, z) / z]` by extrapolated central differences on the RK4 phase.
pub fn theta_dot_fd(rho: &Density, z: f64, eps: f64) -> f64 {
    let theta = |z: f64| rk4_endpoint_phase(rho, z) / z;
    let central = |h: f64| (theta(z + h) - theta(z - h)) / (2.0 * h);
    (4.0 * central(eps / 2.0) - central(eps)) / 3.0
}

/// Composite Simpson on a uniform grid with `cells` (even) cells.
pub fn simpson(a: f64, b: f64, cells: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / cells as f64;
    let mut s = f(a) + f(b);
    for i in 1..cells {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}
