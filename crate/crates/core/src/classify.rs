//! Shape classification of sampled coefficients: monotone, single-well,
//! single-barrier.

use serde::{Deserialize, Serialize};

use crate::profile::{self, Profile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Constant,
    Decreasing,
    Increasing,
    SingleWell,
    SingleBarrier,
    Other,
}

impl Shape {
    /// Constant and monotone functions are single-well for a suitable `x0`.
    pub fn is_single_well(self) -> bool {
        matches!(self, Shape::Constant | Shape::Decreasing | Shape::Increasing | Shape::SingleWell)
    }

    pub fn is_single_barrier(self) -> bool {
        matches!(self, Shape::Constant | Shape::Decreasing | Shape::Increasing | Shape::SingleBarrier)
    }

    pub fn is_decreasing(self) -> bool {
        matches!(self, Shape::Constant | Shape::Decreasing)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub shape: Shape,
    /// Transition point: leftmost argmin for wells and monotone functions,
    /// leftmost argmax for barriers, `0` for constants.
    pub transition: Option<f64>,
    /// The unique sign change, when the function changes sign exactly once.
    pub sign_change: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    pub tolerance: f64,
    pub resolution: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { tolerance: 1e-12, resolution: 1024 }
    }
}

impl ClassifyOptions {
    pub fn with_tolerance(tolerance: f64) -> Self {
        ClassifyOptions { tolerance, ..Default::default() }
    }
}

pub fn classify(f: &dyn Profile, opts: ClassifyOptions) -> Classification {
    let pts = profile::samples(f, opts.resolution);
    let tol = opts.tolerance;
    let sign_change = {
        let s = profile::sign_changes(f, 0.0, 1.0, opts.resolution);
        (s.len() == 1).then(|| s[0])
    };
    let v: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (min, max) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));

    let total_variation: f64 = v.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let result = |shape, transition| Classification { shape, transition, sign_change };
    if total_variation <= tol {
        return result(Shape::Constant, Some(0.0));
    }

    let argmin = v.iter().position(|&x| x <= min + tol).unwrap_or(0);
    let argmax = v.iter().position(|&x| x >= max - tol).unwrap_or(0);
    let nonincreasing = |r: std::ops::Range<usize>| v[r].windows(2).all(|w| w[1] - w[0] <= tol);
    let nondecreasing = |r: std::ops::Range<usize>| v[r].windows(2).all(|w| w[1] - w[0] >= -tol);

    if nonincreasing(0..v.len()) {
        return result(Shape::Decreasing, Some(pts[argmin].0));
    }
    if nondecreasing(0..v.len()) {
        return result(Shape::Increasing, Some(pts[argmin].0));
    }
    if nonincreasing(0..argmin + 1) && nondecreasing(argmin..v.len()) {
        let x0 = refine_extremum(f, &pts, argmin, tol, true);
        return result(Shape::SingleWell, Some(x0));
    }
    if nondecreasing(0..argmax + 1) && nonincreasing(argmax..v.len()) {
        let x0 = refine_extremum(f, &pts, argmax, tol, false);
        return result(Shape::SingleBarrier, Some(x0));
    }
    result(Shape::Other, None)
}

/// Golden-section refinement of a strict sampled extremum; flat extrema
/// keep the leftmost sample.
fn refine_extremum(f: &dyn Profile, pts: &[(f64, f64)], i: usize, tol: f64, minimum: bool) -> f64 {
    if i == 0 || i + 1 >= pts.len() {
        return pts[i].0;
    }
    let sign = if minimum { 1.0 } else { -1.0 };
    let g = |x: f64| sign * f.value(x);
    let (v_prev, v, v_next) = (sign * pts[i - 1].1, sign * pts[i].1, sign * pts[i + 1].1);
    if v_prev - v <= tol || v_next - v <= tol || pts[i - 1].0 == pts[i].0 || pts[i + 1].0 == pts[i].0 {
        return pts[i].0;
    }
    let (mut a, mut b) = (pts[i - 1].0, pts[i + 1].0);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > 1e-13 {
        if gc <= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    0.5 * (a + b)
}

/// Nonincreasing on `[0, x0]` and nondecreasing on `[x0, 1]`, up to `tol`.
pub fn is_single_well_at(f: &dyn Profile, x0: f64, tol: f64, resolution: usize) -> bool {
    monotone_split(f, x0, tol, resolution, 1.0)
}

/// Nondecreasing on `[0, x0]` and nonincreasing on `[x0, 1]`, up to `tol`.
pub fn is_single_barrier_at(f: &dyn Profile, x0: f64, tol: f64, resolution: usize) -> bool {
    monotone_split(f, x0, tol, resolution, -1.0)
}

fn monotone_split(f: &dyn Profile, x0: f64, tol: f64, resolution: usize, sign: f64) -> bool {
    let mut pts = profile::samples(f, resolution);
    let split = pts.partition_point(|p| p.0 < x0);
    pts.insert(split, (x0, f.value(x0)));
    let left = pts[..=split].windows(2).all(|w| sign * (w[1].1 - w[0].1) <= tol);
    let right = pts[split..].windows(2).all(|w| sign * (w[1].1 - w[0].1) >= -tol);
    left && right
}
