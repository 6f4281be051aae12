//! One-dimensional coefficient profiles on `[0, 1]`.
//!
//! Every coefficient the solvers touch (densities, potentials, blends, the
//! `h` function of the transformation chain) is evaluated through [`Profile`].
//! Profiles may jump or kink at a finite set of interior breakpoints; callers
//! pick the one-sided limit they need with [`Side`].

/// Which one-sided limit to take at a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

pub trait Profile: Send + Sync {
    /// Value at `x`; at a breakpoint, the limit from `side`.
    fn eval(&self, x: f64, side: Side) -> f64;

    /// Derivative inside the smooth piece adjacent to `x` on `side`.
    fn slope(&self, x: f64, side: Side) -> f64;

    /// Sorted interior points of `(0, 1)` where the value or the slope may be
    /// discontinuous.
    fn breakpoints(&self) -> Vec<f64>;

    /// Right-continuous value.
    fn value(&self, x: f64) -> f64 {
        self.eval(x, Side::Right)
    }
}

impl<P: Profile + ?Sized> Profile for &P {
    fn eval(&self, x: f64, side: Side) -> f64 {
        (**self).eval(x, side)
    }
    fn slope(&self, x: f64, side: Side) -> f64 {
        (**self).slope(x, side)
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
}

/// Product of two profiles, e.g. `p * rho`.
pub struct Product<'a>(pub &'a dyn Profile, pub &'a dyn Profile);

impl Profile for Product<'_> {
    fn eval(&self, x: f64, side: Side) -> f64 {
        self.0.eval(x, side) * self.1.eval(x, side)
    }
    fn slope(&self, x: f64, side: Side) -> f64 {
        self.0.slope(x, side) * self.1.eval(x, side) + self.0.eval(x, side) * self.1.slope(x, side)
    }
    fn breakpoints(&self) -> Vec<f64> {
        merge_points(&[self.0.breakpoints(), self.1.breakpoints()])
    }
}

/// Sorted union of point sets with exact duplicates removed.
pub fn merge_points(sets: &[Vec<f64>]) -> Vec<f64> {
    let mut all: Vec<f64> = sets.iter().flatten().copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}

/// A sampled view of a profile: a uniform grid of `resolution` cells plus
/// both one-sided values at every breakpoint, in ascending `x` order.
pub fn samples(profile: &dyn Profile, resolution: usize) -> Vec<(f64, f64)> {
    let resolution = resolution.max(2);
    let breaks = profile.breakpoints();
    let mut out = Vec::with_capacity(resolution + 1 + 2 * breaks.len());
    let mut b = 0;
    for i in 0..=resolution {
        let x = i as f64 / resolution as f64;
        while b < breaks.len() && breaks[b] <= x {
            let bx = breaks[b];
            out.push((bx, profile.eval(bx, Side::Left)));
            out.push((bx, profile.eval(bx, Side::Right)));
            b += 1;
        }
        if out.last().is_some_and(|&(px, _)| px == x) {
            continue;
        }
        let side = if i == resolution { Side::Left } else { Side::Right };
        out.push((x, profile.eval(x, side)));
    }
    out
}

/// Sampled minimum and maximum.
pub fn bounds(profile: &dyn Profile, resolution: usize) -> (f64, f64) {
    samples(profile, resolution)
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, v)| (lo.min(v), hi.max(v)))
}

/// Locations in `[a, b]` where the profile changes sign, located by
/// bisection between sign-differing samples. A jump across zero at a
/// breakpoint is reported at the breakpoint.
pub fn sign_changes(profile: &dyn Profile, a: f64, b: f64, resolution: usize) -> Vec<f64> {
    let pts: Vec<(f64, f64)> = samples(profile, resolution)
        .into_iter()
        .filter(|&(x, v)| x >= a && x <= b && v != 0.0)
        .collect();
    let mut out = Vec::new();
    for w in pts.windows(2) {
        let ((x0, v0), (x1, v1)) = (w[0], w[1]);
        if v0.signum() == v1.signum() {
            continue;
        }
        if x0 == x1 {
            out.push(x0);
            continue;
        }
        let (mut lo, mut hi) = (x0, x1);
        let s0 = v0.signum();
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if profile.value(mid).signum() == s0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    out
}
