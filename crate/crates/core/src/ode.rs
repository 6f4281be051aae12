//! Adaptive Dormand-Prince 5(4) integration with continuous output.
//!
//! The span is split at mandatory stop points (coefficient breakpoints).
//! Right-hand sides are evaluated with the one-sided coefficient limit that
//! faces the interior of the current segment, and the system may remap its
//! state when crossing a stop.

use crate::error::{Error, Result};
use crate::profile::Side;

pub trait System<const N: usize> {
    fn rhs(&self, x: f64, y: &[f64; N], side: Side) -> [f64; N];

    /// Map the state across the stop at `x`, travelling forward (`forward`)
    /// or backward in `x`. Continuous states keep the default.
    fn cross(&self, _x: f64, y: &[f64; N], _forward: bool) -> [f64; N] {
        *y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Optional cap on the step length.
    pub max_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, max_steps: 2_000_000, max_step: f64::INFINITY }
    }
}

/// One accepted step with its continuous extension.
#[derive(Debug, Clone)]
pub struct Piece<const N: usize> {
    pub x_start: f64,
    pub h: f64,
    pub y_start: [f64; N],
    pub y_end: [f64; N],
    cont: [[f64; N]; 4],
}

impl<const N: usize> Piece<N> {
    pub fn lo(&self) -> f64 {
        self.x_start.min(self.x_start + self.h)
    }

    pub fn hi(&self) -> f64 {
        self.x_start.max(self.x_start + self.h)
    }

    pub fn x_end(&self) -> f64 {
        self.x_start + self.h
    }

    pub fn eval(&self, x: f64) -> [f64; N] {
        let t = ((x - self.x_start) / self.h).clamp(0.0, 1.0);
        let s = 1.0 - t;
        let [r2, r3, r4, r5] = &self.cont;
        std::array::from_fn(|i| self.y_start[i] + t * (r2[i] + s * (r3[i] + t * (r4[i] + s * r5[i]))))
    }
}

/// Dense solution: accepted pieces sorted by ascending `x`. At a stop the
/// piece ending there and the piece starting there may hold different
/// (remapped) states.
#[derive(Debug, Clone)]
pub struct Trail<const N: usize> {
    pub pieces: Vec<Piece<N>>,
}

impl<const N: usize> Trail<N> {
    pub fn lo(&self) -> f64 {
        self.pieces[0].lo()
    }

    pub fn hi(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].hi()
    }

    /// Index of the piece covering `x` from `side`.
    pub fn locate(&self, x: f64, side: Side) -> usize {
        let k = match side {
            Side::Right => self.pieces.partition_point(|p| p.lo() <= x),
            Side::Left => self.pieces.partition_point(|p| p.lo() < x),
        };
        k.saturating_sub(1)
    }

    pub fn eval(&self, x: f64, side: Side) -> [f64; N] {
        self.pieces[self.locate(x, side)].eval(x)
    }

    /// State at the end of the integration.
    pub fn last_state(&self, forward: bool) -> [f64; N] {
        if forward {
            self.pieces[self.pieces.len() - 1].y_end
        } else {
            self.pieces[0].y_end
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

/// Integrate from `x0` to `x1` (either direction), stopping exactly at every
/// point of `stops` strictly between them.
pub fn integrate<S: System<N>, const N: usize>(
    sys: &S,
    x0: f64,
    y0: [f64; N],
    x1: f64,
    stops: &[f64],
    opts: &OdeOptions,
) -> Result<Trail<N>> {
    let forward = x1 >= x0;
    let (lo, hi) = if forward { (x0, x1) } else { (x1, x0) };
    let mut inner: Vec<f64> = stops.iter().copied().filter(|&s| s > lo && s < hi).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    if !forward {
        inner.reverse();
    }
    let mut marks = Vec::with_capacity(inner.len() + 2);
    marks.push(x0);
    marks.extend(inner);
    marks.push(x1);

    let mut pieces = Vec::new();
    let mut y = y0;
    let mut h_guess = f64::NAN;
    let mut steps = 0usize;
    for (k, seg) in marks.windows(2).enumerate() {
        let (a, b) = (seg[0], seg[1]);
        if k > 0 {
            y = sys.cross(a, &y, forward);
        }
        if a == b {
            continue;
        }
        let mid = 0.5 * (a + b);
        let side_at = |x: f64| {
            if forward {
                if x < mid { Side::Right } else { Side::Left }
            } else if x > mid {
                Side::Left
            } else {
                Side::Right
            }
        };
        y = integrate_segment(sys, a, b, y, &side_at, opts, &mut h_guess, &mut steps, &mut pieces)?;
    }
    if pieces.is_empty() {
        // Degenerate span: keep a zero-length piece so the trail is evaluable.
        pieces.push(Piece { x_start: x0, h: 0.0, y_start: y0, y_end: y0, cont: [[0.0; N]; 4] });
    }
    if !forward {
        pieces.reverse();
    }
    Ok(Trail { pieces })
}

#[allow(clippy::too_many_arguments)]
fn integrate_segment<S: System<N>, const N: usize>(
    sys: &S,
    a: f64,
    b: f64,
    mut y: [f64; N],
    side_at: &dyn Fn(f64) -> Side,
    opts: &OdeOptions,
    h_guess: &mut f64,
    steps: &mut usize,
    pieces: &mut Vec<Piece<N>>,
) -> Result<[f64; N]> {
    let dir = (b - a).signum();
    let len = (b - a).abs();
    let mut x = a;
    let mut f0 = sys.rhs(x, &y, side_at(x));
    let mut h = if h_guess.is_finite() { h_guess.min(len) } else { (0.01 * len).min(opts.max_step) };
    h = h.min(opts.max_step);
    loop {
        let remaining = (b - x).abs();
        if remaining <= 0.0 {
            break;
        }
        let last = h >= remaining * (1.0 - 1e-12);
        let hs = if last { remaining } else { h };
        if hs < 1e-14 * x.abs().max(1.0) {
            return Err(Error::StepUnderflow { x });
        }
        *steps += 1;
        if *steps > opts.max_steps {
            return Err(Error::TooManySteps { x, max_steps: opts.max_steps });
        }
        let hd = dir * hs;
        let k1 = f0;
        let k2 = sys.rhs(x + C2 * hd, &axpy(&y, hd, &[(A21, &k1)]), side_at(x + C2 * hd));
        let k3 = sys.rhs(x + C3 * hd, &axpy(&y, hd, &[(A31, &k1), (A32, &k2)]), side_at(x + C3 * hd));
        let k4 = sys.rhs(x + C4 * hd, &axpy(&y, hd, &[(A41, &k1), (A42, &k2), (A43, &k3)]), side_at(x + C4 * hd));
        let k5 = sys.rhs(
            x + C5 * hd,
            &axpy(&y, hd, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            side_at(x + C5 * hd),
        );
        let x_new = if last { b } else { x + hd };
        let k6 = sys.rhs(x_new, &axpy(&y, hd, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]), side_at(x_new));
        let y_new = axpy(&y, hd, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = sys.rhs(x_new, &y_new, side_at(x_new));

        let mut err = 0.0;
        for i in 0..N {
            let e = hd * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / N as f64).sqrt();
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            if hs < 1e-14 * x.abs().max(1.0) * 1e3 {
                return Err(Error::NonFinite { x });
            }
            h = 0.1 * hs;
            continue;
        }
        if err <= 1.0 {
            let r2: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
            let r3: [f64; N] = std::array::from_fn(|i| hd * k1[i] - r2[i]);
            let r4: [f64; N] = std::array::from_fn(|i| r2[i] - hd * k7[i] - r3[i]);
            let r5: [f64; N] = std::array::from_fn(|i| {
                hd * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
            });
            pieces.push(Piece { x_start: x, h: x_new - x, y_start: y, y_end: y_new, cont: [r2, r3, r4, r5] });
            x = x_new;
            y = y_new;
            f0 = k7;
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (hs * fac).min(opts.max_step);
            if !last {
                *h_guess = h;
            }
            if last {
                break;
            }
        } else {
            h = hs * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
    }
    Ok(y)
}
