//! Shooting eigensolver for the string equation `-y'' = z^2 rho y` in
//! modified Prüfer variables.
//!
//! With `y = (r/z) rho^{-1/4} sin(phi)` and `y' = r rho^{1/4} cos(phi)` the
//! phase and log-amplitude obey
//!
//! ```text
//! phi'   = z rho^{1/2} + (rho'/4rho) sin(2 phi)
//! log r' = -(rho'/4rho) cos(2 phi)
//! ```
//!
//! starting from `phi(0) = 0`, `r(0) = 1` (i.e. `y'(0) = rho^{1/4}(0)`).
//! At a jump of `rho` the pair `(y, y')` is continuous, which fixes an exact
//! remap of `(phi, log r)`. The n-th Dirichlet eigenvalue is `z_n^2` where
//! `phi(1, z_n) = n pi`.

use std::f64::consts::PI;
use std::io::{self, Write};

use crate::density::Density;
use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions, Piece, System, Trail};
use crate::profile::{Profile, Side};
use crate::quad;
use crate::roots;

/// Largest phase advance per quadrature cell along a trail.
const PHASE_CELL: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruferOptions {
    pub ode: OdeOptions,
    /// Required `|phi(1, z_n) - n pi|`.
    pub residual_tol: f64,
    pub bracket_cap: usize,
    pub max_iterations: usize,
}

impl Default for PruferOptions {
    fn default() -> Self {
        PruferOptions { ode: OdeOptions::default(), residual_tol: 1e-12, bracket_cap: 60, max_iterations: 200 }
    }
}

impl PruferOptions {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        PruferOptions { ode: OdeOptions { rtol, atol, ..OdeOptions::default() }, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruferState {
    pub x: f64,
    pub phi: f64,
    pub log_r: f64,
    pub z: f64,
}

impl PruferState {
    pub fn r(&self) -> f64 {
        self.log_r.exp()
    }

    pub fn theta(&self) -> f64 {
        self.phi / self.z
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingResult {
    pub n: usize,
    pub z: f64,
    pub lambda: f64,
    pub residual: f64,
    pub iterations: usize,
}

struct PhaseSystem<'a> {
    rho: &'a Density,
    z: f64,
}

impl System<2> for PhaseSystem<'_> {
    fn rhs(&self, x: f64, y: &[f64; 2], side: Side) -> [f64; 2] {
        let r = self.rho.eval(x, side);
        let g = 0.25 * self.rho.slope(x, side) / r;
        let (s2, c2) = (2.0 * y[0]).sin_cos();
        [self.z * r.sqrt() + g * s2, -g * c2]
    }

    fn cross(&self, x: f64, y: &[f64; 2], forward: bool) -> [f64; 2] {
        let (from, to) = if forward { (Side::Left, Side::Right) } else { (Side::Right, Side::Left) };
        let (r0, r1) = (self.rho.eval(x, from), self.rho.eval(x, to));
        if r0 == r1 {
            return *y;
        }
        remap_across_jump(y, (r1 / r0).powf(0.25))
    }
}

/// `(phi, log r)` after `rho` jumps by the factor `s^4`, keeping `y` and `y'` continuous.
fn remap_across_jump(y: &[f64; 2], s: f64) -> [f64; 2] {
    let (sn, cs) = y[0].sin_cos();
    let along = cs * cs / s + s * sn * sn;
    let turn = (s - 1.0 / s) * sn * cs;
    [y[0] + turn.atan2(along), y[1] + 0.5 * (cs * cs / (s * s) + s * s * sn * sn).ln()]
}

/// Dense Prüfer solution on `[0, 1]` for one value of `z`.
#[derive(Debug, Clone)]
pub struct PruferTrail {
    rho: Density,
    z: f64,
    trail: Trail<2>,
}

/// Integrate the phase/amplitude system on `[0, 1]`.
pub fn prufer_integrate(rho: &Density, z: f64, opts: &PruferOptions) -> Result<PruferTrail> {
    if !(z > 0.0) {
        return Err(Error::NonPositiveSpectral(z));
    }
    let sys = PhaseSystem { rho, z };
    let trail = ode::integrate(&sys, 0.0, [0.0, 0.0], 1.0, &rho.breakpoints(), &opts.ode)?;
    Ok(PruferTrail { rho: rho.clone(), z, trail })
}

impl PruferTrail {
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn density(&self) -> &Density {
        &self.rho
    }

    pub fn end(&self) -> PruferState {
        let y = self.trail.last_state(true);
        PruferState { x: 1.0, phi: y[0], log_r: y[1], z: self.z }
    }

    /// State at `x`; right limit at breakpoints.
    pub fn state_at(&self, x: f64) -> PruferState {
        self.state_side(x, Side::Right)
    }

    pub fn state_side(&self, x: f64, side: Side) -> PruferState {
        let y = self.trail.eval(x, side);
        PruferState { x, phi: y[0], log_r: y[1], z: self.z }
    }

    fn check_range(&self, x: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfRange { x, lo: 0.0, hi: 1.0 });
        }
        Ok(())
    }

    /// `y(x)` of the unnormalized initial-value solution.
    pub fn y(&self, x: f64) -> f64 {
        let s = self.state_at(x);
        s.r() / self.z * self.rho.value(x).powf(-0.25) * s.phi.sin()
    }

    pub fn dy(&self, x: f64) -> f64 {
        let s = self.state_at(x);
        s.r() * self.rho.value(x).powf(0.25) * s.phi.cos()
    }

    /// `int_0^x f(t, phi(t), log r(t))` along the trail, with cells small
    /// enough in phase for the oscillatory integrands used here.
    pub fn integrate_along(&self, x: f64, mut f: impl FnMut(f64, f64, f64) -> f64) -> f64 {
        let mut total = 0.0;
        for piece in &self.trail.pieces {
            let (a, b) = (piece.lo(), piece.hi().min(x));
            if b <= a {
                if piece.lo() >= x {
                    break;
                }
                continue;
            }
            total += integrate_piece(piece, a, b, &mut f);
        }
        total
    }

    /// Breakpoints in `(0, x]` where the state was remapped, with the states
    /// on either side.
    fn jumps_up_to(&self, x: f64) -> Vec<([f64; 2], [f64; 2])> {
        self.trail
            .pieces
            .windows(2)
            .filter(|w| w[0].x_end() == w[1].x_start && w[0].x_end() <= x && w[0].y_end != w[1].y_start)
            .map(|w| (w[0].y_end, w[1].y_start))
            .collect()
    }

    /// `d/dz [phi(x, z) / z]` from the z-differentiated phase equation:
    ///
    /// ```text
    /// z^2 r(x)^2 theta_dot(x) = int_0^x r^2 (rho'/4rho) (2 phi cos 2phi - sin 2phi) dt
    ///                           - sum over jumps in (0, x] of [r^2 phi]
    /// ```
    pub fn theta_dot(&self, x: f64) -> Result<f64> {
        self.check_range(x)?;
        let lx = self.state_at(x).log_r;
        let rho = &self.rho;
        let smooth = self.integrate_along(x, |t, phi, lr| {
            let g = 0.25 * rho.slope(t, Side::Right) / rho.value(t);
            let (s2, c2) = (2.0 * phi).sin_cos();
            (2.0 * (lr - lx)).exp() * g * (2.0 * phi * c2 - s2)
        });
        let jumps: f64 = self
            .jumps_up_to(x)
            .iter()
            .map(|(before, after)| {
                -((2.0 * (after[1] - lx)).exp() * after[0] - (2.0 * (before[1] - lx)).exp() * before[0])
            })
            .sum();
        Ok((smooth + jumps) / (self.z * self.z))
    }

    /// `d/dz [phi / z]` through `r(x)^2 dphi/dz = int_0^x r^2 rho^{1/2} dt`,
    /// which also holds across jumps of `rho`.
    pub fn theta_dot_from_sensitivity(&self, x: f64) -> Result<f64> {
        self.check_range(x)?;
        let s = self.state_at(x);
        let rho = &self.rho;
        let weight = self.integrate_along(x, |t, _, lr| (2.0 * (lr - s.log_r)).exp() * rho.value(t).sqrt());
        Ok((self.z * weight - s.phi) / (self.z * self.z))
    }

    /// Trail nodes as CSV `x,phi,log_r`.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "x,phi,log_r")?;
        let first = &self.trail.pieces[0];
        writeln!(w, "{},{},{}", first.lo(), first.y_start[0], first.y_start[1])?;
        for p in &self.trail.pieces {
            writeln!(w, "{},{},{}", p.x_end(), p.y_end[0], p.y_end[1])?;
        }
        Ok(())
    }
}

fn integrate_piece(piece: &Piece<2>, a: f64, b: f64, f: &mut impl FnMut(f64, f64, f64) -> f64) -> f64 {
    let dphi = (piece.y_end[0] - piece.y_start[0]).abs() * (b - a) / (piece.hi() - piece.lo());
    let cells = ((dphi / PHASE_CELL).ceil() as usize).max(1);
    let h = (b - a) / cells as f64;
    (0..cells)
        .map(|k| {
            let lo = a + k as f64 * h;
            let hi = if k + 1 == cells { b } else { lo + h };
            quad::gauss5(lo, hi, |t| {
                let y = piece.eval(t);
                f(t, y[0], y[1])
            })
        })
        .sum()
}

/// `phi(1, z)`.
pub fn endpoint_phase(rho: &Density, z: f64, opts: &PruferOptions) -> Result<f64> {
    Ok(prufer_integrate(rho, z, opts)?.end().phi)
}

/// The n-th Dirichlet eigenvalue by bracketing and root-finding `phi(1, z) = n pi`.
pub fn eigenvalue(rho: &Density, n: usize, opts: &PruferOptions) -> Result<ShootingResult> {
    if n < 1 {
        return Err(Error::ModeIndex { n, min: 1 });
    }
    let target = n as f64 * PI;
    let mut evals = 0usize;
    let mut f = |z: f64| -> Result<f64> {
        evals += 1;
        Ok(endpoint_phase(rho, z, opts)? - target)
    };

    // Sturm comparison with the constant densities min(rho) and max(rho).
    let (min, max) = rho.bounds();
    let mut lo = target / max.sqrt() * (1.0 - 1e-6);
    let mut hi = target / min.sqrt() * (1.0 + 1e-6);
    let mut flo = f(lo)?;
    let mut expansions = 0;
    while flo > 0.0 {
        expansions += 1;
        if expansions > opts.bracket_cap {
            return Err(Error::BracketExpansion { n, cap: opts.bracket_cap });
        }
        lo *= 0.8;
        flo = f(lo)?;
    }
    let mut fhi = f(hi)?;
    while fhi < 0.0 {
        expansions += 1;
        if expansions > opts.bracket_cap {
            return Err(Error::BracketExpansion { n, cap: opts.bracket_cap });
        }
        hi *= 1.25;
        fhi = f(hi)?;
    }

    while hi - lo > 1e-3 * hi {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if !(flo < fm && fm < fhi) && fm != 0.0 {
            return Err(Error::NonMonotonePhase { n, lo, hi });
        }
        if fm < 0.0 {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    let z = roots::brent(&mut f, lo, hi, 1e-16 * hi, opts.max_iterations)?;
    let residual = f(z)?.abs();
    if residual > opts.residual_tol {
        return Err(Error::RootCap(format!(
            "mode {n}: residual {residual:e} above tolerance {:e}",
            opts.residual_tol
        )));
    }
    Ok(ShootingResult { n, z, lambda: z * z, residual, iterations: evals })
}

/// The first `n_max` eigenvalues.
pub fn eigenvalues(rho: &Density, n_max: usize, opts: &PruferOptions) -> Result<Vec<f64>> {
    (1..=n_max).map(|n| eigenvalue(rho, n, opts).map(|r| r.lambda)).collect()
}

/// A normalized eigenfunction with its dense Prüfer representation.
///
/// Sign convention: `u_n > 0` on `(0, first zero)`.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub n: usize,
    pub z: f64,
    pub lambda: f64,
    pub residual: f64,
    pub trail: PruferTrail,
    scale: f64,
}

pub fn eigenpair(rho: &Density, n: usize, opts: &PruferOptions) -> Result<Eigenpair> {
    let res = eigenvalue(rho, n, opts)?;
    let trail = prufer_integrate(rho, res.z, opts)?;
    let z2 = res.z * res.z;
    let norm = trail.integrate_along(1.0, |t, phi, lr| (2.0 * lr).exp() * rho.value(t).sqrt() * phi.sin().powi(2) / z2);
    Ok(Eigenpair { n, z: res.z, lambda: res.lambda, residual: res.residual, trail, scale: norm.sqrt().recip() })
}

impl Eigenpair {
    pub fn u(&self, x: f64) -> f64 {
        self.scale * self.trail.y(x)
    }

    pub fn du(&self, x: f64) -> f64 {
        self.scale * self.trail.dy(x)
    }

    pub fn density(&self) -> &Density {
        self.trail.density()
    }

    /// Interior zeros, where the phase passes `k pi`, `k = 1..n-1`.
    pub fn zeros(&self) -> Vec<f64> {
        let pieces = &self.trail.trail.pieces;
        let mut out = Vec::with_capacity(self.n.saturating_sub(1));
        let mut start = 0;
        for k in 1..self.n {
            let level = k as f64 * PI;
            let Some(off) = pieces[start..].iter().position(|p| p.y_end[0] >= level) else {
                break;
            };
            let idx = start + off;
            let p = &pieces[idx];
            let (mut a, mut b) = (p.lo(), p.hi());
            if p.y_start[0] >= level {
                out.push(a);
            } else {
                for _ in 0..100 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    if p.eval(m)[0] < level {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                out.push(0.5 * (a + b));
            }
            start = idx;
        }
        out
    }

    /// `int_0^1 rho u^2` by composite quadrature on a uniform grid plus breakpoints.
    pub fn norm(&self) -> f64 {
        let rho = self.density();
        let grid = quad::union_grid(0.0, 1.0, 2048, &rho.breakpoints());
        quad::composite(&grid, |x| rho.value(x) * self.u(x).powi(2))
    }

    pub fn sample(&self, grid: &[f64]) -> EigenSolution {
        EigenSolution {
            n: self.n,
            lambda: self.lambda,
            grid: grid.to_vec(),
            samples: grid.iter().map(|&x| self.u(x)).collect(),
            zeros: self.zeros(),
            normalization: self.norm(),
        }
    }
}

/// Sampled eigenfunction.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution {
    pub n: usize,
    pub lambda: f64,
    pub grid: Vec<f64>,
    pub samples: Vec<f64>,
    pub zeros: Vec<f64>,
    /// `int rho u^2`, recomputed after scaling.
    pub normalization: f64,
}

pub fn eigenfunction(rho: &Density, n: usize, grid: &[f64], opts: &PruferOptions) -> Result<EigenSolution> {
    if let Some(&x) = grid.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::Domain { x });
    }
    Ok(eigenpair(rho, n, opts)?.sample(grid))
}

/// `d/dz [phi(x, z) / z]` at one point.
pub fn theta_dot(rho: &Density, z: f64, x: f64, opts: &PruferOptions) -> Result<f64> {
    prufer_integrate(rho, z, opts)?.theta_dot(x)
}
