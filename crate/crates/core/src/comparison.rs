//! Crossing points of consecutive eigenfunctions, the step companion built
//! from them, eigenvalue sensitivities, and the homotopy between a density
//! and its companion.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{Coefficient, Density};
use crate::error::{Error, Result};
use crate::profile::{self, Profile, Side};
use crate::prufer::{self, Eigenpair, PruferOptions};
use crate::quad;

/// Cells of the uniform part of every quadrature grid used here.
const QUAD_CELLS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingOptions {
    /// Uniform sampling resolution when bracketing crossings.
    pub resolution: usize,
    pub prufer: PruferOptions,
}

impl Default for CrossingOptions {
    fn default() -> Self {
        CrossingOptions { resolution: 4096, prufer: PruferOptions::default() }
    }
}

/// Zeros and crossings of the consecutive pair `(u_n, u_{n-1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingSet {
    pub n: usize,
    /// Interior zeros of `u_n`.
    pub y: Vec<f64>,
    /// Interior zeros of `u_{n-1}`.
    pub z: Vec<f64>,
    /// Solutions of `u_n^2 = u_{n-1}^2` in `(0, 1)`.
    pub x: Vec<f64>,
    /// `(x, w(x))` with `w = u_n' u_{n-1} - u_{n-1}' u_n`, at interior sample points.
    pub wronskian: Vec<(f64, f64)>,
    /// `+1` where `u_n^2 > u_{n-1}^2` on the interval left of each crossing
    /// and on the last interval; `signs.len() == x.len() + 1`.
    pub signs: Vec<i8>,
}

impl CrossingSet {
    /// `0 < y_1 < z_1 < y_2 < ... < z_{n-2} < y_{n-1} < 1`.
    pub fn merged_zeros(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.y.len() + self.z.len());
        for (i, &y) in self.y.iter().enumerate() {
            out.push(y);
            if let Some(&z) = self.z.get(i) {
                out.push(z);
            }
        }
        out
    }

    /// Checks interlacing, crossing placement and the sign of the Wronskian.
    ///
    /// Every open interval between consecutive merged zeros contains exactly
    /// one crossing; `(0, y_1)` and `(y_{n-1}, 1)` contain at most one.
    pub fn verify(&self) -> Result<()> {
        let n = self.n;
        if self.y.len() != n - 1 || self.z.len() != n - 2 {
            return Err(Error::Structural(format!(
                "mode {n}: expected {} and {} zeros, found {} and {}",
                n - 1,
                n - 2,
                self.y.len(),
                self.z.len()
            )));
        }
        let merged = self.merged_zeros();
        let mut edges = vec![0.0];
        edges.extend(&merged);
        edges.push(1.0);
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Structural(format!("mode {n}: zeros do not interlace: {merged:?}")));
        }
        let last = edges.len() - 2;
        for (i, w) in edges.windows(2).enumerate() {
            let inside = self.x.iter().filter(|&&x| x > w[0] && x < w[1]).count();
            let boundary = i == 0 || i == last;
            if (boundary && inside > 1) || (!boundary && inside != 1) {
                return Err(Error::Structural(format!(
                    "mode {n}: {inside} crossings in ({}, {}), expected {}",
                    w[0],
                    w[1],
                    if boundary { "at most one" } else { "exactly one" }
                )));
            }
        }
        if self.x.iter().any(|x| merged.contains(x)) {
            return Err(Error::Structural(format!("mode {n}: crossing on a zero")));
        }
        if let Some(&(x, w)) = self.wronskian.iter().find(|p| !(p.1 < 0.0)) {
            return Err(Error::Structural(format!("mode {n}: Wronskian {w} is not negative at x = {x}")));
        }
        Ok(())
    }
}

/// `u_n^2 - u_m^2` changes sign only where `|u_n| = |u_m|`.
fn gap(un: &Eigenpair, um: &Eigenpair, x: f64) -> f64 {
    un.u(x).abs() - um.u(x).abs()
}

pub fn wronskian(un: &Eigenpair, um: &Eigenpair, x: f64) -> f64 {
    un.du(x) * um.u(x) - um.du(x) * un.u(x)
}

/// Crossings of an already computed consecutive pair.
pub fn crossings_of(un: &Eigenpair, um: &Eigenpair, resolution: usize) -> Result<CrossingSet> {
    if un.n < 2 || um.n + 1 != un.n {
        return Err(Error::ModeIndex { n: un.n, min: 2 });
    }
    let rho = un.density();
    let mut grid = quad::union_grid(0.0, 1.0, resolution, &rho.breakpoints());
    grid.retain(|&x| x > 0.0 && x < 1.0);
    let values: Vec<f64> = grid.iter().map(|&x| gap(un, um, x)).collect();
    let mut x = Vec::new();
    for (i, w) in values.windows(2).enumerate() {
        if w[0] == 0.0 {
            x.push(grid[i]);
            continue;
        }
        if w[0].signum() == w[1].signum() || w[1] == 0.0 {
            continue;
        }
        let (mut lo, mut hi) = (grid[i], grid[i + 1]);
        let s0 = w[0].signum();
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if gap(un, um, mid).signum() == s0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        x.push(0.5 * (lo + hi));
    }
    let mut signs: Vec<i8> = Vec::with_capacity(x.len() + 1);
    let mut edges = vec![0.0];
    edges.extend(&x);
    edges.push(1.0);
    for w in edges.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        signs.push(if gap(un, um, mid) > 0.0 { 1 } else { -1 });
    }
    let wronskian = grid.iter().map(|&t| (t, wronskian(un, um, t))).collect();
    Ok(CrossingSet { n: un.n, y: un.zeros(), z: um.zeros(), x, wronskian, signs })
}

/// Crossings of `u_n^2` and `u_{n-1}^2` for normalized eigenfunctions that are
/// positive near `0`.
pub fn crossing_points(rho: &Density, n: usize, opts: &CrossingOptions) -> Result<CrossingSet> {
    if n < 2 {
        return Err(Error::ModeIndex { n, min: 2 });
    }
    let (un, um) = rayon::join(|| prufer::eigenpair(rho, n, &opts.prufer), || prufer::eigenpair(rho, n - 1, &opts.prufer));
    let set = crossings_of(&un?, &um?, opts.resolution)?;
    set.verify()?;
    Ok(set)
}

/// The piecewise-constant comparison density of a consecutive pair.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCompanion {
    pub density: Density,
    /// `0 = e_0 < e_1 < ... < e_k = 1`: the intervals on which `density` is constant.
    pub partition: Vec<f64>,
    /// The point of each interval where `density` takes the value of `rho`.
    pub junctions: Vec<f64>,
}

/// Pairs each interval where `u_n^2 > u_{n-1}^2` with the following interval
/// where the inequality reverses; the companion is `rho(junction)` on the
/// union of each pair. A leading `-` interval is paired with an empty `+`
/// interval at `0`, a trailing `+` interval with an empty `-` interval at `1`.
pub fn build_step_companion(rho: &Density, crossings: &CrossingSet) -> Result<StepCompanion> {
    if crossings.signs.is_empty() || crossings.signs.len() != crossings.x.len() + 1 {
        return Err(Error::Structural("empty or inconsistent crossing set".into()));
    }
    // (start, end, sign) with the empty padding intervals.
    let mut edges = vec![0.0];
    edges.extend(&crossings.x);
    edges.push(1.0);
    let mut intervals: Vec<(f64, f64, i8)> =
        edges.windows(2).zip(&crossings.signs).map(|(w, &s)| (w[0], w[1], s)).collect();
    if intervals[0].2 < 0 {
        intervals.insert(0, (0.0, 0.0, 1));
    }
    if intervals.last().is_some_and(|i| i.2 > 0) {
        intervals.push((1.0, 1.0, -1));
    }
    if intervals.windows(2).any(|w| w[0].2 == w[1].2) {
        return Err(Error::Structural("crossing signs do not alternate".into()));
    }
    let mut partition = vec![0.0];
    let mut junctions = Vec::new();
    let mut values = Vec::new();
    for pair in intervals.chunks(2) {
        let (plus, minus) = (pair[0], pair[1]);
        let junction = plus.1;
        junctions.push(junction);
        let side = if junction >= 1.0 { Side::Left } else { Side::Right };
        values.push(rho.eval(junction, side));
        partition.push(minus.1);
    }
    let mut breaks = Vec::new();
    let mut merged = vec![values[0]];
    for (i, &v) in values.iter().enumerate().skip(1) {
        let b = partition[i];
        if v == *merged.last().unwrap() || b <= 0.0 || b >= 1.0 {
            continue;
        }
        breaks.push(b);
        merged.push(v);
    }
    Ok(StepCompanion { density: Density::step(breaks, merged)?, partition, junctions })
}

/// `int f` over `[a, b]` on a grid aware of the breakpoints of `profiles`.
fn integrate(a: f64, b: f64, breaks: &[f64], f: impl FnMut(f64) -> f64) -> f64 {
    let cells = ((QUAD_CELLS as f64 * (b - a)).ceil() as usize).max(4);
    quad::composite(&quad::union_grid(a, b, cells, breaks), f)
}

/// `d lambda_n / d tau = -lambda_n int delta u_n^2` for `rho + tau * delta`.
pub fn keller_sensitivity(rho: &Density, n: usize, delta: &Coefficient, opts: &PruferOptions) -> Result<f64> {
    let pair = prufer::eigenpair(rho, n, opts)?;
    Ok(keller_of(&pair, delta))
}

pub fn keller_of(pair: &Eigenpair, delta: &Coefficient) -> f64 {
    let breaks = profile::merge_points(&[pair.density().breakpoints(), delta.breakpoints()]);
    -pair.lambda * integrate(0.0, 1.0, &breaks, |x| delta.value(x) * pair.u(x).powi(2))
}

/// `tau * rho + (1 - tau) * companion`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyFamily {
    pub rho: Density,
    pub companion: Density,
}

impl HomotopyFamily {
    pub fn new(rho: Density, companion: Density) -> Self {
        HomotopyFamily { rho, companion }
    }

    pub fn at(&self, tau: f64) -> Result<Density> {
        Density::blend(&self.rho, &self.companion, tau)
    }

    fn breaks(&self) -> Vec<f64> {
        profile::merge_points(&[self.rho.breakpoints(), self.companion.breakpoints()])
    }

    /// `d rho_hat / d tau = rho - companion`.
    fn velocity(&self, x: f64) -> f64 {
        self.rho.value(x) - self.companion.value(x)
    }

    /// `int_a^b (rho - L)(u_m^2 - u_n^2)`.
    fn weighted(&self, un: &Eigenpair, um: &Eigenpair, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        integrate(a, b, &self.breaks(), |x| self.velocity(x) * (um.u(x).powi(2) - un.u(x).powi(2)))
    }
}

/// Right-hand side of `d/dtau (lambda_n / lambda_m) = (lambda_n / lambda_m) int (rho - L)(u_m^2 - u_n^2)`.
pub fn ratio_derivative(family: &HomotopyFamily, n: usize, m: usize, tau: f64, opts: &PruferOptions) -> Result<f64> {
    let d = family.at(tau)?;
    let (un, um) = rayon::join(|| prufer::eigenpair(&d, n, opts), || prufer::eigenpair(&d, m, opts));
    let (un, um) = (un?, um?);
    Ok(un.lambda / um.lambda * family.weighted(&un, &um, 0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub prufer: PruferOptions,
    /// Step of the central difference in `tau`.
    pub fd_step: f64,
    /// Largest allowed per-interval integral before a finding is recorded.
    pub interval_tol: f64,
    pub crossing_resolution: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { prufer: PruferOptions::default(), fd_step: 1e-5, interval_tol: 1e-10, crossing_resolution: 2048 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomotopyPoint {
    pub tau: f64,
    pub lambda_n: f64,
    pub lambda_m: f64,
    pub ratio: f64,
    pub d_formula: f64,
    pub d_fd: f64,
    /// Per-interval integrals over the companion's own partition.
    pub fixed_intervals: Vec<f64>,
    /// Per-interval integrals over the partition rebuilt from the crossings at this `tau`.
    pub moving_intervals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomotopyCurve {
    pub n: usize,
    pub m: usize,
    pub points: Vec<HomotopyPoint>,
    /// Sign-condition violations beyond tolerance, as text.
    pub findings: Vec<String>,
}

impl HomotopyCurve {
    /// Largest `d_formula` over the sweep.
    pub fn max_derivative(&self) -> f64 {
        self.points.iter().map(|p| p.d_formula).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_interval_integral(&self) -> f64 {
        self.points.iter().flat_map(|p| p.fixed_intervals.iter()).copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "tau,lambda_n,lambda_m,ratio,d_formula,d_fd")?;
        for p in &self.points {
            writeln!(w, "{},{},{},{},{},{}", p.tau, p.lambda_n, p.lambda_m, p.ratio, p.d_formula, p.d_fd)?;
        }
        Ok(())
    }
}

/// Pair-union partition of the companion rule applied to a crossing set.
fn pair_partition(set: &CrossingSet) -> Vec<f64> {
    let mut signs = set.signs.clone();
    let mut x = set.x.clone();
    if signs[0] < 0 {
        signs.insert(0, 1);
        x.insert(0, 0.0);
    }
    if *signs.last().unwrap() > 0 {
        signs.push(-1);
        x.push(1.0);
    }
    let mut edges = vec![0.0];
    edges.extend(x);
    edges.push(1.0);
    let mut out: Vec<f64> = edges.iter().step_by(2).copied().collect();
    if *out.last().unwrap() < 1.0 {
        out.push(1.0);
    }
    out
}

fn ratio_at(family: &HomotopyFamily, n: usize, m: usize, tau: f64, opts: &PruferOptions) -> Result<f64> {
    let d = family.at(tau)?;
    Ok(prufer::eigenvalue(&d, n, opts)?.lambda / prufer::eigenvalue(&d, m, opts)?.lambda)
}

/// Eigenvalues, ratio and both derivative estimates along `tau_points`.
pub fn homotopy_sweep(
    rho: &Density,
    companion: &StepCompanion,
    n: usize,
    m: usize,
    tau_points: &[f64],
    opts: &SweepOptions,
) -> Result<HomotopyCurve> {
    if m == 0 || m >= n {
        return Err(Error::ModeIndex { n: m, min: 1 });
    }
    let family = HomotopyFamily::new(rho.clone(), companion.density.clone());
    let consecutive = n == m + 1;
    let results: Vec<Result<HomotopyPoint>> = tau_points
        .par_iter()
        .map(|&tau| {
            let d = family.at(tau)?;
            let un = prufer::eigenpair(&d, n, &opts.prufer)?;
            let um = prufer::eigenpair(&d, m, &opts.prufer)?;
            let ratio = un.lambda / um.lambda;
            let d_formula = ratio * family.weighted(&un, &um, 0.0, 1.0);
            let eps = opts.fd_step;
            let d_fd = (ratio_at(&family, n, m, tau + eps, &opts.prufer)? - ratio_at(&family, n, m, tau - eps, &opts.prufer)?)
                / (2.0 * eps);
            let (fixed_intervals, moving_intervals) = if consecutive {
                let fixed =
                    companion.partition.windows(2).map(|w| family.weighted(&un, &um, w[0], w[1])).collect();
                let moving = crossings_of(&un, &um, opts.crossing_resolution)
                    .map(|set| pair_partition(&set).windows(2).map(|w| family.weighted(&un, &um, w[0], w[1])).collect())
                    .unwrap_or_default();
                (fixed, moving)
            } else {
                (Vec::new(), Vec::new())
            };
            Ok(HomotopyPoint {
                tau,
                lambda_n: un.lambda,
                lambda_m: um.lambda,
                ratio,
                d_formula,
                d_fd,
                fixed_intervals,
                moving_intervals,
            })
        })
        .collect();
    let points = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut findings = Vec::new();
    for p in &points {
        for (label, values) in [("companion partition", &p.fixed_intervals), ("moving partition", &p.moving_intervals)] {
            for (i, &v) in values.iter().enumerate() {
                if v > opts.interval_tol {
                    findings.push(format!("tau = {}: interval {i} of the {label} integrates to {v:e}", p.tau));
                }
            }
        }
    }
    Ok(HomotopyCurve { n, m, points, findings })
}

/// `tau = 0, 1/(k-1), ..., 1`.
pub fn tau_grid(k: usize) -> Vec<f64> {
    let k = k.max(2);
    (0..k).map(|i| i as f64 / (k - 1) as f64).collect()
}

/// `prod_{k=m+1}^{n} lambda_k(L_k) / lambda_{k-1}(L_k)` with `L_k` the companion
/// of the pair `(k, k-1)`: the chained comparison value for `lambda_n / lambda_m`.
pub fn chained_companion_ratio(rho: &Density, n: usize, m: usize, opts: &CrossingOptions) -> Result<f64> {
    if m == 0 || m >= n {
        return Err(Error::ModeIndex { n: m, min: 1 });
    }
    ((m + 1)..=n)
        .into_par_iter()
        .map(|k| {
            let set = crossing_points(rho, k, opts)?;
            let l = build_step_companion(rho, &set)?.density;
            let hi = prufer::eigenvalue(&l, k, &opts.prufer)?.lambda;
            let lo = prufer::eigenvalue(&l, k - 1, &opts.prufer)?.lambda;
            Ok(hi / lo)
        })
        .collect::<Result<Vec<f64>>>()
        .map(|v| v.iter().product())
}
