//! Reduction of `-(p y')' + q y = lambda rho y`, `y(0) = y(1) = 0`, to a
//! string equation.
//!
//! With `h` solving `(p h')' = q h`, `h(1/2) = 1`, `h'(1/2) = 0` and positive
//! on `[0, 1]`, the substitution `y = h u` and the change of variable
//! `z = (1/c) int_0^x h^{-2}` give `-(p u_z)_z = c^2 lambda h^4 rho u`. The
//! change `t = (1/sigma) int_0^z 1/p` then yields the string
//! `-u_tt = sigma^2 c^2 lambda (h^4 p rho) u`. Both steps only rescale the
//! spectrum, so eigenvalue ratios carry over.
//!
//! Coefficients are carried through the chain as piecewise-linear tables:
//! every knot of the `x` grid (uniform plus breakpoints, doubled at jumps) is
//! mapped exactly to its image in `z` and `t`.

use serde::{Deserialize, Serialize};

use crate::classify::{self, classify, Classification, ClassifyOptions};
use crate::density::{BoundarySpec, Coefficient, CoefficientSet, Density};
use crate::error::{Error, Result};
use crate::fd;
use crate::interp::Pchip;
use crate::ode::{self, OdeOptions, System, Trail};
use crate::profile::{self, Product, Profile, Side};
use crate::prufer::{self, PruferOptions};
use crate::quad;
use crate::roots;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformOptions {
    pub ode: OdeOptions,
    /// Uniform cells of the knot grid carried through the chain.
    pub resolution: usize,
    /// Cells of the finite-difference oracle (Richardson with twice as many).
    pub mesh: usize,
    pub n_max: usize,
    /// Tolerance of the shape checks.
    pub classify_tol: f64,
    /// Points of each sampled `F(endpoint, .)` curve.
    pub lambda_points: usize,
    pub prufer: PruferOptions,
}

impl Default for TransformOptions {
    fn default() -> Self {
        TransformOptions {
            ode: OdeOptions { rtol: 1e-11, atol: 1e-13, ..OdeOptions::default() },
            resolution: 4096,
            mesh: 2048,
            n_max: 6,
            classify_tol: 1e-9,
            lambda_points: 100,
            prufer: PruferOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Half {
    /// `[0, 1/2]`, endpoint `0`.
    Left,
    /// `[1/2, 1]`, endpoint `1`.
    Right,
}

impl Half {
    fn endpoint(self) -> f64 {
        match self {
            Half::Left => 0.0,
            Half::Right => 1.0,
        }
    }
}

/// `(h, p h')` with `(p h')' = (q - lambda rho) h`.
struct FluxSystem<'a> {
    p: &'a Density,
    q: &'a Coefficient,
    rho: Option<&'a Density>,
    lambda: f64,
}

impl System<2> for FluxSystem<'_> {
    fn rhs(&self, x: f64, y: &[f64; 2], side: Side) -> [f64; 2] {
        let weight = self.rho.map_or(0.0, |r| self.lambda * r.eval(x, side));
        [y[1] / self.p.eval(x, side), (self.q.eval(x, side) - weight) * y[0]]
    }
}

fn half_trail(sys: &FluxSystem, half: Half, opts: &OdeOptions) -> Result<Trail<2>> {
    let mut stops = vec![sys.p.breakpoints(), sys.q.breakpoints()];
    if let Some(r) = sys.rho {
        stops.push(r.breakpoints());
    }
    ode::integrate(sys, 0.5, [1.0, 0.0], half.endpoint(), &profile::merge_points(&stops), opts)
}

/// The solution of `(p h')' = q h`, `h(1/2) = 1`, `h'(1/2) = 0`.
#[derive(Debug, Clone)]
pub struct HFunction {
    p: Density,
    kinks: Vec<f64>,
    left: Trail<2>,
    right: Trail<2>,
    /// `int_0^1 h^{-2}`.
    pub c: f64,
    pub classification: Classification,
}

impl HFunction {
    fn state(&self, x: f64, side: Side) -> [f64; 2] {
        if x < 0.5 || (x == 0.5 && side == Side::Left) {
            self.left.eval(x, side)
        } else {
            self.right.eval(x, side)
        }
    }

    pub fn h(&self, x: f64) -> f64 {
        self.state(x, Side::Right)[0]
    }

    /// `p h'`, continuous across jumps of `p`.
    pub fn flux(&self, x: f64) -> f64 {
        self.state(x, Side::Right)[1]
    }

    /// `(x, h, p h')` on `grid`.
    pub fn sample(&self, grid: &[f64]) -> Vec<(f64, f64, f64)> {
        grid.iter().map(|&x| (x, self.h(x), self.flux(x))).collect()
    }

    /// `h' <= 0` on `[0, 1/2]` and `h' >= 0` on `[1/2, 1]`, up to `tol`.
    pub fn is_single_well_at_half(&self, tol: f64) -> bool {
        classify::is_single_well_at(self, 0.5, tol, 4096)
    }

    /// Whether `p h'` is nonincreasing and then nondecreasing on `[0, 1/2]`.
    pub fn flux_single_well_on_left_half(&self, tol: f64) -> bool {
        let v: Vec<f64> = (0..=2048).map(|i| self.flux(0.5 * i as f64 / 2048.0)).collect();
        let k = v.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |m| m.0);
        v[..=k].windows(2).all(|w| w[1] - w[0] <= tol) && v[k..].windows(2).all(|w| w[1] - w[0] >= -tol)
    }
}

impl Profile for HFunction {
    fn eval(&self, x: f64, side: Side) -> f64 {
        self.state(x, side)[0]
    }
    fn slope(&self, x: f64, side: Side) -> f64 {
        self.state(x, side)[1] / self.p.eval(x, side)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.kinks.clone()
    }
}

fn h_minimum(trails: &[&Trail<2>]) -> (f64, f64) {
    trails
        .iter()
        .flat_map(|t| t.pieces.iter())
        .flat_map(|p| {
            let mid = 0.5 * (p.lo() + p.hi());
            [(p.x_start, p.y_start[0]), (mid, p.eval(mid)[0]), (p.x_end(), p.y_end[0])]
        })
        .fold((f64::NAN, f64::INFINITY), |acc, (x, h)| if h < acc.1 { (x, h) } else { acc })
}

pub fn solve_h(p: &Density, q: &Coefficient, opts: &TransformOptions) -> Result<HFunction> {
    let sys = FluxSystem { p, q, rho: None, lambda: 0.0 };
    let left = half_trail(&sys, Half::Left, &opts.ode)?;
    let right = half_trail(&sys, Half::Right, &opts.ode)?;
    let (x, min) = h_minimum(&[&left, &right]);
    if !(min > 0.0) {
        return Err(Error::Hypothesis { what: format!("h vanishes (h = {min:e})"), x });
    }
    let kinks = profile::merge_points(&[p.breakpoints(), q.breakpoints()]);
    let mut hf = HFunction {
        p: p.clone(),
        kinks,
        left,
        right,
        c: 0.0,
        classification: Classification { shape: classify::Shape::Other, transition: None, sign_change: None },
    };
    let grid = quad::union_grid(0.0, 1.0, opts.resolution, &hf.kinks);
    hf.c = quad::composite(&grid, |x| hf.h(x).powi(-2));
    hf.classification = classify(&hf, ClassifyOptions::with_tolerance(opts.classify_tol));
    Ok(hf)
}

/// `F(endpoint, lambda) = p h' / h` where `h` solves `(p h')' = (q - lambda rho) h`
/// with the same data at `1/2`.
pub fn f_eval(problem: &CoefficientSet, lambda: f64, half: Half, opts: &TransformOptions) -> Result<f64> {
    let sys = FluxSystem { p: &problem.p, q: &problem.q, rho: Some(&problem.rho), lambda };
    let trail = half_trail(&sys, half, &opts.ode)?;
    let end = trail.last_state(half == Half::Right);
    let scale = trail.pieces.iter().map(|p| p.y_end[0].abs()).fold(1.0, f64::max);
    let (_, min) = h_minimum(&[&trail]);
    if end[0] <= 1e-8 * scale || min <= 0.0 {
        return Err(Error::PoleProximity { lambda, h: end[0] });
    }
    Ok(end[1] / end[0])
}

fn oracle_first(problem: &CoefficientSet, boundary: BoundarySpec, mesh: usize) -> Result<f64> {
    Ok(fd::oracle_eigenvalues_richardson(problem, boundary, 1, mesh)?[0])
}

/// First Neumann eigenvalue on the half interval.
pub fn neumann_first(problem: &CoefficientSet, half: Half, opts: &TransformOptions) -> Result<f64> {
    let b = match half {
        Half::Left => BoundarySpec::neumann_left_half(),
        Half::Right => BoundarySpec::neumann_right_half(),
    };
    oracle_first(problem, b, opts.mesh)
}

/// First eigenvalue with `y(0) = y'(1/2) = 0` (left) or `y'(1/2) = y(1) = 0` (right).
pub fn mixed_first(problem: &CoefficientSet, half: Half, opts: &TransformOptions) -> Result<f64> {
    let b = match half {
        Half::Left => BoundarySpec::hat(),
        Half::Right => BoundarySpec::tilde(),
    };
    oracle_first(problem, b, opts.mesh)
}

/// The first Neumann eigenvalue as the root of `F(endpoint, .)` below the
/// first mixed eigenvalue `eta`.
pub fn neumann_first_by_f(problem: &CoefficientSet, half: Half, eta: f64, opts: &TransformOptions) -> Result<f64> {
    let sign = if half == Half::Left { 1.0 } else { -1.0 };
    let g = |l: f64| f_eval(problem, l, half, opts).map(|f| sign * f);
    // Rayleigh quotient bound: every eigenvalue exceeds min(q / rho).
    let ratio = profile::bounds(&Quotient(&problem.q, &problem.rho), 1024).0;
    let lo = ratio.min(eta) - 1.0 - 0.1 * ratio.abs();
    if g(lo)? >= 0.0 {
        return Err(Error::RootCap(format!("F does not change sign above lambda = {lo}")));
    }
    let mut hi = None;
    for k in 1..=40 {
        let cand = eta - (eta - lo) * 0.5f64.powi(k);
        if g(cand).is_ok_and(|v| v > 0.0) {
            hi = Some(cand);
            break;
        }
    }
    let hi = hi.ok_or_else(|| Error::RootCap(format!("no positive F below eta = {eta}")))?;
    roots::brent(g, lo, hi, 1e-13 * hi.abs().max(1.0), 200)
}

struct Quotient<'a>(&'a Coefficient, &'a Density);

impl Profile for Quotient<'_> {
    fn eval(&self, x: f64, side: Side) -> f64 {
        self.0.eval(x, side) / self.1.eval(x, side)
    }
    fn slope(&self, x: f64, side: Side) -> f64 {
        let (a, b) = (self.0.eval(x, side), self.1.eval(x, side));
        (self.0.slope(x, side) * b - a * self.1.slope(x, side)) / (b * b)
    }
    fn breakpoints(&self) -> Vec<f64> {
        profile::merge_points(&[self.0.breakpoints(), self.1.breakpoints()])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDiagnostics {
    pub mu_hat: f64,
    pub mu_tilde: f64,
    pub eta_hat: f64,
    pub eta_tilde: f64,
    /// Roots of `F(0, .)` and `F(1, .)`, cross-checking `mu_hat` and `mu_tilde`.
    pub mu_hat_f: Option<f64>,
    pub mu_tilde_f: Option<f64>,
    /// `(lambda, F(0, lambda))` below `eta_hat`.
    pub f_left: Vec<(f64, f64)>,
    /// `(lambda, F(1, lambda))` below `eta_tilde`.
    pub f_right: Vec<(f64, f64)>,
}

impl SpectralDiagnostics {
    /// Largest decrease between consecutive samples of `F(0, .)`.
    pub fn left_violation(&self) -> f64 {
        self.f_left.windows(2).map(|w| w[0].1 - w[1].1).fold(0.0, f64::max)
    }

    /// Largest increase between consecutive samples of `F(1, .)`.
    pub fn right_violation(&self) -> f64 {
        self.f_right.windows(2).map(|w| w[1].1 - w[0].1).fold(0.0, f64::max)
    }

    pub fn neumann_positive(&self) -> bool {
        self.mu_hat.min(self.mu_tilde) > 0.0
    }
}

fn f_curve(problem: &CoefficientSet, half: Half, mu: f64, eta: f64, opts: &TransformOptions) -> Vec<(f64, f64)> {
    let gap = (eta - mu).abs().max(1e-3 * eta.abs().max(1.0));
    let lo = mu.min(0.0) - gap;
    let hi = eta - 0.02 * (eta - lo);
    let k = opts.lambda_points.max(2);
    (0..k)
        .filter_map(|i| {
            let l = lo + (hi - lo) * i as f64 / (k - 1) as f64;
            f_eval(problem, l, half, opts).ok().map(|f| (l, f))
        })
        .collect()
}

pub fn diagnostics(problem: &CoefficientSet, opts: &TransformOptions) -> Result<SpectralDiagnostics> {
    let mu_hat = neumann_first(problem, Half::Left, opts)?;
    let mu_tilde = neumann_first(problem, Half::Right, opts)?;
    let eta_hat = mixed_first(problem, Half::Left, opts)?;
    let eta_tilde = mixed_first(problem, Half::Right, opts)?;
    Ok(SpectralDiagnostics {
        mu_hat,
        mu_tilde,
        eta_hat,
        eta_tilde,
        mu_hat_f: neumann_first_by_f(problem, Half::Left, eta_hat, opts).ok(),
        mu_tilde_f: neumann_first_by_f(problem, Half::Right, eta_tilde, opts).ok(),
        f_left: f_curve(problem, Half::Left, mu_hat, eta_hat, opts),
        f_right: f_curve(problem, Half::Right, mu_tilde, eta_tilde, opts),
    })
}

/// Knot positions with one-sided values: a knot at a jump appears twice.
fn knots(profiles: &[&dyn Profile], breaks: &[f64], resolution: usize) -> Vec<(f64, Side)> {
    let grid = quad::union_grid(0.0, 1.0, resolution, breaks);
    let mut out = Vec::with_capacity(grid.len() + breaks.len());
    for &x in &grid {
        let jumps = x > 0.0 && x < 1.0 && profiles.iter().any(|f| f.eval(x, Side::Left) != f.eval(x, Side::Right));
        if jumps {
            out.push((x, Side::Left));
        }
        out.push((x, Side::Right));
    }
    out
}

fn table(pos: &[f64], values: Vec<f64>) -> Result<Density> {
    Density::table(pos.to_vec(), values)
}

/// `-(P u_z)_z = lambda_tilde W u` on `z in (0, 1)`, with `lambda_tilde = c^2 lambda`.
#[derive(Debug, Clone)]
pub struct IntermediateProblem {
    pub problem: CoefficientSet,
    pub c: f64,
    /// `(x, z(x))` at every knot.
    pub zmap: Vec<(f64, f64)>,
}

impl IntermediateProblem {
    pub fn lambda_scale(&self) -> f64 {
        self.c * self.c
    }
}

pub fn inverse_liouville(source: &CoefficientSet, h: &HFunction, opts: &TransformOptions) -> Result<IntermediateProblem> {
    let breaks = profile::merge_points(&[source.p.breakpoints(), source.q.breakpoints(), source.rho.breakpoints()]);
    let kn = knots(&[&source.p, &source.rho], &breaks, opts.resolution);
    let mut z = Vec::with_capacity(kn.len());
    let mut acc = 0.0;
    for (i, &(x, _)) in kn.iter().enumerate() {
        if i > 0 && x > kn[i - 1].0 {
            acc += quad::gauss5(kn[i - 1].0, x, |t| h.h(t).powi(-2));
        }
        z.push(acc);
    }
    let total = acc;
    z.iter_mut().for_each(|v| *v /= total);
    *z.last_mut().unwrap() = 1.0;
    if z.windows(2).zip(&kn).any(|(w, _)| w[1] < w[0]) {
        return Err(Error::Structural("z(x) is not monotone".into()));
    }
    let p: Vec<f64> = kn.iter().map(|&(x, s)| source.p.eval(x, s)).collect();
    let w: Vec<f64> = kn.iter().map(|&(x, s)| h.eval(x, s).powi(4) * source.rho.eval(x, s)).collect();
    let problem = CoefficientSet { p: table(&z, p)?, q: Coefficient::constant(0.0), rho: table(&z, w)? };
    Ok(IntermediateProblem { problem, c: total, zmap: kn.iter().map(|k| k.0).zip(z).collect() })
}

/// `-u_tt = sigma^2 lambda_tilde D u` with `D = P W` in the variable `t`.
#[derive(Debug, Clone)]
pub struct StringForm {
    pub density: Density,
    /// `int_0^1 dz / P`.
    pub sigma: f64,
    /// `t` at every knot of the intermediate problem, in the same order.
    pub t: Vec<f64>,
}

/// `int_a^b dz / P` for `P` linear from `pa` to `pb`.
fn reciprocal_linear(len: f64, pa: f64, pb: f64) -> f64 {
    let r = pb / pa - 1.0;
    if r.abs() < 1e-6 {
        len / pa * (1.0 - r / 2.0 + r * r / 3.0)
    } else {
        len * (pb / pa).ln() / (pb - pa)
    }
}

pub fn legendre(inter: &IntermediateProblem) -> Result<StringForm> {
    let (Coefficient::Table { x: z, values: p }, Coefficient::Table { values: w, .. }) =
        (inter.problem.p.coefficient(), inter.problem.rho.coefficient())
    else {
        return Err(Error::InvalidCoefficient("intermediate coefficients must be tables".into()));
    };
    let mut t = Vec::with_capacity(z.len());
    let mut acc = 0.0;
    for i in 0..z.len() {
        if i > 0 && z[i] > z[i - 1] {
            acc += reciprocal_linear(z[i] - z[i - 1], p[i - 1], p[i]);
        }
        t.push(acc);
    }
    let sigma = acc;
    t.iter_mut().for_each(|v| *v /= sigma);
    *t.last_mut().unwrap() = 1.0;
    let d: Vec<f64> = p.iter().zip(w).map(|(a, b)| a * b).collect();
    Ok(StringForm { density: table(&t, d)?, sigma, t })
}

/// The full chain for one source problem.
#[derive(Debug, Clone)]
pub struct TransformChain {
    pub source: CoefficientSet,
    pub h: HFunction,
    pub intermediate: IntermediateProblem,
    pub string: StringForm,
}

impl TransformChain {
    pub fn build(source: &CoefficientSet, opts: &TransformOptions) -> Result<Self> {
        let h = solve_h(&source.p, &source.q, opts)?;
        let intermediate = inverse_liouville(source, &h, opts)?;
        let string = legendre(&intermediate)?;
        Ok(TransformChain { source: source.clone(), h, intermediate, string })
    }

    pub fn c(&self) -> f64 {
        self.intermediate.c
    }

    pub fn sigma(&self) -> f64 {
        self.string.sigma
    }

    /// `sigma^2 c^2`: final string eigenvalues over source eigenvalues.
    pub fn scale(&self) -> f64 {
        (self.sigma() * self.c()).powi(2)
    }

    fn strict(xs: &[f64], ys: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut a = Vec::with_capacity(xs.len());
        let mut b = Vec::with_capacity(xs.len());
        for (&x, &y) in xs.iter().zip(ys) {
            if a.last().is_some_and(|&l| x <= l) {
                continue;
            }
            a.push(x);
            b.push(y);
        }
        (a, b)
    }

    /// `(x, z(x))` samples.
    pub fn zmap(&self) -> &[(f64, f64)] {
        &self.intermediate.zmap
    }

    /// `(x, t(x))` samples.
    pub fn tmap(&self) -> Vec<(f64, f64)> {
        self.intermediate.zmap.iter().map(|p| p.0).zip(self.string.t.iter().copied()).collect()
    }

    /// `x(t)` by monotone cubic interpolation of the inverse map.
    pub fn x_of_t(&self) -> Pchip {
        let (t, x): (Vec<f64>, Vec<f64>) = self.tmap().iter().map(|p| (p.1, p.0)).unzip();
        let (t, x) = Self::strict(&t, &x);
        Pchip::new(t, x)
    }

    /// `x(z)` by monotone cubic interpolation of the inverse map.
    pub fn x_of_z(&self) -> Pchip {
        let (z, x): (Vec<f64>, Vec<f64>) = self.zmap().iter().map(|p| (p.1, p.0)).unzip();
        let (z, x) = Self::strict(&z, &x);
        Pchip::new(z, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// `q` single-barrier, `p rho` single-well at `1/2`, both Neumann first eigenvalues positive.
    SingleBarrierPotential,
    /// `q >= 0`, `p rho` single-well at `1/2`.
    NonnegativePotential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypotheses {
    pub q_single_barrier: bool,
    pub q_nonnegative: bool,
    pub p_rho_single_well_at_half: bool,
    pub neumann_positive: bool,
}

impl Hypotheses {
    pub fn hold(&self, variant: Variant) -> bool {
        match variant {
            Variant::SingleBarrierPotential => {
                self.q_single_barrier && self.p_rho_single_well_at_half && self.neumann_positive
            }
            Variant::NonnegativePotential => self.q_nonnegative && self.p_rho_single_well_at_half,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub n: usize,
    pub m: usize,
    /// `(lambda_n / lambda_m) (m / n)^2 - 1`.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub variant: Variant,
    pub hypotheses: Hypotheses,
    pub hypotheses_hold: bool,
    pub mu_hat: f64,
    pub mu_tilde: f64,
    pub eta_hat: f64,
    pub eta_tilde: f64,
    pub mu_hat_f: Option<f64>,
    pub mu_tilde_f: Option<f64>,
    /// Largest monotonicity violation of the sampled `F(0, .)` and `F(1, .)`.
    pub f_left_violation: f64,
    pub f_right_violation: f64,
    pub h_positive: bool,
    pub h_classification: Option<Classification>,
    pub h_single_well_at_half: Option<bool>,
    pub flux_single_well_on_left_half: Option<bool>,
    pub final_classification: Option<Classification>,
    pub c: Option<f64>,
    pub sigma: Option<f64>,
    /// `sigma^2 c^2`.
    pub predicted_scale: Option<f64>,
    /// Mean and spread of `lambda_final / lambda_source` over the computed modes.
    pub measured_scale: Option<f64>,
    pub scale_spread: Option<f64>,
    /// Spread of `lambda_intermediate / lambda_source`, relative to its mean.
    pub intermediate_scale_spread: Option<f64>,
    pub source_eigenvalues: Vec<f64>,
    pub final_eigenvalues: Vec<f64>,
    /// Largest relative difference of `lambda_n / lambda_m` between source and final string.
    pub ratio_invariance: Option<f64>,
    pub slacks: Vec<Slack>,
    pub max_slack: Option<f64>,
    pub error: Option<String>,
}

impl Verdict {
    pub fn bound_holds(&self, tol: f64) -> bool {
        self.max_slack.is_some_and(|s| s <= tol)
    }
}

fn slacks(ev: &[f64]) -> Vec<Slack> {
    let mut out = Vec::new();
    for n in 2..=ev.len() {
        for m in 1..n {
            let r = ev[n - 1] / ev[m - 1] * (m as f64 / n as f64).powi(2) - 1.0;
            out.push(Slack { n, m, slack: r });
        }
    }
    out
}

fn spread(v: &[f64]) -> (f64, f64) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let dev = v.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max) / mean.abs();
    (mean, dev)
}

pub fn check_hypotheses(source: &CoefficientSet, diag: &SpectralDiagnostics, tol: f64) -> Hypotheses {
    let copts = ClassifyOptions::with_tolerance(tol);
    Hypotheses {
        q_single_barrier: classify(&source.q, copts).shape.is_single_barrier(),
        q_nonnegative: profile::bounds(&source.q, 4096).0 >= -tol,
        p_rho_single_well_at_half: classify::is_single_well_at(&Product(&source.p, &source.rho), 0.5, tol, 4096),
        neumann_positive: diag.neumann_positive(),
    }
}

/// Hypothesis checks, the chain, both spectra and the bound slacks.
///
/// Hypothesis failures and chain failures are recorded in the verdict; only
/// solver failures on the source problem are returned as errors.
pub fn full_pipeline(
    source: &CoefficientSet,
    variant: Variant,
    opts: &TransformOptions,
) -> Result<(Option<TransformChain>, Verdict)> {
    let diag = diagnostics(source, opts)?;
    let hypotheses = check_hypotheses(source, &diag, opts.classify_tol);
    let source_eigenvalues = fd::oracle_eigenvalues_richardson(source, BoundarySpec::dirichlet(), opts.n_max, opts.mesh)?;
    let mut v = Verdict {
        variant,
        hypotheses_hold: hypotheses.hold(variant),
        hypotheses,
        mu_hat: diag.mu_hat,
        mu_tilde: diag.mu_tilde,
        eta_hat: diag.eta_hat,
        eta_tilde: diag.eta_tilde,
        mu_hat_f: diag.mu_hat_f,
        mu_tilde_f: diag.mu_tilde_f,
        f_left_violation: diag.left_violation(),
        f_right_violation: diag.right_violation(),
        h_positive: false,
        h_classification: None,
        h_single_well_at_half: None,
        flux_single_well_on_left_half: None,
        final_classification: None,
        c: None,
        sigma: None,
        predicted_scale: None,
        measured_scale: None,
        scale_spread: None,
        intermediate_scale_spread: None,
        source_eigenvalues,
        final_eigenvalues: Vec::new(),
        ratio_invariance: None,
        slacks: Vec::new(),
        max_slack: None,
        error: None,
    };
    let chain = match TransformChain::build(source, opts) {
        Ok(c) => c,
        Err(e) => {
            v.error = Some(e.to_string());
            return Ok((None, v));
        }
    };
    v.h_positive = true;
    v.h_classification = Some(chain.h.classification);
    v.h_single_well_at_half = Some(chain.h.is_single_well_at_half(opts.classify_tol));
    v.flux_single_well_on_left_half = Some(chain.h.flux_single_well_on_left_half(opts.classify_tol));
    v.final_classification = Some(classify(&chain.string.density, ClassifyOptions::with_tolerance(opts.classify_tol)));
    v.c = Some(chain.c());
    v.sigma = Some(chain.sigma());
    v.predicted_scale = Some(chain.scale());

    match prufer::eigenvalues(&chain.string.density, opts.n_max, &opts.prufer) {
        Ok(ev) => v.final_eigenvalues = ev,
        Err(e) => {
            v.error = Some(format!("final string: {e}"));
            return Ok((Some(chain), v));
        }
    }
    let ratios: Vec<f64> = v.final_eigenvalues.iter().zip(&v.source_eigenvalues).map(|(a, b)| a / b).collect();
    let (mean, dev) = spread(&ratios);
    v.measured_scale = Some(mean);
    v.scale_spread = Some(dev);
    if let Ok(inter) =
        fd::oracle_eigenvalues_richardson(&chain.intermediate.problem, BoundarySpec::dirichlet(), opts.n_max, opts.mesh)
    {
        let r: Vec<f64> = inter.iter().zip(&v.source_eigenvalues).map(|(a, b)| a / b).collect();
        v.intermediate_scale_spread = Some(spread(&r).1);
    }
    let src = slacks(&v.source_eigenvalues);
    let fin = slacks(&v.final_eigenvalues);
    v.ratio_invariance = Some(
        src.iter().zip(&fin).map(|(a, b)| ((1.0 + a.slack) / (1.0 + b.slack) - 1.0).abs()).fold(0.0, f64::max),
    );
    v.max_slack = fin.iter().map(|s| s.slack).reduce(f64::max);
    v.slacks = fin;
    Ok((Some(chain), v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::FamilyKind;
    use std::f64::consts::PI;

    fn opts() -> TransformOptions {
        TransformOptions { resolution: 1024, mesh: 1024, ..Default::default() }
    }

    fn uniform_with_q(q: Coefficient) -> CoefficientSet {
        CoefficientSet { p: Density::constant(1.0).unwrap(), q, rho: Density::constant(1.0).unwrap() }
    }

    #[test]
    fn h_is_one_without_potential() {
        let h = solve_h(&Density::constant(1.0).unwrap(), &Coefficient::constant(0.0), &opts()).unwrap();
        assert!((h.c - 1.0).abs() < 1e-14);
        assert_eq!(h.classification.shape, classify::Shape::Constant);
        assert_eq!(h.h(0.2), 1.0);
    }

    #[test]
    fn h_is_cosh_for_constant_potential() {
        let c0: f64 = 3.0;
        let h = solve_h(&Density::constant(1.0).unwrap(), &Coefficient::constant(c0), &opts()).unwrap();
        for x in [0.0, 0.1, 0.5, 0.77, 1.0] {
            let exact = (c0.sqrt() * (x - 0.5)).cosh();
            assert!((h.h(x) - exact).abs() < 1e-10, "{x}");
        }
        assert_eq!(h.classification.shape, classify::Shape::SingleWell);
        assert!((h.classification.transition.unwrap() - 0.5).abs() < 1e-6);
        assert!(h.is_single_well_at_half(1e-12));
    }

    #[test]
    fn h_vanishing_is_reported() {
        let err = solve_h(&Density::constant(1.0).unwrap(), &Coefficient::constant(-40.0), &opts()).unwrap_err();
        assert!(matches!(err, Error::Hypothesis { .. }), "{err}");
    }

    #[test]
    fn f_closed_form_and_pole() {
        let prob = uniform_with_q(Coefficient::constant(0.0));
        assert!(f_eval(&prob, 0.0, Half::Left, &opts()).unwrap().abs() < 1e-14);
        let l: f64 = 4.0;
        let exact = l.sqrt() * (l.sqrt() / 2.0).tan();
        assert!((f_eval(&prob, l, Half::Left, &opts()).unwrap() - exact).abs() < 1e-9);
        assert!((f_eval(&prob, l, Half::Right, &opts()).unwrap() + exact).abs() < 1e-9);
        assert!(matches!(f_eval(&prob, PI * PI, Half::Left, &opts()), Err(Error::PoleProximity { .. })));
    }

    #[test]
    fn neumann_and_mixed_first() {
        let o = opts();
        let zero = uniform_with_q(Coefficient::constant(0.0));
        assert!(neumann_first(&zero, Half::Left, &o).unwrap().abs() < 1e-6);
        let shifted = uniform_with_q(Coefficient::constant(2.5));
        assert!((neumann_first(&shifted, Half::Left, &o).unwrap() - 2.5).abs() < 1e-6);
        assert!((mixed_first(&zero, Half::Left, &o).unwrap() - PI * PI).abs() < 1e-6);
        assert!((mixed_first(&zero, Half::Right, &o).unwrap() - PI * PI).abs() < 1e-6);
        assert!((mixed_first(&shifted, Half::Left, &o).unwrap() - PI * PI - 2.5).abs() < 1e-6);
        let by_f = neumann_first_by_f(&shifted, Half::Right, PI * PI + 2.5, &o).unwrap();
        assert!((by_f - 2.5).abs() < 1e-9, "{by_f}");
    }

    #[test]
    fn legendre_sigma_for_step_conductivity() {
        let src = CoefficientSet {
            p: Density::step(vec![0.5], vec![1.0, 4.0]).unwrap(),
            q: Coefficient::constant(0.0),
            rho: Density::constant(1.0).unwrap(),
        };
        let chain = TransformChain::build(&src, &opts()).unwrap();
        assert!((chain.c() - 1.0).abs() < 1e-14);
        assert!((chain.sigma() - 0.625).abs() < 1e-14);
        assert!((chain.tmap().iter().find(|p| p.0 == 0.5).unwrap().1 - 0.8).abs() < 1e-14);
        let d = &chain.string.density;
        assert!((d.eval(0.8, Side::Left) - 1.0).abs() < 1e-14);
        assert!((d.eval(0.8, Side::Right) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn identity_chain_without_potential() {
        let rho = Density::family(FamilyKind::Quadratic, vec![1.0, 2.0, 0.5]).unwrap();
        let src = CoefficientSet::string(rho.clone());
        let chain = TransformChain::build(&src, &opts()).unwrap();
        assert_eq!(chain.scale(), 1.0);
        for x in [0.1, 0.45, 0.9] {
            assert!((chain.string.density.value(x) - rho.value(x)).abs() < 1e-5);
        }
        let pc = chain.x_of_t();
        assert!((pc.eval(0.3) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn pipeline_on_tent_potential() {
        let q = Coefficient::family(FamilyKind::Power, vec![0.5, -1.0, -1.0, 0.5, 1.0, 1.0]).unwrap();
        let src = uniform_with_q(q);
        let (chain, v) = full_pipeline(&src, Variant::SingleBarrierPotential, &opts()).unwrap();
        assert!(chain.is_some());
        assert!(v.hypotheses_hold, "{v:?}");
        assert!(v.ratio_invariance.unwrap() < 1e-5, "{v:?}");
        assert!(v.scale_spread.unwrap() < 1e-5);
        assert!((v.measured_scale.unwrap() / v.predicted_scale.unwrap() - 1.0).abs() < 1e-5);
        assert!(v.intermediate_scale_spread.unwrap() < 1e-5);
        assert!(v.final_classification.unwrap().shape.is_single_well());
        assert!(v.max_slack.unwrap() < 0.0);
        assert!((v.mu_hat_f.unwrap() - v.mu_hat).abs() < 1e-6 * v.mu_hat.abs().max(1.0));
        assert!(v.f_left_violation <= 1e-9 && v.f_right_violation <= 1e-9);
    }
}
