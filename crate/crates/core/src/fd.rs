//! Second-order finite-difference oracle for `-(p u')' + q u = lambda rho u`.
//!
//! Linear elements with a lumped mass: the pencil is
//! `K_ij = int p phi_i' phi_j'`, `Q_ii = int q phi_i`, `M_ii = int rho phi_i`,
//! with `p` replaced by its harmonic cell mean (exact for the flux across a
//! jump). Coefficient integrals are exact up to Gauss quadrature and respect
//! breakpoints inside cells, so jumps need not sit on mesh nodes. A Neumann
//! end keeps its node with a half hat, which is the mirrored ghost-point
//! scheme. Eigenvalues come from Sturm-sequence bisection on the symmetric
//! tridiagonal `M^{-1/2} (K + Q) M^{-1/2}`.

use rayon::prelude::*;

use crate::density::{BoundarySpec, CoefficientSet};
use crate::error::{Error, Result};
use crate::profile::Profile;
use crate::quad;

/// Minimum cells per requested mode.
pub const CELLS_PER_MODE: usize = 16;

#[derive(Debug, Clone)]
pub struct MeshProblem {
    pub cells: usize,
    pub boundary: BoundarySpec,
    /// Mesh nodes carrying unknowns.
    pub nodes: Vec<f64>,
    /// Diagonal of `K + Q`.
    pub stiffness_diag: Vec<f64>,
    /// Off-diagonal of `K`, `stiffness_off[i]` couples unknowns `i` and `i + 1`.
    pub stiffness_off: Vec<f64>,
    pub mass: Vec<f64>,
    diag: Vec<f64>,
    off: Vec<f64>,
}

/// Integrals of `f` against the two hats of every cell, split at `breaks`.
fn hat_moments(f: &dyn Profile, x: &[f64], breaks: &[f64]) -> Vec<[f64; 2]> {
    cell_integrals(x, breaks, |a, b, x0, h| {
        let left = quad::gauss5(a, b, |t| f.value(t) * (x0 + h - t) / h);
        let right = quad::gauss5(a, b, |t| f.value(t) * (t - x0) / h);
        [left, right]
    })
}

/// Per-cell sums of `piece(a, b, cell_start, cell_width)` over the sub-intervals
/// cut out by `breaks`.
fn cell_integrals(x: &[f64], breaks: &[f64], piece: impl Fn(f64, f64, f64, f64) -> [f64; 2] + Sync) -> Vec<[f64; 2]> {
    (0..x.len() - 1)
        .into_par_iter()
        .map(|c| {
            let (x0, x1) = (x[c], x[c + 1]);
            let start = breaks.partition_point(|&b| b <= x0);
            let inner = breaks[start..].iter().take_while(|&&b| b < x1);
            let mut edges = vec![x0];
            edges.extend(inner);
            edges.push(x1);
            edges.windows(2).fold([0.0; 2], |acc, w| {
                let v = piece(w[0], w[1], x0, x1 - x0);
                [acc[0] + v[0], acc[1] + v[1]]
            })
        })
        .collect()
}

impl MeshProblem {
    pub fn new(problem: &CoefficientSet, boundary: BoundarySpec, cells: usize) -> Result<Self> {
        if cells < 2 {
            return Err(Error::MeshTooCoarse { cells, n_max: 1, required: 2 });
        }
        let (a, b) = boundary.interval;
        let h = (b - a) / cells as f64;
        let x: Vec<f64> = (0..=cells).map(|i| if i == cells { b } else { a + h * i as f64 }).collect();
        let rho_breaks = problem.rho.breakpoints();
        let q_breaks = problem.q.breakpoints();
        let p_breaks = problem.p.breakpoints();

        let flux: Vec<f64> = cell_integrals(&x, &p_breaks, |s, e, _, _| [quad::gauss5(s, e, |t| 1.0 / problem.p.value(t)), 0.0])
            .into_iter()
            .map(|inv| 1.0 / inv[0])
            .collect();
        let m = hat_moments(&problem.rho, &x, &rho_breaks);
        let q = hat_moments(&problem.q, &x, &q_breaks);

        let n = cells + 1;
        let mut kd = vec![0.0; n];
        let mut ko = vec![0.0; cells];
        let mut md = vec![0.0; n];
        for c in 0..cells {
            kd[c] += flux[c];
            kd[c + 1] += flux[c];
            ko[c] = -flux[c];
            md[c] += m[c][0];
            md[c + 1] += m[c][1];
            kd[c] += q[c][0];
            kd[c + 1] += q[c][1];
        }
        let first = usize::from(boundary.dirichlet_left());
        let last = if boundary.dirichlet_right() { n - 1 } else { n };
        let nodes = x[first..last].to_vec();
        let stiffness_diag = kd[first..last].to_vec();
        let stiffness_off = ko[first..last - 1].to_vec();
        let mass = md[first..last].to_vec();
        if let Some(i) = mass.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::InvalidCoefficient(format!("non-positive lumped mass at node {}", nodes[i])));
        }
        let diag: Vec<f64> = stiffness_diag.iter().zip(&mass).map(|(k, m)| k / m).collect();
        let off: Vec<f64> =
            stiffness_off.iter().enumerate().map(|(i, k)| k / (mass[i] * mass[i + 1]).sqrt()).collect();
        Ok(MeshProblem { cells, boundary, nodes, stiffness_diag, stiffness_off, mass, diag, off })
    }

    pub fn unknowns(&self) -> usize {
        self.diag.len()
    }

    /// Number of discrete eigenvalues strictly below `lambda`.
    pub fn count_below(&self, lambda: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.diag.len() {
            let coupling = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] / d };
            d = self.diag[i] - lambda - coupling;
            if d == 0.0 {
                d = -tiny;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            (lo.min(self.diag[i] - r), hi.max(self.diag[i] + r))
        })
    }

    /// The k-th discrete eigenvalue, `k >= 1`.
    pub fn eigenvalue(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::ModeIndex { n: k, min: 1 });
        }
        if k > self.unknowns() {
            return Err(Error::MeshTooCoarse { cells: self.cells, n_max: k, required: k + 1 });
        }
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 4.0 * f64::EPSILON * scale.max(mid.abs()) || mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) >= k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn eigenvalues(&self, n_max: usize) -> Result<Vec<f64>> {
        (1..=n_max).into_par_iter().map(|k| self.eigenvalue(k)).collect()
    }

    /// Nodal values of the k-th eigenvector by inverse iteration, normalized
    /// so that `sum M u^2 = 1` and the first nonzero entry is positive.
    pub fn eigenvector(&self, k: usize) -> Result<Vec<f64>> {
        let lambda = self.eigenvalue(k)?;
        let n = self.unknowns();
        let shift = lambda * (1.0 + 1e-10) + 1e-12;
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
        for _ in 0..4 {
            v = self.solve_shifted(shift, &v);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
        let mut u: Vec<f64> = v.iter().zip(&self.mass).map(|(x, m)| x / m.sqrt()).collect();
        let sign = u.iter().find(|x| x.abs() > 1e-8).map_or(1.0, |x| x.signum());
        let norm = u.iter().zip(&self.mass).map(|(x, m)| m * x * x).sum::<f64>().sqrt();
        u.iter_mut().for_each(|x| *x *= sign / norm);
        Ok(u)
    }

    /// Thomas solve of `(A - shift I) x = rhs`.
    fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let guard = |x: f64| if x.abs() < 1e-300 { 1e-300 } else { x };
        let mut denom = guard(self.diag[0] - shift);
        c[0] = if n > 1 { self.off[0] / denom } else { 0.0 };
        d[0] = rhs[0] / denom;
        for i in 1..n {
            denom = guard(self.diag[i] - shift - self.off[i - 1] * c[i - 1]);
            c[i] = if i + 1 < n { self.off[i] / denom } else { 0.0 };
            d[i] = (rhs[i] - self.off[i - 1] * d[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        d
    }
}

fn check_mesh(n_max: usize, cells: usize) -> Result<()> {
    if n_max == 0 {
        return Err(Error::ModeIndex { n: 0, min: 1 });
    }
    if n_max > cells.saturating_sub(1) {
        return Err(Error::MeshTooCoarse { cells, n_max, required: n_max + 1 });
    }
    let required = CELLS_PER_MODE * n_max;
    if cells < required {
        return Err(Error::MeshTooCoarse { cells, n_max, required });
    }
    Ok(())
}

/// `lambda_1..lambda_{n_max}` of the discrete problem on `cells` cells.
pub fn oracle_eigenvalues(problem: &CoefficientSet, boundary: BoundarySpec, n_max: usize, cells: usize) -> Result<Vec<f64>> {
    check_mesh(n_max, cells)?;
    MeshProblem::new(problem, boundary, cells)?.eigenvalues(n_max)
}

/// Richardson extrapolation `(4 lambda(2N) - lambda(N)) / 3`.
pub fn oracle_eigenvalues_richardson(
    problem: &CoefficientSet,
    boundary: BoundarySpec,
    n_max: usize,
    cells: usize,
) -> Result<Vec<f64>> {
    let coarse = oracle_eigenvalues(problem, boundary, n_max, cells)?;
    let fine = oracle_eigenvalues(problem, boundary, n_max, 2 * cells)?;
    Ok(coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect())
}

/// Locations where consecutive nodal values (with the Dirichlet ends as zeros)
/// change sign, by linear interpolation.
pub fn nodal_sign_changes(nodes: &[f64], u: &[f64]) -> Vec<f64> {
    let pts: Vec<(f64, f64)> = nodes.iter().copied().zip(u.iter().copied()).filter(|p| p.1 != 0.0).collect();
    pts.windows(2)
        .filter(|w| w[0].1.signum() != w[1].1.signum())
        .map(|w| {
            let ((x0, u0), (x1, u1)) = (w[0], w[1]);
            x0 + (x1 - x0) * u0 / (u0 - u1)
        })
        .collect()
}
