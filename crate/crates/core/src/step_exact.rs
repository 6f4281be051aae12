//! Exact Dirichlet eigenvalues of `-y'' = lambda rho y` for piecewise-constant
//! `rho`, by 2x2 transfer matrices.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::density::{Coefficient, Density};
use crate::error::{Error, Result};
use crate::roots;

/// Propagator of `(y, y')` across one constant piece.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix(pub [[f64; 2]; 2]);

impl TransferMatrix {
    pub const IDENTITY: TransferMatrix = TransferMatrix([[1.0, 0.0], [0.0, 1.0]]);

    /// Piece of length `len` with `k = sqrt(lambda * rho)`.
    pub fn piece(k: f64, len: f64) -> Self {
        let t = k * len;
        let (s, c) = t.sin_cos();
        TransferMatrix([[c, len * sinc(t)], [-k * s, c]])
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// `self * rhs`: apply `rhs` first.
    pub fn then(&self, next: &TransferMatrix) -> TransferMatrix {
        let (a, b) = (&next.0, &self.0);
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        TransferMatrix(out)
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }
}

fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        let t2 = t * t;
        1.0 - t2 / 6.0 * (1.0 - t2 / 20.0)
    } else {
        t.sin() / t
    }
}

/// `(start, length, value)` of every piece.
fn pieces(step: &Density) -> Result<Vec<(f64, f64, f64)>> {
    let Coefficient::Step { breaks, values } = step.coefficient() else {
        return Err(Error::InvalidCoefficient("transfer matrices need a step density".into()));
    };
    let mut edges = Vec::with_capacity(breaks.len() + 2);
    edges.push(0.0);
    edges.extend_from_slice(breaks);
    edges.push(1.0);
    Ok(edges.windows(2).zip(values).map(|(w, &v)| (w[0], w[1] - w[0], v)).collect())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::NonPositiveSpectral(lambda));
    }
    Ok(())
}

/// Product of the piece propagators over `[0, 1]`.
pub fn transfer(step: &Density, lambda: f64) -> Result<TransferMatrix> {
    check_lambda(lambda)?;
    Ok(pieces(step)?
        .iter()
        .fold(TransferMatrix::IDENTITY, |m, &(_, len, v)| m.then(&TransferMatrix::piece((lambda * v).sqrt(), len))))
}

/// `y(1; lambda)` for `y(0) = 0`, `y'(0) = 1`.
pub fn characteristic(step: &Density, lambda: f64) -> Result<f64> {
    Ok(transfer(step, lambda)?.0[0][1])
}

/// Number of zeros of `y(.; lambda)` in `(0, 1]`.
pub fn zero_count(step: &Density, lambda: f64) -> Result<usize> {
    check_lambda(lambda)?;
    Ok(count_zeros(&pieces(step)?, lambda))
}

fn count_zeros(pieces: &[(f64, f64, f64)], lambda: f64) -> usize {
    let mut v = [0.0f64, 1.0];
    let mut count = 0i64;
    for &(_, len, rho) in pieces {
        let k = (lambda * rho).sqrt();
        // y = A sin(alpha + k t) on this piece.
        let alpha = v[0].atan2(v[1] / k);
        let end = alpha + k * len;
        count += ((end / PI).floor() - (alpha / PI).floor()) as i64;
        v = TransferMatrix::piece(k, len).apply(v);
    }
    count.max(0) as usize
}

/// The first `n_max` Dirichlet eigenvalues, each to relative `1e-12` or better.
pub fn exact_eigenvalues(step: &Density, n_max: usize) -> Result<Vec<f64>> {
    let pcs = pieces(step)?;
    let (min, max) = step.bounds();
    (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let target = (n as f64 * PI).powi(2);
            let (lo, hi) = (target / max * (1.0 - 1e-9), target / min * (1.0 + 1e-9));
            if count_zeros(&pcs, lo) >= n || count_zeros(&pcs, hi) < n {
                return Err(Error::RootCap(format!("mode {n} outside its comparison bracket")));
            }
            let mid = roots::bisect_predicate(|l| count_zeros(&pcs, l) >= n, lo, hi, 1e-9);
            let (a, b) = (mid * (1.0 - 2e-9), mid * (1.0 + 2e-9));
            let f = |l: f64| characteristic(step, l);
            match roots::brent(f, a, b, 1e-15 * mid, 200) {
                Ok(l) => Ok(l),
                // Counting alone already pins the root; finish by bisection.
                Err(_) => Ok(roots::bisect_predicate(|l| count_zeros(&pcs, l) >= n, a, b, 1e-15)),
            }
        })
        .collect()
}
