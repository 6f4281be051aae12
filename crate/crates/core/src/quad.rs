//! Composite Gauss-Legendre quadrature.
//!
//! Nodes never touch cell endpoints, so integrands with jumps at cell
//! boundaries need no one-sided bookkeeping.

const NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];

/// Five-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss5(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    r * NODES.iter().zip(WEIGHTS).map(|(t, w)| w * f(c + r * t)).sum::<f64>()
}

/// Sum of five-point rules over consecutive cells of the sorted `nodes`.
pub fn composite(nodes: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
    nodes.windows(2).filter(|w| w[1] > w[0]).map(|w| gauss5(w[0], w[1], &mut f)).sum()
}

/// Sorted union of `cells` uniform cells on `[a, b]` and the extra points inside.
pub fn union_grid(a: f64, b: f64, cells: usize, extra: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=cells).map(|i| a + (b - a) * i as f64 / cells as f64).collect();
    g.extend(extra.iter().copied().filter(|&x| x > a && x < b));
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}
