mod common;

use std::f64::consts::PI;

use common::{rel, simpson};
use ratiolab_core::comparison::{
    build_step_companion, chained_companion_ratio, crossing_points, homotopy_sweep, keller_sensitivity, ratio_derivative,
    tau_grid, CrossingOptions, HomotopyFamily, SweepOptions,
};
use ratiolab_core::prufer::{eigenpair, eigenvalue, PruferOptions};
use ratiolab_core::{Coefficient, Density, FamilyKind};

fn linear_two_minus_x() -> Density {
    Density::family(FamilyKind::Linear, vec![2.0, -1.0]).unwrap()
}

fn close_all(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len(), "{a:?} vs {b:?}");
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() < tol, "{a:?} vs {b:?}");
    }
}

#[test]
fn uniform_crossings_for_second_mode() {
    let set = crossing_points(&Density::constant(1.0).unwrap(), 2, &CrossingOptions::default()).unwrap();
    close_all(&set.y, &[0.5], 1e-10);
    assert!(set.z.is_empty());
    close_all(&set.x, &[1.0 / 3.0, 2.0 / 3.0], 1e-9);
    assert_eq!(set.signs, vec![1, -1, 1]);
    assert!(set.wronskian.iter().all(|p| p.1 < 0.0));
}

#[test]
fn uniform_crossings_for_third_mode() {
    // |sin 3 pi x| = |sin 2 pi x| reduces to |2 cos pi x| = |4 cos^2 pi x - 1|,
    // solved by cos pi x = +-cos(pi/5), +-cos(2 pi/5).
    let set = crossing_points(&Density::constant(1.0).unwrap(), 3, &CrossingOptions::default()).unwrap();
    close_all(&set.y, &[1.0 / 3.0, 2.0 / 3.0], 1e-10);
    close_all(&set.z, &[0.5], 1e-10);
    close_all(&set.x, &[0.2, 0.4, 0.6, 0.8], 1e-9);
    set.verify().unwrap();
}

#[test]
fn linear_density_crossings_stable_under_resolution_doubling() {
    let rho = linear_two_minus_x();
    for n in 2..=5 {
        let coarse = crossing_points(&rho, n, &CrossingOptions { resolution: 2048, ..Default::default() }).unwrap();
        let fine = crossing_points(&rho, n, &CrossingOptions { resolution: 4096, ..Default::default() }).unwrap();
        close_all(&coarse.x, &fine.x, 1e-10);
        assert_eq!(coarse.signs, fine.signs);
    }
}

#[test]
fn crossings_match_dense_sampling() {
    let rho = linear_two_minus_x();
    let set = crossing_points(&rho, 3, &CrossingOptions::default()).unwrap();
    let opts = PruferOptions::default();
    let (un, um) = (eigenpair(&rho, 3, &opts).unwrap(), eigenpair(&rho, 2, &opts).unwrap());
    let samples = 100_000;
    let mut found = Vec::new();
    let g = |x: f64| un.u(x).powi(2) - um.u(x).powi(2);
    let mut prev = g(1e-9);
    for i in 1..samples {
        let x = i as f64 / samples as f64;
        let v = g(x);
        if v.signum() != prev.signum() && v != 0.0 {
            found.push(x);
        }
        prev = v;
    }
    close_all(&set.x, &found, 1.5 / samples as f64);
}

#[test]
fn crossing_points_rejects_first_mode() {
    assert!(crossing_points(&Density::constant(1.0).unwrap(), 1, &CrossingOptions::default()).is_err());
}

#[test]
fn companion_of_constant_is_constant() {
    let one = Density::constant(1.0).unwrap();
    let set = crossing_points(&one, 3, &CrossingOptions::default()).unwrap();
    let l = build_step_companion(&one, &set).unwrap();
    assert_eq!(l.density, Density::step(vec![], vec![1.0]).unwrap());
}

#[test]
fn companion_of_decreasing_linear_density() {
    let rho = linear_two_minus_x();
    let set = crossing_points(&rho, 2, &CrossingOptions::default()).unwrap();
    let l = build_step_companion(&rho, &set).unwrap();
    let Coefficient::Step { breaks, values } = l.density.coefficient() else { panic!("not a step") };
    assert!(values.len() >= 2);
    assert!(values.windows(2).all(|w| w[0] > w[1]));
    for (v, j) in values.iter().zip(&l.junctions) {
        assert!((v - (2.0 - j)).abs() < 1e-14);
    }
    assert!(breaks.iter().all(|b| set.x.contains(b)));
}

#[test]
fn constant_step_is_its_own_companion_with_equal_ratio() {
    let rho = Density::step(vec![], vec![3.0]).unwrap();
    let set = crossing_points(&rho, 2, &CrossingOptions::default()).unwrap();
    let l = build_step_companion(&rho, &set).unwrap().density;
    assert_eq!(l, rho);
    let opts = PruferOptions::default();
    let r = |d: &Density| eigenvalue(d, 2, &opts).unwrap().lambda / eigenvalue(d, 1, &opts).unwrap().lambda;
    assert!(rel(r(&rho), r(&l)) < 1e-14);
}

#[test]
fn keller_examples_on_uniform_string() {
    let one = Density::constant(1.0).unwrap();
    let opts = PruferOptions::default();
    let k = keller_sensitivity(&one, 1, &Coefficient::constant(1.0), &opts).unwrap();
    assert!(rel(k, -PI * PI) < 1e-10);
    for n in 2..=4 {
        let k = keller_sensitivity(&one, n, &Coefficient::constant(1.0), &opts).unwrap();
        assert!(rel(k, -(n as f64 * PI).powi(2)) < 1e-10);
    }
    let sine = Coefficient::family(FamilyKind::Sine, vec![0.0, 1.0, 2.0, 0.0]).unwrap();
    let reference = simpson(0.0, 1.0, 20_000, |x| (2.0 * PI * x).sin() * 2.0 * (PI * x).sin().powi(2));
    assert!(reference.abs() < 1e-14);
    let k = keller_sensitivity(&one, 1, &sine, &opts).unwrap();
    assert!(k.abs() < 1e-12, "{k}");
}

#[test]
fn keller_matches_central_difference() {
    let opts = PruferOptions::with_tolerances(1e-12, 1e-14);
    let eps = 1e-5;
    let cases = [
        (Density::constant(1.0).unwrap(), Coefficient::constant(1.0)),
        (linear_two_minus_x(), Coefficient::family(FamilyKind::Sine, vec![0.0, 0.3, 3.0, 0.2]).unwrap()),
        (Density::step(vec![0.4], vec![3.0, 1.0]).unwrap(), Coefficient::step(vec![0.7], vec![0.5, -1.0]).unwrap()),
    ];
    for (rho, delta) in cases {
        for n in 1..=3 {
            let k = keller_sensitivity(&rho, n, &delta, &opts).unwrap();
            let shifted = |s: f64| Density::new(rho.coefficient().plus(s, &delta)).unwrap();
            let fd = (eigenvalue(&shifted(eps), n, &opts).unwrap().lambda
                - eigenvalue(&shifted(-eps), n, &opts).unwrap().lambda)
                / (2.0 * eps);
            assert!(rel(k, fd) < 1e-4, "n={n}: {k} vs {fd}");
        }
    }
}

#[test]
fn ratio_derivative_vanishes_when_density_equals_companion() {
    let l = Density::step(vec![0.5], vec![2.0, 1.0]).unwrap();
    let family = HomotopyFamily::new(l.clone(), l);
    for tau in [0.0, 0.5, 1.0] {
        assert_eq!(ratio_derivative(&family, 2, 1, tau, &PruferOptions::default()).unwrap(), 0.0);
    }
}

#[test]
fn ratio_derivative_for_linear_density_is_negative_and_matches_difference() {
    let rho = linear_two_minus_x();
    let set = crossing_points(&rho, 2, &CrossingOptions::default()).unwrap();
    let l = build_step_companion(&rho, &set).unwrap();
    let family = HomotopyFamily::new(rho, l.density);
    let opts = PruferOptions::with_tolerances(1e-12, 1e-14);
    let d = ratio_derivative(&family, 2, 1, 0.5, &opts).unwrap();
    assert!(d <= 0.0);
    let ratio = |t: f64| {
        let d = family.at(t).unwrap();
        eigenvalue(&d, 2, &opts).unwrap().lambda / eigenvalue(&d, 1, &opts).unwrap().lambda
    };
    let fd = (ratio(0.5 + 1e-5) - ratio(0.5 - 1e-5)) / 2e-5;
    assert!(rel(d, fd) < 1e-4, "{d} vs {fd}");
}

#[test]
fn sweep_of_uniform_string_is_flat() {
    let one = Density::constant(1.0).unwrap();
    let set = crossing_points(&one, 2, &CrossingOptions::default()).unwrap();
    let l = build_step_companion(&one, &set).unwrap();
    let curve = homotopy_sweep(&one, &l, 2, 1, &tau_grid(5), &SweepOptions::default()).unwrap();
    for p in &curve.points {
        assert!((p.ratio - 4.0).abs() < 1e-10);
        assert!(p.d_formula.abs() < 1e-12);
    }
    assert!(curve.findings.is_empty());
}

#[test]
fn sweep_of_linear_density_is_nonincreasing() {
    let rho = linear_two_minus_x();
    let set = crossing_points(&rho, 2, &CrossingOptions::default()).unwrap();
    let l = build_step_companion(&rho, &set).unwrap();
    let curve = homotopy_sweep(&rho, &l, 2, 1, &tau_grid(21), &SweepOptions::default()).unwrap();
    assert_eq!(curve.points.len(), 21);
    assert!(curve.points.windows(2).all(|w| w[1].ratio <= w[0].ratio));
    let opts = PruferOptions::default();
    let first = &curve.points[0];
    let last = curve.points.last().unwrap();
    let of = |d: &Density| eigenvalue(d, 2, &opts).unwrap().lambda / eigenvalue(d, 1, &opts).unwrap().lambda;
    assert!(rel(first.ratio, of(&l.density)) < 1e-12);
    assert!(rel(last.ratio, of(&rho)) < 1e-12);
    assert!(last.ratio <= first.ratio);
    assert!(curve.max_derivative() <= 0.0);
    assert!(curve.max_interval_integral() <= 1e-10);
    assert!(curve.findings.is_empty(), "{:?}", curve.findings);
    for p in &curve.points {
        assert!(rel(p.d_formula, p.d_fd) < 1e-4);
    }
    let mut buf = Vec::new();
    curve.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 22);
}

#[test]
fn chained_ratio_bounds_non_consecutive_pair() {
    let rho = linear_two_minus_x();
    let opts = CrossingOptions::default();
    let chained = chained_companion_ratio(&rho, 3, 1, &opts).unwrap();
    let l3 = eigenvalue(&rho, 3, &opts.prufer).unwrap().lambda;
    let l1 = eigenvalue(&rho, 1, &opts.prufer).unwrap().lambda;
    assert!(l3 / l1 <= chained);
    let mut product = 1.0;
    for k in [2, 3] {
        let set = crossing_points(&rho, k, &opts).unwrap();
        let l = build_step_companion(&rho, &set).unwrap().density;
        product *= eigenvalue(&l, k, &opts.prufer).unwrap().lambda / eigenvalue(&l, k - 1, &opts.prufer).unwrap().lambda;
    }
    assert!(rel(product, chained) < 1e-14);
    assert!(chained_companion_ratio(&rho, 2, 2, &opts).is_err());
}

#[test]
fn homotopy_ratio_increases_near_companion_for_two_piece_step() {
    // Reference ratios from closed-form piecewise sinusoids with bracketed roots.
    let rho = Density::step(vec![0.3807361010792014], vec![5.6679792816129995, 0.8710380895270665]).unwrap();
    let set = crossing_points(&rho, 3, &CrossingOptions::default()).unwrap();
    let l = build_step_companion(&rho, &set).unwrap();
    let taus = [0.0, 0.05, 0.1, 1.0];
    let curve = homotopy_sweep(&rho, &l, 3, 2, &taus, &SweepOptions::default()).unwrap();
    let reference = [2.5106015875950725, 2.5119279619263675, 2.5111881505143683, 1.7925604923273972];
    for (p, r) in curve.points.iter().zip(reference) {
        assert!(rel(p.ratio, r) < 1e-10, "tau {}: {} vs {r}", p.tau, p.ratio);
    }
    assert!(curve.points[1].ratio > curve.points[0].ratio);
    assert!(curve.points[0].d_formula > 0.04 && rel(curve.points[0].d_formula, curve.points[0].d_fd) < 1e-6);
    assert!(curve.points[3].ratio < curve.points[0].ratio);
}
