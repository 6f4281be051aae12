//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Some criteria encode claims that fail numerically on seeded instances; they
//! are listed in `EXPECTED_FAIL`, still print FAIL, and do not fail the
//! process. Any other outcome differing from the expectation (including an
//! expected failure that starts passing) exits nonzero.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rayon::prelude::*;
use ratiolab_core::comparison::{
    build_step_companion, crossing_points, homotopy_sweep, keller_sensitivity, tau_grid, CrossingOptions, HomotopyCurve,
    SweepOptions,
};
use ratiolab_core::prufer::{self, eigenpair, PruferOptions};
use ratiolab_core::transform::{Variant, Verdict};
use ratiolab_core::{
    fd, step_exact, BoundarySpec, Coefficient, CoefficientSet, Density, FamilyKind, Profile, Side,
};
use ratiolab_verifier::config::{FamilyName, FamilySpec, SuiteConfig};
use ratiolab_verifier::generate::{generate_family, Instance};
use ratiolab_verifier::report::Status;
use ratiolab_verifier::suite::{self, companion_comparisons, string_spectrum};

const SEED: u64 = 20_240_601;

/// Criteria whose claims have seeded counterexamples, each confirmed by an
/// independent solver: single-well densities above the quadratic ratio bound
/// (3), homotopy ratios that increase near the companion end (5), and
/// negative phase derivatives on step densities (7).
const EXPECTED_FAIL: &[u32] = &[3, 5, 7];

struct Check {
    id: u32,
    passed: bool,
    detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn family(name: FamilyName, count: usize, seed: u64) -> Vec<Instance> {
    generate_family(&FamilySpec::new(name, count), seed, count).expect("generation")
}

fn decreasing_steps() -> Vec<Instance> {
    family(FamilyName::MonotoneStep, 50, SEED)
}

fn criterion_1() -> Check {
    let one = Density::constant(1.0).unwrap();
    let exact: Vec<f64> = (1..=10).map(|n| (n as f64 * PI).powi(2)).collect();
    let err = |ev: &[f64]| ev.iter().zip(&exact).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max);
    let shoot = err(&prufer::eigenvalues(&one, 10, &PruferOptions::default()).unwrap());
    let step = err(&step_exact::exact_eigenvalues(&Density::step(vec![], vec![1.0]).unwrap(), 10).unwrap());
    let oracle = err(&fd::oracle_eigenvalues_richardson(
        &CoefficientSet::string(one),
        BoundarySpec::dirichlet(),
        10,
        4096,
    )
    .unwrap());
    Check {
        id: 1,
        passed: shoot <= 1e-8 && step <= 1e-8 && oracle <= 1e-7,
        detail: format!("shooting {shoot:.1e}, transfer {step:.1e}, fd {oracle:.1e}"),
    }
}

fn criterion_2(steps: &[Instance]) -> Check {
    let res: Vec<_> = steps.par_iter().map(|i| string_spectrum(i.rho(), 8, 8192)).collect();
    let mut fd_dev: f64 = 0.0;
    let mut step_dev: f64 = 0.0;
    let mut errors = 0;
    for r in res {
        match r {
            Ok(s) => {
                fd_dev = fd_dev.max(s.oracle_deviation);
                step_dev = step_dev.max(s.step_deviation.unwrap_or(f64::INFINITY));
            }
            Err(_) => errors += 1,
        }
    }
    Check {
        id: 2,
        passed: errors == 0 && step_dev <= 1e-10 && fd_dev <= 1e-6,
        detail: format!("{} steps: vs transfer {step_dev:.1e}, vs fd {fd_dev:.1e}, {errors} solver errors", steps.len()),
    }
}

fn criterion_3() -> Check {
    let mut cfg = SuiteConfig::new(
        SEED,
        8,
        2048,
        vec![
            FamilySpec::new(FamilyName::Constant, 5),
            FamilySpec::new(FamilyName::SingleWellStep, 100),
            FamilySpec::new(FamilyName::SingleWellSmooth, 100),
        ],
    );
    cfg.workers = None;
    let out = suite::run_suite(&cfg).unwrap();
    let r = &out.report;
    let col = |name: &str| r.columns.iter().position(|c| c == name).unwrap();
    let (worst, abs) = (col("worst_slack"), col("max_abs_slack"));
    let mut violations = [0usize; 2];
    let mut max_slack = [f64::NEG_INFINITY; 2];
    let mut constant_err: f64 = 0.0;
    let mut flat_nonconstant = 0;
    let mut quarantined = 0;
    for row in &r.rows {
        if row.status == Status::Quarantined {
            quarantined += 1;
            continue;
        }
        match row.family {
            FamilyName::Constant => constant_err = constant_err.max(row.metrics[abs].unwrap()),
            f => {
                let k = usize::from(f == FamilyName::SingleWellSmooth);
                let s = row.metrics[worst].unwrap();
                max_slack[k] = max_slack[k].max(s);
                if s > 1e-6 {
                    violations[k] += 1;
                }
                if row.metrics[abs].unwrap() <= 1e-8 {
                    flat_nonconstant += 1;
                }
            }
        }
    }
    Check {
        id: 3,
        passed: violations == [0, 0] && constant_err <= 1e-8 && flat_nonconstant == 0 && quarantined == 0,
        detail: format!(
            "steps: {}/100 above bound (max slack {:.3e}); smooth: {}/100 (max slack {:.3e}); constant slack {constant_err:.1e}; \
             {flat_nonconstant} nonconstant at equality; {quarantined} quarantined",
            violations[0], max_slack[0], violations[1], max_slack[1]
        ),
    }
}

fn criterion_4(steps: &[Instance]) -> Check {
    let margins: Vec<Option<f64>> = steps
        .par_iter()
        .map(|i| {
            companion_comparisons(i.rho(), 5)
                .ok()
                .map(|c| c.iter().map(|c| c.ratio - c.companion_ratio).fold(f64::NEG_INFINITY, f64::max))
        })
        .collect();
    let errors = margins.iter().filter(|m| m.is_none()).count();
    let worst = margins.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let bad = margins.iter().flatten().filter(|m| **m > 1e-8).count();
    Check {
        id: 4,
        passed: errors == 0 && bad == 0,
        detail: format!("{bad}/{} above companion ratio, largest ratio - companion {worst:.3e}, {errors} errors", steps.len()),
    }
}

fn sweeps(steps: &[Instance]) -> Vec<Result<Vec<HomotopyCurve>, String>> {
    let taus = tau_grid(21);
    steps
        .par_iter()
        .map(|i| {
            (2..=5)
                .map(|n| {
                    let set = crossing_points(i.rho(), n, &CrossingOptions::default())?;
                    let l = build_step_companion(i.rho(), &set)?;
                    homotopy_sweep(i.rho(), &l, n, n - 1, &taus, &SweepOptions::default())
                })
                .collect::<ratiolab_core::Result<Vec<_>>>()
                .map_err(|e| e.to_string())
        })
        .collect()
}

fn criterion_5(curves: &[Result<Vec<HomotopyCurve>, String>]) -> Check {
    let errors = curves.iter().filter(|c| c.is_err()).count();
    let ok: Vec<&Vec<HomotopyCurve>> = curves.iter().flatten().collect();
    let deriv = ok.iter().flat_map(|c| c.iter()).map(|c| c.max_derivative()).fold(f64::NEG_INFINITY, f64::max);
    let interval = ok.iter().flat_map(|c| c.iter()).map(|c| c.max_interval_integral()).fold(f64::NEG_INFINITY, f64::max);
    let bad_deriv = ok.iter().filter(|c| c.iter().any(|c| c.max_derivative() > 1e-8)).count();
    let bad_interval = ok.iter().filter(|c| c.iter().any(|c| c.max_interval_integral() > 1e-10)).count();
    Check {
        id: 5,
        passed: errors == 0 && bad_deriv == 0 && bad_interval == 0,
        detail: format!(
            "derivative: {bad_deriv}/{} instances above 1e-8 (max {deriv:.3e}); interval integrals: {bad_interval}/{} above 1e-10 \
             (max {interval:.3e}); {errors} errors",
            ok.len(),
            ok.len()
        ),
    }
}

fn criterion_6(curves: &[Result<Vec<HomotopyCurve>, String>]) -> Check {
    // Ratio derivative along 10 homotopies, against the central difference of the ratio.
    let mut ratio_err: f64 = 0.0;
    let mut used = 0;
    for c in curves.iter().flatten().take(10) {
        used += 1;
        for p in c.iter().flat_map(|c| &c.points) {
            ratio_err = ratio_err.max(rel(p.d_formula, p.d_fd));
        }
    }
    // Eigenvalue sensitivity on 10 smooth single wells, against the central difference of lambda_n.
    let opts = PruferOptions::with_tolerances(1e-12, 1e-14);
    let eps = 1e-5;
    let delta = Coefficient::family(FamilyKind::Sine, vec![0.0, 0.3, 3.0, 0.2]).unwrap();
    let smooth = family(FamilyName::SingleWellSmooth, 10, SEED + 6);
    let keller: Vec<f64> = smooth
        .par_iter()
        .map(|i| {
            let rho = i.rho();
            let shifted = |s: f64| Density::new(rho.coefficient().plus(s, &delta)).unwrap();
            let (up, down) = (shifted(eps), shifted(-eps));
            (1..=4)
                .map(|n| {
                    let k = keller_sensitivity(rho, n, &delta, &opts).unwrap();
                    let fd = (prufer::eigenvalue(&up, n, &opts).unwrap().lambda
                        - prufer::eigenvalue(&down, n, &opts).unwrap().lambda)
                        / (2.0 * eps);
                    rel(k, fd)
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let keller_err = keller.iter().copied().fold(0.0, f64::max);
    Check {
        id: 6,
        passed: used == 10 && ratio_err <= 1e-4 && keller_err <= 1e-4,
        detail: format!("ratio derivative on {used} homotopies {ratio_err:.1e}; eigenvalue sensitivity on {} densities {keller_err:.1e}", keller.len()),
    }
}

/// Unwrapped phase `atan2(z rho^{1/4} y, rho^{-1/4} y')` at `x` by fixed-step RK4
/// on `y'' = -z^2 rho y`, `y(0) = 0`, `y'(0) = rho(0)^{1/4}`.
fn rk4_phase(rho: &Density, z: f64, x_end: f64, steps_per_unit: usize) -> f64 {
    let rhs = |x: f64, y: [f64; 2]| [y[1], -z * z * rho.value(x) * y[0]];
    let mut y = [0.0, rho.eval(0.0, Side::Right).powf(0.25)];
    let n = (x_end * steps_per_unit as f64).ceil() as usize;
    let h = x_end / n as f64;
    let mut phase = 0.0f64;
    for i in 0..n {
        let x = i as f64 * h;
        let k1 = rhs(x, y);
        let k2 = rhs(x + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
        let k3 = rhs(x + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
        let k4 = rhs(x + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for j in 0..2 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        let r = rho.value(x + h);
        let raw = (z * r.powf(0.25) * y[0]).atan2(r.powf(-0.25) * y[1]);
        let mut d = raw - phase.rem_euclid(2.0 * PI);
        while d > PI {
            d -= 2.0 * PI;
        }
        while d < -PI {
            d += 2.0 * PI;
        }
        phase += d;
    }
    phase
}

fn criterion_7() -> Check {
    let opts = PruferOptions::default();
    let steps = family(FamilyName::MonotoneStep, 10, SEED + 7)
        .into_iter()
        .chain(family(FamilyName::SingleWellStep, 10, SEED + 7))
        .collect::<Vec<_>>();
    let xs: Vec<f64> = (1..=20).map(|i| i as f64 / 20.0).collect();
    let zs: Vec<f64> = (1..=20).map(|i| 1.5 * i as f64).collect();
    let minima: Vec<(f64, usize)> = steps
        .par_iter()
        .map(|i| {
            let mut min = f64::INFINITY;
            let mut negative = 0;
            for &z in &zs {
                let trail = prufer::prufer_integrate(i.rho(), z, &opts).unwrap();
                for &x in &xs {
                    let t = trail.theta_dot(x).unwrap();
                    min = min.min(t);
                    if t < -1e-10 {
                        negative += 1;
                    }
                }
            }
            (min, negative)
        })
        .collect();
    let min = minima.iter().map(|m| m.0).fold(f64::INFINITY, f64::min);
    let bad_densities = minima.iter().filter(|m| m.1 > 0).count();
    let bad_points: usize = minima.iter().map(|m| m.1).sum();

    let smooth = [
        Density::family(FamilyKind::Linear, vec![2.0, -1.0]).unwrap(),
        Density::family(FamilyKind::Exponential, vec![1.0, 1.2]).unwrap(),
        Density::family(FamilyKind::Sine, vec![2.0, 0.7, 3.0, 0.4]).unwrap(),
        Density::family(FamilyKind::Quadratic, vec![0.8, 4.0, 0.35]).unwrap(),
    ];
    let fine = PruferOptions::with_tolerances(1e-12, 1e-14);
    let cases: Vec<(usize, f64, f64)> =
        (0..smooth.len()).flat_map(|k| [2.0, 5.0, 11.0].into_iter().flat_map(move |z| [0.5, 1.0].map(|x| (k, z, x)))).collect();
    let errs: Vec<f64> = cases
        .par_iter()
        .map(|&(k, z, x)| {
            let rho = &smooth[k];
            let theta = |z: f64| rk4_phase(rho, z, x, 20_000) / z;
            let central = |h: f64| (theta(z + h) - theta(z - h)) / (2.0 * h);
            let reference = (4.0 * central(5e-4) - central(1e-3)) / 3.0;
            rel(prufer::theta_dot(rho, z, x, &fine).unwrap(), reference)
        })
        .collect();
    let smooth_err = errs.iter().copied().fold(0.0, f64::max);
    Check {
        id: 7,
        passed: bad_points == 0 && smooth_err <= 1e-6,
        detail: format!(
            "steps: {bad_points}/{} grid points below -1e-10 on {bad_densities}/{} densities (min {min:.3e}); \
             smooth vs finite differences {smooth_err:.1e} over {} points",
            steps.len() * 400,
            steps.len(),
            errs.len()
        ),
    }
}

/// Zeros, interlacing, crossing placement and Wronskian sign via
/// `crossing_points`, plus strict decrease of `u_n / u_{n-1}` between zeros of
/// `u_{n-1}`.
fn pair_failures(rho: &Density, n: usize) -> Vec<String> {
    let opts = CrossingOptions::default();
    let mut out = Vec::new();
    if let Err(e) = crossing_points(rho, n, &opts) {
        out.push(e.to_string());
    }
    let (un, um) = (eigenpair(rho, n, &opts.prufer).unwrap(), eigenpair(rho, n - 1, &opts.prufer).unwrap());
    if un.zeros().len() != n - 1 {
        out.push(format!("mode {n} has {} zeros", un.zeros().len()));
    }
    let mut edges = vec![0.0];
    edges.extend(um.zeros());
    edges.push(1.0);
    for w in edges.windows(2) {
        let pts = 400;
        let ratios: Vec<f64> = (1..pts).map(|k| w[0] + (w[1] - w[0]) * k as f64 / pts as f64).map(|x| un.u(x) / um.u(x)).collect();
        if ratios.windows(2).any(|r| !(r[1] < r[0])) {
            out.push(format!("mode {n}: u_n/u_(n-1) not strictly decreasing on ({}, {})", w[0], w[1]));
        }
    }
    out
}

fn criterion_8(steps: &[Instance]) -> Check {
    let smooth = family(FamilyName::SingleWellSmooth, 20, SEED + 8);
    let densities: Vec<&Density> = steps.iter().chain(&smooth).map(|i| i.rho()).collect();
    let jobs: Vec<(usize, usize)> = (0..densities.len()).flat_map(|k| (2..=8).map(move |n| (k, n))).collect();
    let failures: Vec<String> =
        jobs.par_iter().flat_map_iter(|&(k, n)| pair_failures(densities[k], n).into_iter().map(move |f| format!("#{k} {f}"))).collect();
    Check {
        id: 8,
        passed: failures.is_empty(),
        detail: format!(
            "{} pairs on {} densities, {} failures{}",
            jobs.len(),
            densities.len(),
            failures.len(),
            failures.first().map(|f| format!(", first: {f}")).unwrap_or_default()
        ),
    }
}

fn criterion_9() -> Check {
    let wells = family(FamilyName::SymmetricSingleWell, 20, SEED + 9);
    let barriers = family(FamilyName::SymmetricSingleBarrier, 20, SEED + 9);
    let spectra = |set: &[Instance]| -> Vec<Vec<f64>> {
        set.par_iter().map(|i| string_spectrum(i.rho(), 8, 2048).unwrap()).map(|s| s.eigenvalues).collect()
    };
    let mut well_slack = f64::NEG_INFINITY;
    for ev in spectra(&wells) {
        for n in 2..=ev.len() {
            well_slack = well_slack.max(ev[n - 1] / ev[0] / (n * n) as f64 - 1.0);
        }
    }
    let barrier_min = spectra(&barriers).iter().map(|ev| ev[1] / ev[0]).fold(f64::INFINITY, f64::min);
    Check {
        id: 9,
        passed: well_slack <= 1e-6 && barrier_min >= 4.0 - 1e-8,
        detail: format!("wells: max lambda_n/(n^2 lambda_1) - 1 = {well_slack:.3e}; barriers: min lambda_2/lambda_1 = {barrier_min:.6}"),
    }
}

fn transform_verdicts(variant: Variant) -> Vec<Verdict> {
    let cfg = SuiteConfig::new(
        SEED,
        6,
        4096,
        vec![FamilySpec::new(FamilyName::Theorem4Instances, 20).with_variant(variant)],
    );
    suite::run_transform(&cfg).unwrap().1
}

fn criterion_10(barrier: &[Verdict], nonneg: &[Verdict]) -> Check {
    let summarize = |v: &[Verdict]| {
        let bad: Vec<&Verdict> = v
            .iter()
            .filter(|v| {
                !(v.hypotheses_hold
                    && v.error.is_none()
                    && v.h_single_well_at_half == Some(true)
                    && v.final_classification.is_some_and(|c| c.shape.is_single_well())
                    && v.ratio_invariance.is_some_and(|r| r <= 1e-5)
                    && v.bound_holds(1e-6))
            })
            .collect();
        let inv = v.iter().filter_map(|v| v.ratio_invariance).fold(0.0, f64::max);
        let slack = v.iter().filter_map(|v| v.max_slack).fold(f64::NEG_INFINITY, f64::max);
        (bad.len(), inv, slack)
    };
    let (a, b) = (summarize(barrier), summarize(nonneg));
    Check {
        id: 10,
        passed: barrier.len() == 20 && nonneg.len() == 20 && a.0 == 0 && b.0 == 0,
        detail: format!(
            "single-barrier q: {}/{} failing (invariance {:.1e}, max slack {:.3e}); q >= 0: {}/{} failing (invariance {:.1e}, max slack {:.3e})",
            a.0,
            barrier.len(),
            a.1,
            a.2,
            b.0,
            nonneg.len(),
            b.1,
            b.2
        ),
    }
}

fn criterion_11(barrier: &[Verdict]) -> Check {
    let worst = barrier.iter().map(|v| v.f_left_violation.max(v.f_right_violation)).fold(0.0, f64::max);
    let bad = barrier.iter().filter(|v| v.f_left_violation > 1e-9 || v.f_right_violation > 1e-9).count();
    Check {
        id: 11,
        passed: !barrier.is_empty() && bad == 0,
        detail: format!("{bad}/{} instances with a monotonicity violation above 1e-9 (max {worst:.1e})", barrier.len()),
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let steps = decreasing_steps();
    let mut checks = vec![criterion_1(), criterion_2(&steps), criterion_3(), criterion_4(&steps)];
    let curves = sweeps(&steps);
    checks.push(criterion_5(&curves));
    checks.push(criterion_6(&curves));
    checks.push(criterion_7());
    checks.push(criterion_8(&steps));
    checks.push(criterion_9());
    let barrier = transform_verdicts(Variant::SingleBarrierPotential);
    let nonneg = transform_verdicts(Variant::NonnegativePotential);
    checks.push(criterion_10(&barrier, &nonneg));
    checks.push(criterion_11(&barrier));

    let mut unexpected = 0;
    for c in &checks {
        let expected_fail = EXPECTED_FAIL.contains(&c.id);
        let tag = match (c.passed, expected_fail) {
            (true, false) => "",
            (false, true) => " [expected: known counterexample]",
            (true, true) => " [UNEXPECTED PASS]",
            (false, false) => " [UNEXPECTED]",
        };
        if c.passed == expected_fail {
            unexpected += 1;
        }
        println!("criterion {}: {} {}{tag}", c.id, if c.passed { "PASS" } else { "FAIL" }, c.detail);
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    println!("{passed}/{} criteria pass, {unexpected} unexpected outcomes, {:.1}s", checks.len(), start.elapsed().as_secs_f64());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
