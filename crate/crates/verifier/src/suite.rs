//! Suite runners behind the CLI subcommands.

use rayon::prelude::*;
use ratiolab_core::classify::Shape;
use ratiolab_core::comparison::{self, build_step_companion, crossing_points, homotopy_sweep, CrossingOptions, SweepOptions};
use ratiolab_core::transform::{full_pipeline, TransformOptions, Variant, Verdict};
use ratiolab_core::{classify, fd, prufer, step_exact, BoundarySpec, ClassifyOptions, Density, PruferOptions};

use crate::config::{FamilyName, SuiteConfig};
use crate::error::{Result, VerifierError};
use crate::generate::{generate_family, Instance};
use crate::report::{LongTable, Report, Row, Status};

/// Largest pair index used by the companion and homotopy checks.
pub const COMPANION_N_MAX: usize = 5;

/// A report plus its long-format side tables.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub tables: Vec<LongTable>,
}

/// All instances of the configured families, in configuration order.
pub fn generate_all(cfg: &SuiteConfig) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    for spec in &cfg.families {
        out.extend(generate_family(spec, cfg.family_seed(spec), spec.count)?);
    }
    Ok(out)
}

fn pool(cfg: &SuiteConfig) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        b = b.num_threads(w);
    }
    b.build().map_err(|e| VerifierError::Config(format!("worker pool: {e}")))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| rel(*x, *y)).fold(0.0, f64::max)
}

/// Cross-validated eigenvalues of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Largest relative gap between the two solvers (string: shooting vs
    /// finite differences; full problem: Richardson at `N` vs `2N`).
    pub oracle_deviation: f64,
    /// Largest relative gap between shooting and transfer matrices, for steps.
    pub step_deviation: Option<f64>,
}

pub fn string_spectrum(rho: &Density, n_max: usize, mesh: usize) -> ratiolab_core::Result<Spectrum> {
    let eigenvalues = prufer::eigenvalues(rho, n_max, &PruferOptions::default())?;
    let set = ratiolab_core::CoefficientSet::string(rho.clone());
    let oracle = fd::oracle_eigenvalues_richardson(&set, BoundarySpec::dirichlet(), n_max, mesh)?;
    let step_deviation = if rho.is_step() {
        Some(max_rel(&eigenvalues, &step_exact::exact_eigenvalues(rho, n_max)?))
    } else {
        None
    };
    Ok(Spectrum { oracle_deviation: max_rel(&eigenvalues, &oracle), eigenvalues, step_deviation })
}

pub fn full_spectrum(inst: &Instance, n_max: usize, mesh: usize) -> ratiolab_core::Result<Spectrum> {
    let d = BoundarySpec::dirichlet();
    let coarse = fd::oracle_eigenvalues_richardson(&inst.problem, d, n_max, mesh)?;
    let fine = fd::oracle_eigenvalues_richardson(&inst.problem, d, n_max, 2 * mesh)?;
    Ok(Spectrum { oracle_deviation: max_rel(&coarse, &fine), eigenvalues: fine, step_deviation: None })
}

/// Spectrum that passed cross-validation, or the reason for quarantine.
fn validated(inst: &Instance, cfg: &SuiteConfig) -> std::result::Result<Spectrum, String> {
    let s = if inst.family.is_string() {
        string_spectrum(inst.rho(), cfg.n_max, cfg.mesh)
    } else {
        full_spectrum(inst, cfg.n_max, cfg.mesh)
    }
    .map_err(|e| e.to_string())?;
    let tol = &cfg.tolerances;
    if !(s.oracle_deviation <= tol.prufer_vs_fd) {
        return Err(format!("solver disagreement {:e} exceeds {:e}", s.oracle_deviation, tol.prufer_vs_fd));
    }
    if let Some(d) = s.step_deviation {
        if !(d <= tol.prufer_vs_step) {
            return Err(format!("transfer-matrix disagreement {d:e} exceeds {:e}", tol.prufer_vs_step));
        }
    }
    Ok(s)
}

/// `(max slack, n, m)` over `1 <= m < n <= len` of `(lambda_n / lambda_m)(m / n)^2 - 1`.
pub fn worst_slack(ev: &[f64]) -> (f64, usize, usize) {
    let mut worst = (f64::NEG_INFINITY, 0, 0);
    for n in 2..=ev.len() {
        for m in 1..n {
            let s = ev[n - 1] / ev[m - 1] * (m as f64 / n as f64).powi(2) - 1.0;
            if s > worst.0 {
                worst = (s, n, m);
            }
        }
    }
    worst
}

/// `max |slack|` over all pairs.
pub fn max_abs_slack(ev: &[f64]) -> f64 {
    let mut out: f64 = 0.0;
    for n in 2..=ev.len() {
        for m in 1..n {
            out = out.max((ev[n - 1] / ev[m - 1] * (m as f64 / n as f64).powi(2) - 1.0).abs());
        }
    }
    out
}

/// Ratios `lambda_n / lambda_{n-1}` for the density and for the companion of
/// each consecutive pair, `n = 2..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompanionComparison {
    pub n: usize,
    pub ratio: f64,
    pub companion_ratio: f64,
}

pub fn companion_comparisons(rho: &Density, n_max: usize) -> ratiolab_core::Result<Vec<CompanionComparison>> {
    let opts = CrossingOptions::default();
    (2..=n_max)
        .into_par_iter()
        .map(|n| {
            let set = crossing_points(rho, n, &opts)?;
            let l = build_step_companion(rho, &set)?.density;
            let r = |d: &Density| -> ratiolab_core::Result<f64> {
                Ok(prufer::eigenvalue(d, n, &opts.prufer)?.lambda / prufer::eigenvalue(d, n - 1, &opts.prufer)?.lambda)
            };
            Ok(CompanionComparison { n, ratio: r(rho)?, companion_ratio: r(&l)? })
        })
        .collect()
}

fn shape_of(inst: &Instance) -> (Option<Shape>, Option<f64>) {
    let c = classify(inst.rho().coefficient(), ClassifyOptions::default());
    (Some(c.shape), c.transition)
}

fn base_row(index: usize, inst: &Instance, columns: usize) -> Row {
    let (shape, transition) = shape_of(inst);
    Row {
        index,
        family: inst.family,
        member: inst.index,
        seed: inst.seed,
        spec_hash: inst.spec_hash(),
        shape,
        transition,
        status: Status::Ok,
        assertion: None,
        passed: None,
        note: None,
        metrics: vec![None; columns],
        spec: inst.problem.clone(),
    }
}

fn quarantine(mut row: Row, why: String) -> Row {
    row.status = Status::Quarantined;
    row.note = Some(why);
    row
}

fn lambda_columns(n_max: usize) -> Vec<String> {
    (1..=n_max).map(|n| format!("lambda_{n}")).collect()
}

fn set(row: &mut Row, columns: &[String], name: &str, v: f64) {
    let i = columns.iter().position(|c| c == name).expect("known column");
    row.metrics[i] = Some(v);
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn spectra_table(cfg: &SuiteConfig, name: &str, rows: &[Row], columns: &[String]) -> LongTable {
    let mut t = LongTable::new(name, &["n", "lambda"]);
    for r in rows {
        for n in 1..=cfg.n_max {
            if let Some(v) = columns.iter().position(|c| *c == format!("lambda_{n}")).and_then(|i| r.metrics[i]) {
                t.rows.push((r.index, r.family, vec![n as f64, v]));
            }
        }
    }
    t
}

/// Cross-validated spectra only; nothing is asserted.
pub fn run_solve(cfg: &SuiteConfig) -> Result<Outcome> {
    cfg.validate()?;
    let instances = generate_all(cfg)?;
    let mut columns = lambda_columns(cfg.n_max);
    columns.extend(["oracle_deviation", "step_deviation"].map(String::from));
    let rows: Vec<Row> = pool(cfg)?.install(|| {
        instances
            .par_iter()
            .enumerate()
            .map(|(i, inst)| {
                let mut row = base_row(i, inst, columns.len());
                match validated(inst, cfg) {
                    Ok(s) => {
                        fill_spectrum(&mut row, &columns, &s);
                        row
                    }
                    Err(why) => quarantine(row, why),
                }
            })
            .collect()
    });
    let table = spectra_table(cfg, "solve_spectra", &rows, &columns);
    Ok(Outcome { report: Report::new("solve", cfg, columns, None, rows), tables: vec![table] })
}

fn fill_spectrum(row: &mut Row, columns: &[String], s: &Spectrum) {
    for (n, l) in s.eigenvalues.iter().enumerate() {
        set(row, columns, &format!("lambda_{}", n + 1), *l);
    }
    set(row, columns, "oracle_deviation", s.oracle_deviation);
    if let Some(d) = s.step_deviation {
        set(row, columns, "step_deviation", d);
    }
}

/// Bound verification over every configured family.
///
/// Asserted per family: equality for constants; the quadratic ratio bound for
/// single-well families (and, for decreasing steps, the companion inequality
/// for consecutive pairs); `lambda_2 / lambda_1 >= 4` for symmetric barriers;
/// the transformed bound for `theorem4-instances` whose hypotheses hold.
/// Asymmetric barriers are recorded without assertion.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Outcome> {
    cfg.validate()?;
    let instances = generate_all(cfg)?;
    let mut columns = lambda_columns(cfg.n_max);
    columns.extend(
        [
            "worst_slack",
            "worst_n",
            "worst_m",
            "max_abs_slack",
            "ratio_21",
            "oracle_deviation",
            "step_deviation",
            "companion_margin",
            "ratio_invariance",
            "predicted_scale",
            "measured_scale",
        ]
        .map(String::from),
    );
    let tol = cfg.tolerances;
    let rows: Vec<Row> = pool(cfg)?.install(|| {
        instances
            .par_iter()
            .enumerate()
            .map(|(i, inst)| {
                let mut row = base_row(i, inst, columns.len());
                let s = match validated(inst, cfg) {
                    Ok(s) => s,
                    Err(why) => return quarantine(row, why),
                };
                fill_spectrum(&mut row, &columns, &s);
                let ev = &s.eigenvalues;
                let (worst, wn, wm) = worst_slack(ev);
                set(&mut row, &columns, "worst_slack", worst);
                set(&mut row, &columns, "worst_n", wn as f64);
                set(&mut row, &columns, "worst_m", wm as f64);
                set(&mut row, &columns, "max_abs_slack", max_abs_slack(ev));
                let ratio_21 = ev[1] / ev[0];
                set(&mut row, &columns, "ratio_21", ratio_21);
                match inst.family {
                    FamilyName::Constant => {
                        row.assertion = Some("equality".into());
                        row.passed = Some(max_abs_slack(ev) <= tol.equality);
                    }
                    FamilyName::SingleWellStep | FamilyName::SingleWellSmooth | FamilyName::SymmetricSingleWell => {
                        row.assertion = Some("ratio-bound".into());
                        row.passed = Some(worst <= tol.bound);
                    }
                    FamilyName::MonotoneStep => {
                        let k = cfg.n_max.min(COMPANION_N_MAX);
                        match companion_comparisons(inst.rho(), k) {
                            Ok(cmp) => {
                                let margin =
                                    cmp.iter().map(|c| c.ratio - c.companion_ratio).fold(f64::NEG_INFINITY, f64::max);
                                set(&mut row, &columns, "companion_margin", margin);
                                row.assertion = Some("ratio-bound+companion".into());
                                row.passed = Some(worst <= tol.bound && margin <= tol.companion);
                            }
                            Err(e) => return quarantine(row, format!("companion: {e}")),
                        }
                    }
                    FamilyName::SymmetricSingleBarrier => {
                        row.assertion = Some("barrier-lower".into());
                        row.passed = Some(ratio_21 >= 4.0 - tol.barrier);
                    }
                    FamilyName::SingleBarrierStep => {
                        row.note = Some("observation only".into());
                    }
                    FamilyName::Theorem4Instances => {
                        let variant = inst.variant.unwrap_or(Variant::SingleBarrierPotential);
                        match pipeline(inst, variant, cfg) {
                            Ok(v) => {
                                if let Some(r) = v.ratio_invariance {
                                    set(&mut row, &columns, "ratio_invariance", r);
                                }
                                if let Some(p) = v.predicted_scale {
                                    set(&mut row, &columns, "predicted_scale", p);
                                }
                                if let Some(m) = v.measured_scale {
                                    set(&mut row, &columns, "measured_scale", m);
                                }
                                if let Some(s) = v.max_slack {
                                    set(&mut row, &columns, "worst_slack", s);
                                }
                                if v.hypotheses_hold {
                                    row.assertion = Some("transform-bound".into());
                                    row.passed = Some(transform_passes(&v, cfg));
                                } else {
                                    row.note = Some("hypotheses do not hold".into());
                                }
                                if let Some(e) = v.error {
                                    return quarantine(row, e);
                                }
                            }
                            Err(e) => return quarantine(row, e.to_string()),
                        }
                    }
                }
                row
            })
            .collect()
    });
    let table = spectra_table(cfg, "verify-bound_spectra", &rows, &columns);
    Ok(Outcome { report: Report::new("verify-bound", cfg, columns, Some("worst_slack"), rows), tables: vec![table] })
}

fn transform_options(cfg: &SuiteConfig) -> TransformOptions {
    TransformOptions { n_max: cfg.n_max.min(6), mesh: (cfg.mesh / 4).max(1024), ..TransformOptions::default() }
}

fn pipeline(inst: &Instance, variant: Variant, cfg: &SuiteConfig) -> ratiolab_core::Result<Verdict> {
    Ok(full_pipeline(&inst.problem, variant, &transform_options(cfg))?.1)
}

pub fn transform_passes(v: &Verdict, cfg: &SuiteConfig) -> bool {
    v.bound_holds(cfg.tolerances.bound) && v.ratio_invariance.is_some_and(|r| r <= cfg.tolerances.ratio_invariance)
}

/// Homotopy sweeps between each decreasing density and its companions.
pub fn run_prop1(cfg: &SuiteConfig) -> Result<Outcome> {
    cfg.validate()?;
    let instances = generate_all(cfg)?;
    let columns: Vec<String> = [
        "endpoint_margin",
        "max_derivative",
        "max_interval_integral",
        "max_moving_interval",
        "max_fd_mismatch",
        "findings",
    ]
    .map(String::from)
    .to_vec();
    let taus = comparison::tau_grid(cfg.tau_points);
    let tol = cfg.tolerances;
    let k = cfg.n_max.min(COMPANION_N_MAX);
    let results: Vec<(Row, Vec<(f64, f64, f64, f64, f64)>)> = pool(cfg)?.install(|| {
        instances
            .par_iter()
            .enumerate()
            .map(|(i, inst)| {
                let mut row = base_row(i, inst, columns.len());
                if row.shape.is_none_or(|s| !s.is_decreasing()) {
                    row.note = Some("not decreasing; skipped".into());
                    return (row, Vec::new());
                }
                let curves: ratiolab_core::Result<Vec<_>> = (2..=k)
                    .into_par_iter()
                    .map(|n| {
                        let set = crossing_points(inst.rho(), n, &CrossingOptions::default())?;
                        let comp = build_step_companion(inst.rho(), &set)?;
                        homotopy_sweep(inst.rho(), &comp, n, n - 1, &taus, &SweepOptions::default())
                    })
                    .collect();
                let curves = match curves {
                    Ok(c) => c,
                    Err(e) => return (quarantine(row, e.to_string()), Vec::new()),
                };
                let mut endpoint = f64::NEG_INFINITY;
                let mut deriv = f64::NEG_INFINITY;
                let mut fixed = f64::NEG_INFINITY;
                let mut moving = f64::NEG_INFINITY;
                let mut mismatch: f64 = 0.0;
                let mut findings = 0;
                let mut long = Vec::new();
                for c in &curves {
                    let (first, last) = (&c.points[0], c.points.last().expect("nonempty sweep"));
                    endpoint = endpoint.max(last.ratio - first.ratio);
                    deriv = deriv.max(c.max_derivative());
                    fixed = fixed.max(c.max_interval_integral());
                    findings += c.findings.len();
                    for p in &c.points {
                        moving = p.moving_intervals.iter().copied().fold(moving, f64::max);
                        let scale = p.d_fd.abs().max(1e-12);
                        mismatch = mismatch.max((p.d_formula - p.d_fd).abs() / scale);
                        long.push((c.n as f64, p.tau, p.ratio, p.d_formula, p.d_fd));
                    }
                }
                for (name, v) in [
                    ("endpoint_margin", endpoint),
                    ("max_derivative", deriv),
                    ("max_interval_integral", fixed),
                    ("max_moving_interval", moving),
                    ("max_fd_mismatch", mismatch),
                    ("findings", findings as f64),
                ] {
                    set(&mut row, &columns, name, v);
                }
                row.assertion = Some("companion-homotopy".into());
                row.passed = Some(endpoint <= tol.companion && deriv <= tol.companion && fixed <= tol.interval);
                (row, long)
            })
            .collect()
    });
    let mut table = LongTable::new("prop1_curves", &["n", "tau", "ratio", "d_formula", "d_fd"]);
    let mut rows = Vec::with_capacity(results.len());
    for (row, long) in results {
        for (n, tau, r, d, f) in long {
            table.rows.push((row.index, row.family, vec![n, tau, r, d, f]));
        }
        rows.push(row);
    }
    Ok(Outcome { report: Report::new("prop1", cfg, columns, Some("max_derivative"), rows), tables: vec![table] })
}

/// The transformation pipeline on every `theorem4-instances` member, with verdicts.
pub fn run_transform(cfg: &SuiteConfig) -> Result<(Outcome, Vec<Verdict>)> {
    cfg.validate()?;
    let instances: Vec<Instance> =
        generate_all(cfg)?.into_iter().filter(|i| i.family == FamilyName::Theorem4Instances).collect();
    let columns: Vec<String> = [
        "hypotheses_hold",
        "neumann_positive",
        "mu_hat",
        "mu_tilde",
        "eta_hat",
        "eta_tilde",
        "mu_hat_f",
        "mu_tilde_f",
        "f_left_violation",
        "f_right_violation",
        "h_single_well_at_half",
        "final_single_well",
        "c",
        "sigma",
        "predicted_scale",
        "measured_scale",
        "scale_spread",
        "ratio_invariance",
        "max_slack",
    ]
    .map(String::from)
    .to_vec();
    let results: Vec<(Row, Option<Verdict>)> = pool(cfg)?.install(|| {
        instances
            .par_iter()
            .enumerate()
            .map(|(i, inst)| {
                let mut row = base_row(i, inst, columns.len());
                let variant = inst.variant.unwrap_or(Variant::SingleBarrierPotential);
                let v = match pipeline(inst, variant, cfg) {
                    Ok(v) => v,
                    Err(e) => return (quarantine(row, e.to_string()), None),
                };
                let mut put = |name: &str, x: Option<f64>| {
                    if let Some(x) = x {
                        set(&mut row, &columns, name, x);
                    }
                };
                put("hypotheses_hold", Some(flag(v.hypotheses_hold)));
                put("neumann_positive", Some(flag(v.hypotheses.neumann_positive)));
                put("mu_hat", Some(v.mu_hat));
                put("mu_tilde", Some(v.mu_tilde));
                put("eta_hat", Some(v.eta_hat));
                put("eta_tilde", Some(v.eta_tilde));
                put("mu_hat_f", v.mu_hat_f);
                put("mu_tilde_f", v.mu_tilde_f);
                put("f_left_violation", Some(v.f_left_violation));
                put("f_right_violation", Some(v.f_right_violation));
                put("h_single_well_at_half", v.h_single_well_at_half.map(flag));
                put("final_single_well", v.final_classification.map(|c| flag(c.shape.is_single_well())));
                put("c", v.c);
                put("sigma", v.sigma);
                put("predicted_scale", v.predicted_scale);
                put("measured_scale", v.measured_scale);
                put("scale_spread", v.scale_spread);
                put("ratio_invariance", v.ratio_invariance);
                put("max_slack", v.max_slack);
                if v.hypotheses_hold {
                    row.assertion = Some("transform-bound".into());
                    row.passed = Some(transform_passes(&v, cfg));
                } else {
                    row.note = Some("hypotheses do not hold".into());
                }
                if let Some(e) = &v.error {
                    row = quarantine(row, e.clone());
                }
                (row, Some(v))
            })
            .collect()
    });
    let (rows, verdicts): (Vec<Row>, Vec<Option<Verdict>>) = results.into_iter().unzip();
    let report = Report::new("transform", cfg, columns, Some("max_slack"), rows);
    Ok((Outcome { report, tables: Vec::new() }, verdicts.into_iter().flatten().collect()))
}

/// Companion comparisons and ratio slacks on single-barrier densities, as data.
///
/// The comparison density is the step companion built from the crossings of
/// each consecutive pair; `direction = ratio - companion_ratio`, so a
/// nonnegative value is the reversed inequality.
pub fn explore_barrier(cfg: &SuiteConfig) -> Result<Outcome> {
    cfg.validate()?;
    let instances = generate_all(cfg)?;
    let columns: Vec<String> =
        ["ratio_21", "worst_slack", "min_slack", "max_direction", "min_direction", "reversed_fraction", "oracle_deviation"]
            .map(String::from)
            .to_vec();
    let k = cfg.n_max.min(COMPANION_N_MAX);
    let results: Vec<(Row, Vec<CompanionComparison>)> = pool(cfg)?.install(|| {
        instances
            .par_iter()
            .enumerate()
            .map(|(i, inst)| {
                let mut row = base_row(i, inst, columns.len());
                if !inst.family.is_string() {
                    row.note = Some("not a string; skipped".into());
                    return (row, Vec::new());
                }
                let s = match validated(inst, cfg) {
                    Ok(s) => s,
                    Err(why) => return (quarantine(row, why), Vec::new()),
                };
                let cmp = match companion_comparisons(inst.rho(), k) {
                    Ok(c) => c,
                    Err(e) => return (quarantine(row, format!("companion: {e}")), Vec::new()),
                };
                let ev = &s.eigenvalues;
                let mut min_slack = f64::INFINITY;
                for n in 2..=ev.len() {
                    for m in 1..n {
                        min_slack = min_slack.min(ev[n - 1] / ev[m - 1] * (m as f64 / n as f64).powi(2) - 1.0);
                    }
                }
                let dirs: Vec<f64> = cmp.iter().map(|c| c.ratio - c.companion_ratio).collect();
                let reversed = dirs.iter().filter(|d| **d >= 0.0).count() as f64 / dirs.len().max(1) as f64;
                for (name, v) in [
                    ("ratio_21", ev[1] / ev[0]),
                    ("worst_slack", worst_slack(ev).0),
                    ("min_slack", min_slack),
                    ("max_direction", dirs.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
                    ("min_direction", dirs.iter().copied().fold(f64::INFINITY, f64::min)),
                    ("reversed_fraction", reversed),
                    ("oracle_deviation", s.oracle_deviation),
                ] {
                    set(&mut row, &columns, name, v);
                }
                row.note = Some("observation only; comparison density is the step companion L, since the barrier comparison density is left undefined".into());
                (row, cmp)
            })
            .collect()
    });
    let mut table = LongTable::new("explore-barrier_pairs", &["n", "ratio", "companion_ratio"]);
    let mut rows = Vec::with_capacity(results.len());
    for (row, cmp) in results {
        for c in cmp {
            table.rows.push((row.index, row.family, vec![c.n as f64, c.ratio, c.companion_ratio]));
        }
        rows.push(row);
    }
    Ok(Outcome { report: Report::new("explore-barrier", cfg, columns, Some("worst_slack"), rows), tables: vec![table] })
}
