use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use ratiolab_core::transform::Variant;
use ratiolab_verifier::config::{FamilyName, FamilySpec, SuiteConfig};
use ratiolab_verifier::suite::{self, Outcome};

#[derive(Parser)]
#[command(name = "ratiolab", version, about = "Eigenvalue ratio bound verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-validated spectra for every generated instance.
    Solve(Common),
    /// Ratio bound checks over all configured families.
    VerifyBound(Common),
    /// Companion homotopy sweeps on decreasing densities.
    Prop1(Common),
    /// Transformation pipeline on generated (p, q, rho) instances.
    Transform(Common),
    /// Companion comparisons on single-barrier densities, no assertions.
    ExploreBarrier(Common),
}

#[derive(Args)]
struct Common {
    /// JSON suite configuration; a built-in default is used when omitted.
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    nmax: Option<usize>,
    #[arg(long)]
    mesh: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn config(&self, default: impl FnOnce() -> SuiteConfig) -> anyhow::Result<SuiteConfig> {
        let mut cfg = match &self.config {
            Some(p) => SuiteConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
            None => default(),
        };
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.nmax {
            cfg.n_max = n;
        }
        if let Some(m) = self.mesh {
            cfg.mesh = m;
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn default_suite() -> SuiteConfig {
    use FamilyName::*;
    SuiteConfig::new(
        2024,
        8,
        2048,
        vec![
            FamilySpec::new(Constant, 3),
            FamilySpec::new(MonotoneStep, 10),
            FamilySpec::new(SingleWellStep, 10),
            FamilySpec::new(SingleWellSmooth, 10),
            FamilySpec::new(SymmetricSingleWell, 5),
            FamilySpec::new(SymmetricSingleBarrier, 5),
            FamilySpec::new(SingleBarrierStep, 5),
        ],
    )
}

fn default_prop1() -> SuiteConfig {
    SuiteConfig::new(2024, 5, 2048, vec![FamilySpec::new(FamilyName::MonotoneStep, 5)])
}

fn default_transform() -> SuiteConfig {
    SuiteConfig::new(
        2024,
        6,
        4096,
        vec![
            FamilySpec::new(FamilyName::Theorem4Instances, 3).with_variant(Variant::SingleBarrierPotential),
            FamilySpec::new(FamilyName::Theorem4Instances, 3).with_variant(Variant::NonnegativePotential),
        ],
    )
}

fn default_barrier() -> SuiteConfig {
    SuiteConfig::new(
        2024,
        5,
        2048,
        vec![
            FamilySpec::new(FamilyName::Constant, 1),
            FamilySpec::new(FamilyName::SymmetricSingleBarrier, 5),
            FamilySpec::new(FamilyName::SingleBarrierStep, 10),
        ],
    )
}

fn emit(outcome: &Outcome, cfg: &SuiteConfig) -> anyhow::Result<()> {
    std::fs::create_dir_all(&cfg.out)?;
    for p in outcome.report.save(&cfg.out)? {
        eprintln!("wrote {}", p.display());
    }
    for t in &outcome.tables {
        eprintln!("wrote {}", t.save(&cfg.out)?.display());
    }
    let s = &outcome.report.summary;
    println!(
        "{}: {} instances, {} asserted, {} passed, {} failed, {} quarantined",
        outcome.report.header.command, s.instances, s.asserted, s.passed, s.failed, s.quarantined
    );
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let outcome = match cli.command {
        Command::Solve(c) => {
            let cfg = c.config(default_suite)?;
            let o = suite::run_solve(&cfg)?;
            emit(&o, &cfg)?;
            o
        }
        Command::VerifyBound(c) => {
            let cfg = c.config(default_suite)?;
            let o = suite::run_suite(&cfg)?;
            emit(&o, &cfg)?;
            o
        }
        Command::Prop1(c) => {
            let cfg = c.config(default_prop1)?;
            let o = suite::run_prop1(&cfg)?;
            emit(&o, &cfg)?;
            o
        }
        Command::Transform(c) => {
            let cfg = c.config(default_transform)?;
            let (o, verdicts) = suite::run_transform(&cfg)?;
            emit(&o, &cfg)?;
            let path = cfg.out.join("transform_verdicts.json");
            serde_json::to_writer_pretty(std::fs::File::create(&path)?, &verdicts)?;
            eprintln!("wrote {}", path.display());
            o
        }
        Command::ExploreBarrier(c) => {
            let cfg = c.config(default_barrier)?;
            let o = suite::explore_barrier(&cfg)?;
            emit(&o, &cfg)?;
            o
        }
    };
    Ok(outcome.report.success())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
