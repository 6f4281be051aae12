//! Suite configuration, read from JSON.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ratiolab_core::transform::Variant;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VerifierError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyName {
    Constant,
    MonotoneStep,
    SingleWellStep,
    SingleWellSmooth,
    SingleBarrierStep,
    SymmetricSingleBarrier,
    SymmetricSingleWell,
    #[serde(rename = "theorem4-instances")]
    Theorem4Instances,
}

impl FamilyName {
    pub const ALL: [FamilyName; 8] = [
        FamilyName::Constant,
        FamilyName::MonotoneStep,
        FamilyName::SingleWellStep,
        FamilyName::SingleWellSmooth,
        FamilyName::SingleBarrierStep,
        FamilyName::SymmetricSingleBarrier,
        FamilyName::SymmetricSingleWell,
        FamilyName::Theorem4Instances,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FamilyName::Constant => "constant",
            FamilyName::MonotoneStep => "monotone-step",
            FamilyName::SingleWellStep => "single-well-step",
            FamilyName::SingleWellSmooth => "single-well-smooth",
            FamilyName::SingleBarrierStep => "single-barrier-step",
            FamilyName::SymmetricSingleBarrier => "symmetric-single-barrier",
            FamilyName::SymmetricSingleWell => "symmetric-single-well",
            FamilyName::Theorem4Instances => "theorem4-instances",
        }
    }

    /// Families whose instances are strings `-y'' = lambda rho y`.
    pub fn is_string(self) -> bool {
        self != FamilyName::Theorem4Instances
    }
}

impl fmt::Display for FamilyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyName {
    type Err = VerifierError;

    fn from_str(s: &str) -> Result<Self> {
        FamilyName::ALL.into_iter().find(|f| f.as_str() == s).ok_or_else(|| VerifierError::UnknownFamily(s.into()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub name: FamilyName,
    pub count: usize,
    /// Overrides the suite seed for this family.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Inclusive range of the number of pieces for step families.
    #[serde(default = "default_pieces")]
    pub pieces: (usize, usize),
    /// Range of density values.
    #[serde(default = "default_values")]
    pub values: (f64, f64),
    /// Hypothesis set for `theorem4-instances`.
    #[serde(default)]
    pub variant: Option<Variant>,
}

fn default_pieces() -> (usize, usize) {
    (2, 8)
}

fn default_values() -> (f64, f64) {
    (0.5, 8.0)
}

impl FamilySpec {
    pub fn new(name: FamilyName, count: usize) -> Self {
        FamilySpec { name, count, seed: None, pieces: default_pieces(), values: default_values(), variant: None }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = Some(variant);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed excess of `(lambda_n / lambda_m)(m / n)^2` over one.
    pub bound: f64,
    /// Slack magnitude counted as equality.
    pub equality: f64,
    pub prufer_vs_step: f64,
    pub prufer_vs_fd: f64,
    /// Allowed excess of the density ratio over the companion ratio.
    pub companion: f64,
    /// Allowed positive value of any per-interval homotopy integral.
    pub interval: f64,
    /// Lower bound slack for `lambda_2 / lambda_1 >= 4` on symmetric barriers.
    pub barrier: f64,
    pub ratio_invariance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            bound: 1e-6,
            equality: 1e-8,
            prufer_vs_step: 1e-10,
            prufer_vs_fd: 1e-6,
            companion: 1e-8,
            interval: 1e-10,
            barrier: 1e-8,
            ratio_invariance: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub seed: u64,
    pub n_max: usize,
    /// Cells of the finite-difference oracle (Richardson uses this and twice this).
    pub mesh: usize,
    pub families: Vec<FamilySpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Worker threads; all cores when absent.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Homotopy sample count for `prop1`.
    #[serde(default = "default_tau_points")]
    pub tau_points: usize,
}

fn default_out() -> PathBuf {
    PathBuf::from("reports")
}

fn default_tau_points() -> usize {
    21
}

impl SuiteConfig {
    pub fn new(seed: u64, n_max: usize, mesh: usize, families: Vec<FamilySpec>) -> Self {
        SuiteConfig {
            seed,
            n_max,
            mesh,
            families,
            tolerances: Tolerances::default(),
            workers: None,
            out: default_out(),
            tau_points: default_tau_points(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg: SuiteConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max < 2 {
            return Err(VerifierError::Config(format!("n_max must be at least 2, got {}", self.n_max)));
        }
        if self.mesh < 16 * self.n_max {
            return Err(VerifierError::Config(format!("mesh {} is below 16 * n_max = {}", self.mesh, 16 * self.n_max)));
        }
        if self.tau_points < 2 {
            return Err(VerifierError::Config("tau_points must be at least 2".into()));
        }
        for f in &self.families {
            let (lo, hi) = f.pieces;
            if lo == 0 || lo > hi {
                return Err(VerifierError::Config(format!("{}: bad piece range {:?}", f.name, f.pieces)));
            }
            let (a, b) = f.values;
            if !(a > 0.0 && a < b && b.is_finite()) {
                return Err(VerifierError::Config(format!("{}: bad value range {:?}", f.name, f.values)));
            }
        }
        Ok(())
    }

    pub fn family_seed(&self, spec: &FamilySpec) -> u64 {
        spec.seed.unwrap_or(self.seed)
    }
}
