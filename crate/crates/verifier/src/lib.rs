//! Seeded families of densities and coefficient sets, bound-verification
//! suites over them, and CSV/JSON reports.

pub mod config;
pub mod error;
pub mod generate;
pub mod report;
pub mod suite;

pub use config::{FamilyName, FamilySpec, SuiteConfig, Tolerances};
pub use error::{Result, VerifierError};
pub use generate::{generate_family, Instance};
pub use report::{Report, Row, Status};
pub use suite::{explore_barrier, run_prop1, run_solve, run_suite, run_transform, Outcome};
