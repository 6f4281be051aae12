//! Numerical toolkit for eigenvalue ratio bounds of second-order
//! Sturm-Liouville problems on `[0, 1]`.
//!
//! The main entry points are [`prufer::eigenvalue`] for string densities,
//! [`fd::oracle_eigenvalues`] for the general self-adjoint form,
//! [`step_exact::exact_eigenvalues`] for piecewise-constant densities,
//! [`comparison`] for crossing sets, step companions and homotopies, and
//! [`transform`] for the reduction of `-(p y')' + q y = lambda rho y` to a string.

pub mod classify;
pub mod comparison;
pub mod density;
pub mod error;
pub mod fd;
pub mod interp;
pub mod ode;
pub mod profile;
pub mod prufer;
pub mod quad;
pub mod roots;
pub mod step_exact;
pub mod transform;

pub use classify::{classify, Classification, ClassifyOptions, Shape};
pub use density::{BoundaryKind, BoundarySpec, Coefficient, CoefficientSet, Density, Family, FamilyKind};
pub use error::{Error, Result};
pub use profile::{Profile, Side};
pub use prufer::{eigenvalue, prufer_integrate, PruferOptions, PruferState, ShootingResult};
