//! Finite-dimensional quantum models of classical measurement arrangements.
//!
//! The crate builds the quantum experiment that corresponds to a classical
//! arrangement (elementary measurements on copies of a system, combined by a
//! polynomial), computes its expected output exactly and by Monte Carlo, and
//! checks the operator rules that follow from requiring a representing
//! operator to reproduce that output on average:
//!
//! * [`opcore`]: dense Hermitian operators, spectra, Born-rule measurement.
//! * [`symalg`]: exact commutative and noncommutative polynomial algebra,
//!   Poisson brackets, simplicity test, quantization and normal ordering.
//! * [`arrange`]: arrangements, copy assignment, expected outputs and the
//!   representing-operator solver.
//! * [`spin`], [`lattice`], [`dynamics`]: angular momentum and rotations,
//!   periodic-lattice position/momentum/displacement, and time evolution.
//! * [`suite`]: the named invariant checks run by `avcp verify`.

pub mod arrange;
pub mod dynamics;
mod error;
pub mod exec;
pub mod lattice;
pub mod opcore;
pub mod report;
pub mod rng;
pub mod spin;
pub mod suite;
pub mod symalg;

pub use error::{Error, Result};
pub use exec::Execution;
pub use opcore::{ComplexMatrix, HermitianOperator, StateVector, C64};
pub use rng::StreamFactory;

/// Version string echoed into reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
