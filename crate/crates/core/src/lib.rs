//! Finite-dimensional spectral laboratory for the semi-relativistic
//! Pauli-Fierz and no-pair Hamiltonians of a hydrogen-like atom coupled to a
//! quantized radiation field.
//!
//! The crate is organised bottom-up:
//!
//! * [`modes`] discretizes photon momenta into cells and evaluates coupling
//!   functions,
//! * [`fock`] builds the truncated bosonic Fock space and its ladder operators,
//! * [`electron`] provides the periodic electron grid, Dirac matrices and
//!   electronic operators,
//! * [`hamiltonians`] assembles the coupled Dirac operator, its spectral split,
//!   the Pauli-Fierz and no-pair operators and their symmetries,
//! * [`spectral`] computes lowest eigenpairs and degeneracy groups,
//! * [`lab`] runs the experiments and persists reports.

pub mod electron;
pub mod error;
pub mod fock;
pub mod hamiltonians;
pub mod lab;
pub mod linalg;
pub mod modes;
pub mod quadrature;
pub mod spectral;

pub use error::{LabError, Result};
pub use linalg::C64;
