//! Random lattice Schrödinger operators, random potentials, and Monte Carlo
//! verification of eigenvalue-concentration (Wegner-type) bounds.

pub mod concentration;
pub mod error;
pub mod fields;
pub mod harness;
pub mod lattice;
pub mod oracle;
pub mod spectra;

pub use error::{Error, Result};
