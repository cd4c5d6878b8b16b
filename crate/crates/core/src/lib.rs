//! Iterative substructuring and nonoverlapping spectral additive Schwarz
//! (NOSAS) preconditioners for the 2D Helmholtz equation with impedance
//! boundary conditions.
//!
//! The pipeline: a structured P1 triangulation of the unit square is split
//! into square subdomains; interior modes with small generalized eigenvalues
//! move into a coarse interface space, making every local problem well
//! posed; the coarse operator is then preconditioned by one of four spectral
//! low-rank corrections (P1–P4) applied through the Woodbury identity, and
//! the preconditioned coarse system is solved by full GMRES.

pub mod assemble;
pub mod densela;
pub mod substructure;
pub mod error;
pub mod mesh;
pub mod sparse;
pub mod driver;
pub mod krylov;
pub mod mm;
pub mod precond;
pub mod spectra;

pub use error::{Error, Result};
