//! Algebraic two-level overlapping Schwarz preconditioning with spectral
//! coarse spaces, for symmetric positive definite and general sparse systems.

pub mod coarse;
pub mod dense;
pub mod error;
pub mod harness;
pub mod krylov;
pub mod mmio;
pub mod partition;
pub mod precond;
pub mod sparse;
pub mod spectral;
pub mod subdomain;

pub use error::{Error, Result};
pub use sparse::SparseMat;
