//! Mean-square stability certificates for linear quantum stochastic systems
//! under Weyl-quantized trigonometric Hamiltonian perturbations.
//!
//! The pipeline runs [`system::build_system`], an envelope from [`weyl`], and
//! a certificate from [`lmi`]. The [`oracle`] module checks the same claims
//! by brute force in a truncated Fock space.

pub mod cli;
pub mod error;
pub mod linalg;
pub mod lmi;
pub mod oracle;
pub mod system;
pub mod weyl;

pub use error::{Error, Result};
