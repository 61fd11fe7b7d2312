//! Two-mode dynamics of a Bose-Einstein condensate in a symmetric double well.
//!
//! The crate covers the reduced three-dimensional ODE, its closed-form
//! periodic orbits in Jacobi elliptic functions, Floquet analysis of the
//! linearization along those orbits, the finite-difference linear eigenbasis,
//! a split-step Fourier NLS integrator that checks the reduced dynamics, and
//! an exact-rational Lie-transform normal form.

pub mod elliptic;
pub mod error;
pub mod floquet;
pub mod integrate;
pub mod linalg;
pub mod normal_form;
pub mod orbits;
pub mod par;
pub mod pde;
pub mod reduced;
pub mod spectral;
pub mod sweep;

pub use error::{Error, Result};

/// Crate version, embedded in CLI artifacts.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
