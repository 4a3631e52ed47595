//! Resonant-state (quasinormal-mode) time evolution of quantum decay.

pub mod delta_shell;
pub mod error;
pub mod fit;
pub mod output;
pub mod quadrature;
pub mod reference_oracle;
pub mod resonant_basis;
pub mod single_particle;
pub mod specfun;
pub mod two_particle;

pub use error::{Error, Result};
