//! Coherent amplification-feedback networks: SLH composition, amplifier
//! elimination, truncated-Fock master equations and nonclassicality
//! observables.

pub mod algebra;
pub mod error;
pub mod lindblad;
pub mod netlist;
pub mod observables;
pub mod oracle;
pub mod slh;
pub mod units;

pub use algebra::{ModeRegistry, Monomial, OperatorExpr};
pub use error::{Error, ErrorClass, Result};
