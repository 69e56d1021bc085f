//! Brute-force cross-checks that share no shortcut with the main pipeline.
//!
//! The QDR family uses the quadrature Doppler matrix and the fidelity only;
//! it never touches the closed-form generator or the compact `∂σ` formula.

mod families;
mod fd;
mod generator;
mod schmidt;

pub use families::{CdrOracleFamily, QdrOracleFamily};
pub use fd::{qfi_finite_difference, FdConfig, FdEstimate, StateFamily};
pub use generator::generator_by_quadrature;
pub use schmidt::{schmidt_by_svd, MIN_SVD_GRID};
