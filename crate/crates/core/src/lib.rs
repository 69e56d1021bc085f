//! Quantum Fisher information for Doppler estimation.
//!
//! A coherent-state probe (classical Doppler radar) and an SPDC signal–idler
//! probe (quantum Doppler radar) are sent through a thermal-loss channel; the
//! crate evaluates the QFI of each received state for the Doppler scale
//! factor `mu = (c - v) / (c + v)` and the ratio between them.
//!
//! Conventions: vacuum covariance is the identity, quadratures are
//! interleaved as `[Q1, P1, Q2, P2, ...]`, frequencies are angular (rad/s).
//!
//! Modules:
//! - [`symplectic`]: Gaussian states, channels, QFI from moments, fidelity.
//! - [`spectral`]: Hermite–Gauss bases, the Doppler reshuffling matrix and
//!   its generator, the analytic Schmidt spectrum of a double-Gaussian JSA.
//! - [`radar`]: probe construction and the J_c / J_q evaluations.
//! - [`oracle`]: brute-force cross-checks (fidelity finite differences,
//!   quadrature matrix elements, SVD of the sampled JSA).
//! - [`sweep`]: config parsing, parallel grid runs, CSV/SVG output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod oracle;
pub mod radar;
pub mod spectral;
pub mod sweep;
pub mod symplectic;

pub use error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
