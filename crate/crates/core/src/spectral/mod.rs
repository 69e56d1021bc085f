//! Hermite–Gauss spectral modes, the Doppler reshuffling matrix and the
//! Schmidt decomposition of the double-Gaussian joint spectral amplitude.

mod basis;
mod hermite;
mod schmidt;

pub use basis::{
    closed_form_generator, default_quad_order, doppler_generator, doppler_unitary_matrix,
    DopplerGenerator, HermiteGaussBasis,
};
pub use hermite::{hermite_gauss_all, hermite_gauss_derivative, hermite_gauss_eval, GaussHermite};
pub use schmidt::{
    jsa_eval, schmidt_spectrum, SchmidtSpectrum, MAX_SCHMIDT_ORDER, MIN_SCHMIDT_ORDER,
};
