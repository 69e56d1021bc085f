//! Classical and entangled Doppler probes, the received states and their QFIs.

mod cdr;
mod matched;
mod qdr;
mod scenario;

pub use cdr::{jc_approx, jc_exact, jc_via_gaussian_machinery, CdrProbe};
pub use matched::{matched_pair, MatchOptions, MatchedPair};
pub use qdr::{
    build_qdr_received, jq, signal_basis, DurationConvention, QdrProbe, ReceivedQdr, SIGNAL_PADDING,
};
pub use scenario::{omega_from_wavelength, ScenarioParams};
