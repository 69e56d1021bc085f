use super::cdr::{jc_approx, CdrProbe};
use super::qdr::{jq, DurationConvention, QdrProbe};
use super::scenario::ScenarioParams;
use crate::error::Result;
use crate::spectral::schmidt_spectrum;

/// Knobs for building a matched CDR/QDR comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchOptions {
    /// Schmidt tail weight `Σ_{m>M} r_m²` allowed by the truncation.
    pub tail_tol: f64,
    pub convention: DurationConvention,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            tail_tol: 1e-12,
            convention: DurationConvention::default(),
        }
    }
}

/// A CDR and a QDR probe with equal `N_S`, `ΔT` and `ω_c`, and their QFIs.
#[derive(Debug, Clone)]
pub struct MatchedPair {
    pub cdr: CdrProbe,
    pub qdr: QdrProbe,
    pub n_s: f64,
    pub duration: f64,
    pub jc: f64,
    pub jq: f64,
}

impl MatchedPair {
    /// `J_q / J_c`.
    pub fn ratio(&self) -> f64 {
        self.jq / self.jc
    }

    pub fn ratio_db(&self) -> f64 {
        10.0 * self.ratio().log10()
    }
}

/// Builds the matched pair for an SPDC source `(σ_p, ε, ξ)`. The classical
/// baseline is the narrowband `J_c`.
pub fn matched_pair(
    sigma_p: f64,
    epsilon: f64,
    xi: f64,
    scenario: &ScenarioParams,
    options: &MatchOptions,
) -> Result<MatchedPair> {
    let spectrum = schmidt_spectrum(sigma_p, epsilon, options.tail_tol)?;
    let qdr = QdrProbe::new(spectrum, xi)?;
    let n_s = qdr.n_s();
    let duration = qdr.duration(options.convention)?;
    let cdr = CdrProbe::from_duration(n_s, duration, scenario.omega_c())?;
    let jq = jq(&qdr, scenario)?;
    let jc = jc_approx(n_s, duration, scenario);
    Ok(MatchedPair {
        cdr,
        qdr,
        n_s,
        duration,
        jc,
        jq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use approx::assert_relative_eq;

    const WC: f64 = 1e10;

    fn baseline(c_xi: f64, eta: f64, nb: f64) -> MatchedPair {
        let sp = 2.0 * WC / 100.0;
        let k = 5.0 / 3.0;
        let s = ScenarioParams::new(100.0, WC, eta, nb).unwrap();
        matched_pair(sp, 3.0 * sp, c_xi * k, &s, &MatchOptions::default()).unwrap()
    }

    #[test]
    fn probes_are_matched() {
        let p = baseline(1.0, 0.5, 1.0);
        assert_relative_eq!(p.cdr.n_s(), p.n_s, max_relative = 1e-14);
        assert_relative_eq!(p.cdr.duration(), p.duration, max_relative = 1e-14);
        assert_eq!(p.cdr.omega_c(), WC);
        assert!(p.ratio().is_finite() && p.ratio() > 0.0);
    }

    #[test]
    fn duration_closed_form() {
        let sp = 2.0 * WC / 100.0;
        let s = ScenarioParams::new(100.0, WC, 0.5, 1.0).unwrap();
        let opts = MatchOptions {
            convention: DurationConvention::ModeIndex,
            ..Default::default()
        };
        let p = matched_pair(sp, 3.0 * sp, 5.0 / 3.0, &s, &opts).unwrap();
        let n = p.qdr.photons();
        let num: f64 = n.iter().enumerate().map(|(k, x)| k as f64 * x).sum();
        let den: f64 = n.iter().sum();
        assert_relative_eq!(
            p.duration.powi(2),
            2.0 / (sp * 3.0 * sp) * num / den,
            max_relative = 1e-12
        );
    }

    #[test]
    fn separable_source_rejected_under_mode_index() {
        let s = ScenarioParams::new(100.0, WC, 0.5, 1.0).unwrap();
        let opts = MatchOptions {
            convention: DurationConvention::ModeIndex,
            ..Default::default()
        };
        let r = matched_pair(1e8, 1e8, 0.5, &s, &opts);
        assert!(matches!(r, Err(Error::DegenerateDuration(_))));
    }

    #[test]
    fn noisy_weak_probe_near_three_db() {
        let p = baseline(0.03, 0.1, 50.0);
        assert!(p.n_s < 0.02);
        assert!(p.ratio() > 1.8 && p.ratio() < 2.2, "{}", p.ratio());
    }
}
