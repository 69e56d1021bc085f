use nalgebra::{DMatrix, DVector};

use super::fd::StateFamily;
use crate::error::{invalid, Result};
use crate::radar::{CdrProbe, QdrProbe, SIGNAL_PADDING};
use crate::spectral::{
    default_quad_order, doppler_unitary_matrix, GaussHermite, HermiteGaussBasis,
};
use crate::symplectic::{apply_channel, GaussianChannel, GaussianState, ModeLayout};

/// Received QDR state as a function of `μ`, built from the transmitted SPDC
/// state, the quadrature Doppler matrix and the thermal-loss channel.
///
/// Loss is frequency-flat, so the Doppler map commutes with it and the state
/// at `μ_b` can be expressed on the Schmidt basis rescaled to `μ_a`
/// (center `ω_c/μ_a`, scale `μ_a s`), then reshuffled by `𝒰_{μ_b/μ_a}`.
#[derive(Debug, Clone)]
pub struct QdrOracleFamily {
    transmitted: GaussianState,
    omega_c: f64,
    scale: f64,
    signal_modes: usize,
    eta: f64,
    n_b: f64,
    quad_order: usize,
}

impl QdrOracleFamily {
    pub fn new(probe: &QdrProbe, omega_c: f64, eta: f64, n_b: f64) -> Result<Self> {
        let pairs = probe.pairs();
        let ns = pairs + SIGNAL_PADDING;
        let sent = probe.spdc_state()?;
        // vacuum padding inserted after the signal Schmidt modes
        let dim = 2 * (ns + pairs);
        let map = |k: usize| {
            if k < 2 * pairs {
                k
            } else {
                k + 2 * SIGNAL_PADDING
            }
        };
        let mut cov = DMatrix::identity(dim, dim);
        for a in 0..sent.dim() {
            for b in 0..sent.dim() {
                cov[(map(a), map(b))] = sent.cov()[(a, b)];
            }
        }
        let layout = ModeLayout::signal_idler(ns, pairs)?;
        let transmitted =
            GaussianState::new_unchecked_physicality(layout, DVector::zeros(dim), cov)?;
        Ok(Self {
            transmitted,
            omega_c,
            scale: probe.spectrum().basis_scale(),
            signal_modes: ns,
            eta,
            n_b,
            quad_order: default_quad_order(ns + 8),
        })
    }

    pub fn transmitted(&self) -> &GaussianState {
        &self.transmitted
    }

    /// Received state at `mu` on the basis rescaled to `frame`.
    pub fn state_in_frame(&self, frame: f64, mu: f64) -> Result<GaussianState> {
        if !(frame > 0.0 && mu > 0.0) {
            return Err(invalid("Doppler factors must be positive"));
        }
        let ns = self.signal_modes;
        let idlers = self.transmitted.layout().count() - ns;
        let basis = HermiteGaussBasis::new(self.omega_c / frame, self.scale * frame, ns - 1)?;
        let u = doppler_unitary_matrix(&basis, mu / frame, self.quad_order)?;
        let leak = DMatrix::identity(ns, ns) - &u * u.transpose();
        let doppler = GaussianChannel::new(
            u.kronecker(&DMatrix::identity(2, 2)),
            leak.kronecker(&DMatrix::identity(2, 2)),
        )?
        .extended(idlers);
        let loss = GaussianChannel::thermal_loss_rescaled(ns, self.eta, self.n_b)?.extended(idlers);
        apply_channel(&self.transmitted, &doppler.then(&loss)?)
    }
}

impl StateFamily for QdrOracleFamily {
    fn pair(&self, a: f64, b: f64) -> Result<(GaussianState, GaussianState)> {
        Ok((self.state_in_frame(a, a)?, self.state_in_frame(a, b)?))
    }

    /// A relative shift `h` moves the spectrum by `ω_c s h` in Hermite units,
    /// against features of width `1/√n` in the highest of `n` modes.
    fn step_scale(&self) -> Option<f64> {
        Some(1.0 / (self.omega_c * self.scale * (self.signal_modes as f64).sqrt()))
    }
}

/// Received coherent pulse as a function of `μ`.
///
/// The two received mode functions `√μ f(μω)` are orthonormalized from their
/// overlap computed by quadrature; each state is a displaced thermal state on
/// that two-mode basis.
#[derive(Debug, Clone)]
pub struct CdrOracleFamily {
    probe: CdrProbe,
    eta: f64,
    n_b: f64,
    rule: GaussHermite,
}

impl CdrOracleFamily {
    pub fn new(probe: CdrProbe, eta: f64, n_b: f64) -> Self {
        Self {
            probe,
            eta,
            n_b,
            rule: GaussHermite::new(96),
        }
    }

    /// `∫ √(μ_a μ_b) f(μ_a ω) f(μ_b ω) dω`.
    pub fn overlap(&self, a: f64, b: f64) -> f64 {
        let (wc, d) = (self.probe.omega_c(), self.probe.delta());
        // ω = (ω_c + Δy)/μ_a
        let integral = self.rule.integrate(|y| {
            let w = (wc + d * y) / a;
            self.probe.amplitude(a * w) * self.probe.amplitude(b * w)
        });
        (a * b).sqrt() * integral * d / a
    }
}

impl StateFamily for CdrOracleFamily {
    fn pair(&self, a: f64, b: f64) -> Result<(GaussianState, GaussianState)> {
        let c = self.overlap(a, b).clamp(-1.0, 1.0);
        let s = (1.0 - c * c).max(0.0).sqrt();
        let amp = std::f64::consts::SQRT_2 * self.eta.sqrt() * self.probe.alpha();
        let cov = DMatrix::identity(4, 4) * (2.0 * self.n_b + 1.0);
        let layout = ModeLayout::aux(2)?;
        let sa = GaussianState::new(
            layout.clone(),
            DVector::from_vec(vec![amp, 0.0, 0.0, 0.0]),
            cov.clone(),
        )?;
        let sb = GaussianState::new(
            layout,
            DVector::from_vec(vec![amp * c, 0.0, amp * s, 0.0]),
            cov,
        )?;
        Ok((sa, sb))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{qfi_finite_difference, FdConfig};
    use crate::radar::{build_qdr_received, jc_exact, jq, ScenarioParams};
    use crate::spectral::SchmidtSpectrum;
    use approx::assert_relative_eq;

    const WC: f64 = 1e10;

    #[test]
    fn overlap_is_one_at_equal_mu() {
        let p = CdrProbe::from_duration(1.0, 20.0 / WC, WC).unwrap();
        let f = CdrOracleFamily::new(p, 0.5, 1.0);
        assert_relative_eq!(f.overlap(1.0, 1.0), 1.0, max_relative = 1e-13);
        assert_relative_eq!(f.overlap(0.7, 0.7), 1.0, max_relative = 1e-13);
        assert!(f.overlap(1.0, 1.001) < 1.0);
    }

    #[test]
    fn cdr_oracle_matches_closed_form() {
        for (eta, nb, wt, mu0) in [
            (1.0, 0.5, 10.0, 1.0),
            (0.2, 3.0, 40.0, 0.9),
            (0.05, 20.0, 25.0, 0.5),
        ] {
            let p = CdrProbe::from_duration(2.0, wt / WC, WC).unwrap();
            let fam = CdrOracleFamily::new(p, eta, nb);
            let est = qfi_finite_difference(&fam, mu0, &FdConfig::default()).unwrap();
            let s = ScenarioParams::from_mu(mu0, WC, eta, nb).unwrap();
            assert_relative_eq!(est.value, jc_exact(&p, &s), max_relative = 1e-6);
        }
    }

    #[test]
    fn qdr_state_at_unit_mu_matches_pipeline() {
        let p = QdrProbe::new(SchmidtSpectrum::with_order(2e8, 6e8, 4).unwrap(), 1.0).unwrap();
        let fam = QdrOracleFamily::new(&p, WC, 0.4, 2.0).unwrap();
        let s = ScenarioParams::new(0.0, WC, 0.4, 2.0).unwrap();
        let r = build_qdr_received(&p, &s).unwrap();
        let o = fam.state_in_frame(1.0, 1.0).unwrap();
        assert!((o.cov() - r.state().cov()).amax() < 1e-10);
    }

    #[test]
    fn qdr_covariance_derivative_converges_quadratically() {
        let p = QdrProbe::new(SchmidtSpectrum::with_order(2e8, 6e8, 4).unwrap(), 1.0).unwrap();
        let fam = QdrOracleFamily::new(&p, WC, 0.4, 2.0).unwrap();
        let s = ScenarioParams::new(0.0, WC, 0.4, 2.0).unwrap();
        let r = build_qdr_received(&p, &s).unwrap();
        let err = |h: f64| {
            let up = fam.state_in_frame(1.0, 1.0 + h).unwrap();
            let dn = fam.state_in_frame(1.0, 1.0 - h).unwrap();
            let fd = (up.cov() - dn.cov()) / (2.0 * h);
            (fd - r.d_cov()).amax()
        };
        let (e1, e2) = (err(1e-3), err(1e-4));
        assert!(e1 / e2 > 50.0 && e1 / e2 < 200.0, "{e1:e} {e2:e}");
    }

    #[test]
    fn qdr_oracle_matches_pipeline() {
        // short truncation keeps every idler mode clear of the mixedness guard
        let sp = WC / 50.0;
        let spec = SchmidtSpectrum::with_order(sp, 3.0 * sp, 6).unwrap();
        let p = QdrProbe::new(spec.clone(), spec.schmidt_number()).unwrap();
        let s = ScenarioParams::new(100.0, WC, 0.5, 1.0).unwrap();
        let fam = QdrOracleFamily::new(&p, WC, 0.5, 1.0).unwrap();
        let est = qfi_finite_difference(&fam, s.mu(), &FdConfig::default()).unwrap();
        assert_relative_eq!(est.value, jq(&p, &s).unwrap(), max_relative = 1e-4);
    }
}
