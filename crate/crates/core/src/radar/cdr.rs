use nalgebra::{DMatrix, DVector};

use super::scenario::ScenarioParams;
use crate::error::{invalid, Error, Result};
use crate::spectral::GaussHermite;
use crate::symplectic::{apply_channel, qfi_gaussian, GaussianChannel, GaussianState, ModeLayout};

const QUAD_ORDER: usize = 64;

/// Coherent-state probe with a Gaussian spectral amplitude.
///
/// `f(ω) = (πΔ²)^{-1/4} exp(−(ω − ω_c)²/(2Δ²))`, `N_S = α²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdrProbe {
    alpha: f64,
    omega_c: f64,
    delta: f64,
}

impl CdrProbe {
    pub fn gaussian(alpha: f64, omega_c: f64, delta: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(invalid("coherent amplitude must be finite"));
        }
        if !(omega_c > 0.0 && omega_c.is_finite()) {
            return Err(invalid(format!(
                "carrier frequency must be positive, got {omega_c}"
            )));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid(format!(
                "spectral width must be positive, got {delta}"
            )));
        }
        Ok(Self {
            alpha,
            omega_c,
            delta,
        })
    }

    /// Probe with `N_S` photons and pulse duration `ΔT` (so `Δ = 1/(√2 ΔT)`).
    pub fn from_duration(n_s: f64, duration: f64, omega_c: f64) -> Result<Self> {
        if !(n_s >= 0.0) {
            return Err(invalid(format!("photon number must be >= 0, got {n_s}")));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(invalid(format!(
                "pulse duration must be positive, got {duration}"
            )));
        }
        Self::gaussian(
            n_s.sqrt(),
            omega_c,
            1.0 / (std::f64::consts::SQRT_2 * duration),
        )
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn n_s(&self) -> f64 {
        self.alpha * self.alpha
    }

    /// Closed-form duration of the Gaussian pulse, `1/(√2 Δ)`.
    pub fn duration(&self) -> f64 {
        1.0 / (std::f64::consts::SQRT_2 * self.delta)
    }

    pub fn amplitude(&self, omega: f64) -> f64 {
        let y = (omega - self.omega_c) / self.delta;
        (std::f64::consts::PI * self.delta * self.delta).powf(-0.25) * (-0.5 * y * y).exp()
    }

    pub fn amplitude_derivative(&self, omega: f64) -> f64 {
        -(omega - self.omega_c) / (self.delta * self.delta) * self.amplitude(omega)
    }

    /// Amplitude after reflection off the moving target, `√μ f(μω)`.
    pub fn received_amplitude(&self, mu: f64, omega: f64) -> f64 {
        mu.sqrt() * self.amplitude(mu * omega)
    }

    /// `∫ f² dω` by quadrature.
    pub fn norm_squared(&self) -> f64 {
        let rule = GaussHermite::new(QUAD_ORDER);
        self.delta * rule.integrate(|y| self.amplitude(self.omega_c + self.delta * y).powi(2))
    }

    /// `𝒩 = ∫ (½f + ωf′)² dω` by quadrature.
    pub fn mode_shape_integral(&self) -> f64 {
        let rule = GaussHermite::new(QUAD_ORDER);
        self.delta
            * rule.integrate(|y| {
                let w = self.omega_c + self.delta * y;
                (0.5 * self.amplitude(w) + w * self.amplitude_derivative(w)).powi(2)
            })
    }

    /// Standard deviation of `|f̃(t)|²`, with `f̃` the Fourier transform of the
    /// baseband amplitude, both integrals done by quadrature.
    pub fn duration_by_quadrature(&self) -> f64 {
        let rule = GaussHermite::new(QUAD_ORDER);
        let d = self.delta;
        // f̃(t) = (2π)^{-1/2} ∫ f(ω_c + Δ√2 z) e^{iΔ√2 z t} Δ√2 dz
        let time_amp = |t: f64| {
            let c = d * std::f64::consts::SQRT_2;
            let re = rule.integrate(|z| self.amplitude(self.omega_c + c * z) * (c * z * t).cos());
            let im = rule.integrate(|z| self.amplitude(self.omega_c + c * z) * (c * z * t).sin());
            (re * c, im * c)
        };
        let norm = 1.0 / (2.0 * std::f64::consts::PI);
        // |f̃|² as a density in τ = Δt
        let density = |tau: f64| {
            let (re, im) = time_amp(tau / d);
            norm * (re * re + im * im) / d
        };
        let m0 = rule.integrate(density);
        let m1 = rule.integrate(|tau| tau / d * density(tau));
        let m2 = rule.integrate(|tau| (tau / d).powi(2) * density(tau));
        (m2 / m0 - (m1 / m0).powi(2)).sqrt()
    }
}

/// `J_c = 4ηN_S𝒩/(μ²(2N_B + 1))`.
pub fn jc_exact(probe: &CdrProbe, scenario: &ScenarioParams) -> f64 {
    4.0 * scenario.eta() * probe.n_s() * probe.mode_shape_integral()
        / (scenario.mu().powi(2) * scenario.noise_variance())
}

/// Narrowband form `4ω_c²ηN_SΔT²/(μ²(2N_B + 1))`.
pub fn jc_approx(n_s: f64, duration: f64, scenario: &ScenarioParams) -> f64 {
    let wt = scenario.omega_c() * duration;
    if wt < 10.0 {
        log::warn!("pulse is not narrowband: omega_c * dT = {wt:.3}");
    }
    4.0 * wt * wt * scenario.eta() * n_s / (scenario.mu().powi(2) * scenario.noise_variance())
}

/// `J_c` through the Gaussian-state route: two modes `{f, Ψ₂}` where
/// `Ψ₂ ∝ ½f + ωf′` is the derivative mode, thermal-loss channel, and
/// the generic moment-based QFI.
pub fn jc_via_gaussian_machinery(probe: &CdrProbe, scenario: &ScenarioParams) -> Result<f64> {
    let nn = probe.mode_shape_integral();
    if !(nn > 0.0) {
        return Err(Error::InvalidProbe(format!(
            "derivative mode has zero norm (N = {nn})"
        )));
    }
    let layout = ModeLayout::aux(2)?;
    let mean = DVector::from_vec(vec![
        std::f64::consts::SQRT_2 * probe.alpha(),
        0.0,
        0.0,
        0.0,
    ]);
    let sent = GaussianState::new(layout, mean, DMatrix::identity(4, 4))?;
    let channel = GaussianChannel::thermal_loss_rescaled(2, scenario.eta(), scenario.n_b())?;
    let received = apply_channel(&sent, &channel)?;

    // generator on the mode pair: f picks up √𝒩 of Ψ₂
    let mut g = DMatrix::zeros(4, 4);
    for q in 0..2 {
        g[(2 + q, q)] = nn.sqrt();
        g[(q, 2 + q)] = -nn.sqrt();
    }
    let x = channel.x();
    let d_mean = x * (&g * sent.mean());
    let d_cov_sent = &g * sent.cov() + sent.cov() * g.transpose();
    let d_cov = x * d_cov_sent * x.transpose();
    let j1 = qfi_gaussian(received.mean(), received.cov(), &d_mean, &d_cov)?;
    Ok(j1 / scenario.mu().powi(2))
}
