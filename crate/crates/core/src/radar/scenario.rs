use crate::error::{invalid, Result};
use crate::SPEED_OF_LIGHT;

/// Target speed, carrier and channel parameters of one radar scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    speed: f64,
    omega_c: f64,
    eta: f64,
    n_b: f64,
}

impl ScenarioParams {
    /// `speed` is the radial speed in m/s (positive: approaching).
    pub fn new(speed: f64, omega_c: f64, eta: f64, n_b: f64) -> Result<Self> {
        if !(speed.abs() < SPEED_OF_LIGHT) {
            return Err(invalid(format!(
                "target speed must be below c, got {speed}"
            )));
        }
        if !(omega_c > 0.0 && omega_c.is_finite()) {
            return Err(invalid(format!(
                "carrier frequency must be positive, got {omega_c}"
            )));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(invalid(format!(
                "transmissivity must lie in (0, 1], got {eta}"
            )));
        }
        if !(n_b >= 0.0 && n_b.is_finite()) {
            return Err(invalid(format!(
                "thermal occupation must be >= 0, got {n_b}"
            )));
        }
        Ok(Self {
            speed,
            omega_c,
            eta,
            n_b,
        })
    }

    /// Scenario whose Doppler factor is exactly `mu`.
    pub fn from_mu(mu: f64, omega_c: f64, eta: f64, n_b: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(invalid(format!(
                "Doppler factor must be positive, got {mu}"
            )));
        }
        Self::new(SPEED_OF_LIGHT * (1.0 - mu) / (1.0 + mu), omega_c, eta, n_b)
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn n_b(&self) -> f64 {
        self.n_b
    }

    /// `μ = (c − v)/(c + v)`.
    pub fn mu(&self) -> f64 {
        (SPEED_OF_LIGHT - self.speed) / (SPEED_OF_LIGHT + self.speed)
    }

    /// Output noise variance `2N_B + 1`.
    pub fn noise_variance(&self) -> f64 {
        2.0 * self.n_b + 1.0
    }
}

/// Angular carrier frequency for a wavelength in meters.
pub fn omega_from_wavelength(wavelength: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / wavelength
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doppler_factor() {
        let s = ScenarioParams::new(100.0, 1e10, 0.5, 1.0).unwrap();
        assert!((s.mu() - (1.0 - 6.6713e-7)).abs() < 1e-10);
        assert!(s.mu() < 1.0);
        let s = ScenarioParams::new(0.0, 1e10, 1.0, 0.0).unwrap();
        assert_eq!(s.mu(), 1.0);
    }

    #[test]
    fn from_mu_round_trip() {
        for mu in [0.5, 0.9, 1.0, 1.2] {
            let s = ScenarioParams::from_mu(mu, 1e10, 0.3, 2.0).unwrap();
            assert!((s.mu() - mu).abs() < 1e-14);
        }
    }

    #[test]
    fn validation() {
        assert!(ScenarioParams::new(100.0, 1e10, 0.0, 1.0).is_err());
        assert!(ScenarioParams::new(100.0, 1e10, 1.5, 1.0).is_err());
        assert!(ScenarioParams::new(100.0, 1e10, 0.5, -1.0).is_err());
        assert!(ScenarioParams::new(4e8, 1e10, 0.5, 1.0).is_err());
        assert!(ScenarioParams::new(1.0, -1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn baseline_carrier() {
        let w = omega_from_wavelength(0.06 * std::f64::consts::PI);
        assert!((w / 1e10 - 1.0).abs() < 1e-3);
    }
}
