use super::basis::HermiteGaussBasis;
use crate::error::{invalid, Result};

/// Truncation orders beyond this are treated as a configuration error.
pub const MAX_SCHMIDT_ORDER: usize = 4000;
/// Smallest truncation order kept by [`schmidt_spectrum`].
pub const MIN_SCHMIDT_ORDER: usize = 4;

/// Analytic Schmidt decomposition of the double-Gaussian JSA.
///
/// `r_m = 2√(σε)/(σ+ε) · qᵐ` with `q = (σ−ε)/(σ+ε)`; the sign of `q` is kept.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtSpectrum {
    sigma_p: f64,
    epsilon: f64,
    weights: Vec<f64>,
}

pub fn schmidt_spectrum(sigma_p: f64, epsilon: f64, tail_tol: f64) -> Result<SchmidtSpectrum> {
    check_bandwidths(sigma_p, epsilon)?;
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(invalid(format!(
            "tail tolerance must lie in (0, 1), got {tail_tol}"
        )));
    }
    let q2 = ratio(sigma_p, epsilon).powi(2);
    // tail after order M is q^{2(M+1)}
    let order = if q2 == 0.0 {
        MIN_SCHMIDT_ORDER
    } else {
        let m = (tail_tol.ln() / q2.ln()).ceil() - 1.0;
        if !(m <= MAX_SCHMIDT_ORDER as f64) {
            return Err(invalid(format!(
                "tail tolerance {tail_tol:e} needs more than {MAX_SCHMIDT_ORDER} Schmidt modes"
            )));
        }
        let mut m = m.max(0.0) as usize;
        while m > 0 && q2.powi(m as i32) <= tail_tol {
            m -= 1;
        }
        while q2.powi(m as i32 + 1) > tail_tol {
            m += 1;
        }
        m.max(MIN_SCHMIDT_ORDER)
    };
    SchmidtSpectrum::with_order(sigma_p, epsilon, order)
}

fn check_bandwidths(sigma_p: f64, epsilon: f64) -> Result<()> {
    if !(sigma_p > 0.0 && sigma_p.is_finite() && epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!(
            "bandwidths must be positive, got sigma_p = {sigma_p}, epsilon = {epsilon}"
        )));
    }
    Ok(())
}

fn ratio(sigma_p: f64, epsilon: f64) -> f64 {
    (sigma_p - epsilon) / (sigma_p + epsilon)
}

impl SchmidtSpectrum {
    /// Fixed truncation: weights `r_0 … r_M`.
    pub fn with_order(sigma_p: f64, epsilon: f64, order: usize) -> Result<Self> {
        check_bandwidths(sigma_p, epsilon)?;
        if order > MAX_SCHMIDT_ORDER {
            return Err(invalid(format!(
                "Schmidt truncation order {order} exceeds {MAX_SCHMIDT_ORDER}"
            )));
        }
        let q = ratio(sigma_p, epsilon);
        let r0 = 2.0 * (sigma_p * epsilon).sqrt() / (sigma_p + epsilon);
        let mut weights = Vec::with_capacity(order + 1);
        let mut r = r0;
        for _ in 0..=order {
            weights.push(r);
            r *= q;
        }
        Ok(Self {
            sigma_p,
            epsilon,
            weights,
        })
    }

    pub fn sigma_p(&self) -> f64 {
        self.sigma_p
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Truncation order `M` (the weights run over `0..=M`).
    pub fn order(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn ratio(&self) -> f64 {
        ratio(self.sigma_p, self.epsilon)
    }

    /// `K = (σ² + ε²)/(2σε)`.
    pub fn schmidt_number(&self) -> f64 {
        (self.sigma_p.powi(2) + self.epsilon.powi(2)) / (2.0 * self.sigma_p * self.epsilon)
    }

    /// `Σ_{m>M} r_m²`.
    pub fn tail_weight(&self) -> f64 {
        self.ratio().powi(2).powi(self.weights.len() as i32)
    }

    /// Basis scale `s = √(2/(σ_p ε))`.
    pub fn basis_scale(&self) -> f64 {
        (2.0 / (self.sigma_p * self.epsilon)).sqrt()
    }

    /// Hermite–Gauss basis of the Schmidt modes around `center` (the signal center `ω_p/2`).
    pub fn basis(&self, center: f64, max_order: usize) -> Result<HermiteGaussBasis> {
        HermiteGaussBasis::new(center, self.basis_scale(), max_order)
    }
}

/// `f(ω_S, ω_I) = √(2/(πσε)) exp(−(ω_S+ω_I−ω_p)²/(2σ²) − (ω_S−ω_I)²/(2ε²))`.
pub fn jsa_eval(sigma_p: f64, epsilon: f64, omega_p: f64, omega_s: f64, omega_i: f64) -> f64 {
    let x = omega_s + omega_i - omega_p;
    let y = omega_s - omega_i;
    (2.0 / (std::f64::consts::PI * sigma_p * epsilon)).sqrt()
        * (-x * x / (2.0 * sigma_p * sigma_p) - y * y / (2.0 * epsilon * epsilon)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::hermite::GaussHermite;
    use approx::assert_relative_eq;

    #[test]
    fn baseline_schmidt_number_and_weights() {
        let sp = 2e8;
        let s = schmidt_spectrum(sp, 3.0 * sp, 1e-10).unwrap();
        assert_relative_eq!(s.schmidt_number(), 5.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(s.weights()[0], 3f64.sqrt() / 2.0, max_relative = 1e-14);
        for (m, r) in s.weights().iter().enumerate() {
            assert_relative_eq!(r * r, 0.75 * 0.25f64.powi(m as i32), max_relative = 1e-12);
        }
        let total: f64 = s.weights().iter().map(|r| r * r).sum();
        assert!((1.0 - 1e-10..=1.0 + 1e-14).contains(&total));
        assert!(s.tail_weight() <= 1e-10);
        // one order less would not meet the tolerance
        assert!(0.25f64.powi(s.order() as i32) > 1e-10);
    }

    #[test]
    fn separable_case() {
        let s = schmidt_spectrum(1.0, 1.0, 1e-10).unwrap();
        assert_eq!(s.order(), MIN_SCHMIDT_ORDER);
        assert_eq!(s.weights()[0], 1.0);
        assert!(s.weights()[1..].iter().all(|r| *r == 0.0));
        assert_eq!(s.schmidt_number(), 1.0);
    }

    #[test]
    fn floor_at_five_modes() {
        let s = schmidt_spectrum(1.0, 1.001, 1e-3).unwrap();
        assert_eq!(s.order(), 4);
    }

    #[test]
    fn invalid_inputs() {
        assert!(schmidt_spectrum(0.0, 1.0, 1e-10).is_err());
        assert!(schmidt_spectrum(1.0, -1.0, 1e-10).is_err());
        assert!(schmidt_spectrum(1.0, 2.0, 0.0).is_err());
        assert!(schmidt_spectrum(1.0, 2.0, 1.0).is_err());
        assert!(schmidt_spectrum(1.0, 1e12, 1e-10).is_err());
    }

    #[test]
    fn weights_strictly_decrease() {
        for (sp, eps) in [(1.0, 3.0), (5.0, 1.0), (1.0, 40.0)] {
            let s = schmidt_spectrum(sp, eps, 1e-12).unwrap();
            assert!(s.schmidt_number() > 1.0);
            for w in s.weights().windows(2) {
                assert!(w[1].abs() < w[0].abs());
            }
        }
    }

    #[test]
    fn jsa_peak_and_normalization() {
        let (sp, eps, wp) = (2.0, 6.0, 1000.0);
        let peak = jsa_eval(sp, eps, wp, wp / 2.0, wp / 2.0);
        assert_relative_eq!(
            peak,
            (2.0 / (std::f64::consts::PI * sp * eps)).sqrt(),
            max_relative = 1e-15
        );
        // ∫∫ f² via a product Gauss–Hermite rule on (ω_S, ω_I) scaled by the marginal width
        let rule = GaussHermite::new(80);
        let c = 2.0;
        let total = rule.integrate(|a| {
            rule.integrate(|b| {
                let f = jsa_eval(sp, eps, wp, wp / 2.0 + c * a, wp / 2.0 + c * b);
                f * f * c * c
            })
        });
        assert!((total - 1.0).abs() < 1e-8, "{total}");
    }

    #[test]
    fn marginal_matches_mode_sum() {
        // ∫ f² dω_I = Σ r_m² ψ_m(ω_S)²
        let (sp, eps, wp) = (1.0, 3.0, 500.0);
        let s = schmidt_spectrum(sp, eps, 1e-16).unwrap();
        let basis = s.basis(wp / 2.0, s.order()).unwrap();
        let rule = GaussHermite::new(120);
        let c = 1.0;
        for ws in [wp / 2.0 - 1.5, wp / 2.0, wp / 2.0 + 0.4, wp / 2.0 + 2.2] {
            let marginal = rule.integrate(|b| {
                let f = jsa_eval(sp, eps, wp, ws, wp / 2.0 + c * b);
                f * f * c
            });
            let modes: f64 = s
                .weights()
                .iter()
                .enumerate()
                .map(|(m, r)| r * r * basis.psi(m, ws).powi(2))
                .sum();
            assert_relative_eq!(marginal, modes, max_relative = 1e-9);
        }
        // marginal variance (σ² + ε²)/8 against Σ r_m² (2m+1)/(2s²)
        let var: f64 = s
            .weights()
            .iter()
            .enumerate()
            .map(|(m, r)| r * r * (2 * m + 1) as f64)
            .sum::<f64>()
            / (2.0 * s.basis_scale().powi(2));
        assert_relative_eq!(var, (sp * sp + eps * eps) / 8.0, max_relative = 1e-12);
    }
}
