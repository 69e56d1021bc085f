use nalgebra::DMatrix;

use super::hermite::{hermite_gauss_all, hermite_gauss_eval, GaussHermite};
use crate::error::{invalid, Error, Result};

/// Scaled Hermite–Gauss basis `ψ_m(ω) = √s·φ_m(s(ω − ω₀))`, `m = 0..=M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermiteGaussBasis {
    center_frequency: f64,
    scale: f64,
    max_order: usize,
}

impl HermiteGaussBasis {
    pub fn new(center_frequency: f64, scale: f64, max_order: usize) -> Result<Self> {
        if !(center_frequency > 0.0 && center_frequency.is_finite()) {
            return Err(invalid(format!(
                "center frequency must be positive, got {center_frequency}"
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid(format!(
                "basis scale must be positive, got {scale}"
            )));
        }
        let basis = Self {
            center_frequency,
            scale,
            max_order,
        };
        if basis.omega0_s() < 10.0 {
            log::warn!(
                "basis is not narrowband: omega0*s = {:.3}",
                basis.omega0_s()
            );
        }
        Ok(basis)
    }

    pub fn center_frequency(&self) -> f64 {
        self.center_frequency
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn size(&self) -> usize {
        self.max_order + 1
    }

    /// The single dimensionless group of the problem.
    pub fn omega0_s(&self) -> f64 {
        self.center_frequency * self.scale
    }

    /// Scaled variable `y = s(ω − ω₀)`.
    pub fn scaled(&self, omega: f64) -> f64 {
        self.scale * (omega - self.center_frequency)
    }

    pub fn psi(&self, m: usize, omega: f64) -> f64 {
        self.scale.sqrt() * hermite_gauss_eval(m, self.scaled(omega))
    }

    /// Same center and scale, different truncation.
    pub fn with_max_order(&self, max_order: usize) -> Self {
        Self { max_order, ..*self }
    }
}

/// Default Gauss–Hermite order for a basis of `size` functions.
pub fn default_quad_order(size: usize) -> usize {
    64.max(4 * size)
}

/// `𝒰_μ[k, j] = μ^{1/2} ∫ ψ_k(ω) ψ_j(μω) dω`, with `𝒰₁ = I`.
///
/// In the scaled variable the integrand is `φ_k(y)·φ_j(μy + ω₀s(μ − 1))`.
pub fn doppler_unitary_matrix(
    basis: &HermiteGaussBasis,
    mu: f64,
    quad_order: usize,
) -> Result<DMatrix<f64>> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(invalid(format!(
            "Doppler factor must be positive, got {mu}"
        )));
    }
    let n = basis.size();
    let rule = GaussHermite::new(quad_order.max(n + 1));
    let shift = basis.omega0_s() * (mu - 1.0);
    let mut u = DMatrix::zeros(n, n);
    for (&y, &w) in rule.nodes().iter().zip(rule.scaled_weights()) {
        let a = hermite_gauss_all(n - 1, y);
        let b = hermite_gauss_all(n - 1, mu * y + shift);
        for j in 0..n {
            let wb = w * b[j];
            for k in 0..n {
                u[(k, j)] += a[k] * wb;
            }
        }
    }
    Ok(u * mu.sqrt())
}

/// Closed-form `d𝒰_μ/dμ` at `μ = 1` for `size` basis functions:
/// `ω₀s (a − a†)/√2 + (a² − a†²)/2` in the ladder basis.
pub fn closed_form_generator(omega0_s: f64, size: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(size, size);
    for j in 0..size {
        let jf = j as f64;
        if j >= 1 {
            d[(j - 1, j)] = omega0_s * (jf / 2.0).sqrt();
        }
        if j + 1 < size {
            d[(j + 1, j)] = -omega0_s * ((jf + 1.0) / 2.0).sqrt();
        }
        if j >= 2 {
            d[(j - 2, j)] = (jf * (jf - 1.0)).sqrt() / 2.0;
        }
        if j + 2 < size {
            d[(j + 2, j)] = -((jf + 1.0) * (jf + 2.0)).sqrt() / 2.0;
        }
    }
    d
}

/// Generator of the Doppler reshuffling on a Hermite–Gauss basis.
#[derive(Debug, Clone)]
pub struct DopplerGenerator {
    basis: HermiteGaussBasis,
    d: DMatrix<f64>,
}

impl DopplerGenerator {
    pub fn basis(&self) -> &HermiteGaussBasis {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.d
    }

    /// Antisymmetry and the `|k − j| ∈ {1, 2}` selection rule.
    pub fn validate(&self) -> Result<()> {
        let n = self.d.nrows();
        let mut asym = 0.0_f64;
        for k in 0..n {
            for j in 0..n {
                asym = asym.max((self.d[(k, j)] + self.d[(j, k)]).abs());
                let gap = k.abs_diff(j);
                if gap != 1 && gap != 2 && self.d[(k, j)] != 0.0 {
                    return Err(Error::InternalConsistency(format!(
                        "generator entry ({k},{j}) violates the selection rule"
                    )));
                }
            }
        }
        if asym > 1e-10 {
            return Err(Error::InternalConsistency(format!(
                "generator asymmetry {asym:.3e}"
            )));
        }
        Ok(())
    }
}

/// Builds `D` at order `M + 2` and keeps the `(M+1)²` block.
pub fn doppler_generator(basis: &HermiteGaussBasis) -> DopplerGenerator {
    let padded = closed_form_generator(basis.omega0_s(), basis.size() + 2);
    let n = basis.size();
    DopplerGenerator {
        basis: *basis,
        d: padded.view((0, 0), (n, n)).into_owned(),
    }
}
