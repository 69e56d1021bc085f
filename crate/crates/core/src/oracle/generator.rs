use crate::spectral::{
    hermite_gauss_derivative, hermite_gauss_eval, GaussHermite, HermiteGaussBasis,
};

/// `∫ ψ_k(ω) (½ψ_j(ω) + ω dψ_j/dω) dω` by Gauss–Hermite quadrature.
///
/// This is `d𝒰_μ[k, j]/dμ` at `μ = 1`, the sign convention of
/// [`crate::spectral::closed_form_generator`].
pub fn generator_by_quadrature(basis: &HermiteGaussBasis, k: usize, j: usize) -> f64 {
    let rule = GaussHermite::new(64.max(4 * (k.max(j) + 2)));
    let a = basis.omega0_s();
    // ψ_j(ω) = √s φ_j(y), dψ_j/dω = s^{3/2} φ_j'(y), ω = ω₀ + y/s, dω = dy/s
    rule.integrate(|y| {
        let fk = hermite_gauss_eval(k, y);
        fk * (0.5 * hermite_gauss_eval(j, y) + (a + y) * hermite_gauss_derivative(j, y))
    })
}
