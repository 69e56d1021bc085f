use nalgebra::{DMatrix, DVector};

use super::williamson::{symplectic_eigenvalues, Williamson};
use super::{checked_symmetric, omega};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiOptions {
    /// Phase-space dimension up to which the vectorized system is factorized
    /// directly; larger problems go through the Williamson normal form.
    pub direct_max_dim: usize,
    /// Symplectic eigenvalues must exceed `1 + purity_floor` when `d_cov ≠ 0`.
    pub purity_floor: f64,
}

impl Default for QfiOptions {
    fn default() -> Self {
        Self {
            direct_max_dim: 32,
            purity_floor: 1e-9,
        }
    }
}

/// QFI of a Gaussian family from its moments and their derivatives.
pub fn qfi_gaussian(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    d_mean: &DVector<f64>,
    d_cov: &DMatrix<f64>,
) -> Result<f64> {
    qfi_gaussian_with(mean, cov, d_mean, d_cov, &QfiOptions::default())
}

pub fn qfi_gaussian_with(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    d_mean: &DVector<f64>,
    d_cov: &DMatrix<f64>,
    opts: &QfiOptions,
) -> Result<f64> {
    let dim = cov.nrows();
    if dim == 0 || dim % 2 != 0 {
        return Err(invalid("covariance dimension must be even and nonzero"));
    }
    if mean.len() != dim || d_mean.len() != dim || d_cov.shape() != (dim, dim) {
        return Err(invalid(
            "mean, derivative and covariance dimensions disagree",
        ));
    }
    let cov = checked_symmetric(cov, "covariance")?;
    let d_cov = checked_symmetric(d_cov, "covariance derivative")?;

    let chol = cov
        .clone()
        .cholesky()
        .ok_or_else(|| invalid("covariance is not positive definite"))?;
    let first = 2.0 * d_mean.dot(&chol.solve(d_mean));

    if d_cov.iter().all(|&x| x == 0.0) {
        return Ok(first);
    }
    let nu = symplectic_eigenvalues(&cov)?;
    let min_excess = nu.iter().map(|v| v - 1.0).fold(f64::INFINITY, f64::min);
    if min_excess <= opts.purity_floor {
        return Err(Error::PureState { excess: min_excess });
    }
    let second = if dim <= opts.direct_max_dim {
        vectorized_term(&cov, &d_cov)?
    } else {
        williamson_covariance_term(&Williamson::decompose(&cov)?, &d_cov)?
    };
    Ok(first + second.max(0.0))
}

/// `½ vec(dσ)ᵀ (σ⊗σ − Ω⊗Ω)⁻¹ vec(dσ)` by LU of the Kronecker system.
fn vectorized_term(cov: &DMatrix<f64>, d_cov: &DMatrix<f64>) -> Result<f64> {
    let om = omega(cov.nrows() / 2);
    let m = cov.kronecker(cov) - om.kronecker(&om);
    // column-major storage is exactly the column-stacking vec
    let v = DVector::from_column_slice(d_cov.as_slice());
    let x = m.lu().solve(&v).ok_or(Error::PureState { excess: 0.0 })?;
    Ok(0.5 * v.dot(&x))
}

/// Relative size of `Â` entries treated as rounding noise on pure-pure blocks.
const PURE_NUMERATOR_TOL: f64 = 1e-12;

/// Covariance term of the QFI in the Williamson frame of `σ`.
///
/// With `Â = S⁻¹ dσ S⁻ᵀ` split into 2×2 blocks `b = Â_jk`:
/// `Σ_jk [(c_I² + c_Ω²)/(ν_jν_k − 1) + (c_Z² + c_X²)/(ν_jν_k + 1)]`,
/// where `c_I, c_Ω, c_Z, c_X` are the components of `b` along `I, Ω₁, Z, X`.
/// Terms between exactly pure modes are dropped when their numerator is at
/// rounding level relative to `Â` (the family keeps those modes pure);
/// otherwise the state is rejected.
pub fn williamson_covariance_term(w: &Williamson, d_cov: &DMatrix<f64>) -> Result<f64> {
    let n = w.mode_count();
    if d_cov.shape() != (2 * n, 2 * n) {
        return Err(invalid(
            "covariance derivative does not match the decomposition",
        ));
    }
    let a = w.to_normal_frame(d_cov);
    let e = w.excess();
    let negligible = (PURE_NUMERATOR_TOL * a.amax()).powi(2);
    let mut total = 0.0;
    for j in 0..n {
        for k in 0..n {
            let (p, q) = (2 * j, 2 * k);
            let (b11, b12, b21, b22) = (a[(p, q)], a[(p, q + 1)], a[(p + 1, q)], a[(p + 1, q + 1)]);
            let c_i = 0.5 * (b11 + b22);
            let c_o = 0.5 * (b12 - b21);
            let c_z = 0.5 * (b11 - b22);
            let c_x = 0.5 * (b12 + b21);
            let rot = c_i * c_i + c_o * c_o;
            let sq = c_z * c_z + c_x * c_x;
            // ν_jν_k − 1 without cancellation
            let minus = e[j] + e[k] + e[j] * e[k];
            if minus > 0.0 {
                total += rot / minus;
            } else if rot > negligible {
                return Err(Error::PureState {
                    excess: e[j].min(e[k]),
                });
            }
            total += sq / (2.0 + minus);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mixed(n: usize, rng: &mut ChaCha8Rng) -> (DMatrix<f64>, DMatrix<f64>) {
        let dim = 2 * n;
        let h = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-0.3..0.3));
        let s = (omega(n) * (&h + h.transpose())).exp();
        let d = DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                1.05 + (i / 2) as f64 * 0.7
            } else {
                0.0
            }
        });
        let cov = &s * d * s.transpose();
        let g = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
        let d_cov = &g + g.transpose();
        (cov, d_cov)
    }

    #[test]
    fn thermal_under_rotation_is_zero() {
        let cov = DMatrix::identity(2, 2) * 3.0;
        let z = DVector::zeros(2);
        // rotation generator: dσ = Gσ + σGᵀ with G = Ω₁ vanishes for σ ∝ I
        let g = omega(1);
        let d_cov = &g * &cov + &cov * g.transpose();
        assert_eq!(qfi_gaussian(&z, &cov, &z, &d_cov).unwrap(), 0.0);
    }

    #[test]
    fn coherent_displacement() {
        let cov = DMatrix::identity(2, 2);
        let dm = DVector::from_vec(vec![2f64.sqrt(), 0.0]);
        let q = qfi_gaussian(&DVector::zeros(2), &cov, &dm, &DMatrix::zeros(2, 2)).unwrap();
        assert_relative_eq!(q, 4.0, max_relative = 1e-14);
        let nb = 2.5;
        let q = qfi_gaussian(
            &DVector::zeros(2),
            &(cov * (2.0 * nb + 1.0)),
            &dm,
            &DMatrix::zeros(2, 2),
        )
        .unwrap();
        assert_relative_eq!(q, 4.0 / (2.0 * nb + 1.0), max_relative = 1e-14);
    }

    #[test]
    fn single_mode_squeezing_direction() {
        // σ = νI, dσ = ν·diag(2, −2): 4ν²/(ν² + 1)
        let nu = 1.7;
        let cov = DMatrix::identity(2, 2) * nu;
        let d_cov = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0 * nu, -2.0 * nu]));
        let z = DVector::zeros(2);
        let q = qfi_gaussian(&z, &cov, &z, &d_cov).unwrap();
        assert_relative_eq!(q, 4.0 * nu * nu / (nu * nu + 1.0), max_relative = 1e-13);
    }

    #[test]
    fn routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let forced = QfiOptions {
            direct_max_dim: 0,
            ..Default::default()
        };
        for n in 1..=6 {
            let (cov, d_cov) = random_mixed(n, &mut rng);
            let z = DVector::zeros(2 * n);
            let a = qfi_gaussian(&z, &cov, &z, &d_cov).unwrap();
            let b = qfi_gaussian_with(&z, &cov, &z, &d_cov, &forced).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-9);
        }
    }

    #[test]
    fn pure_state_rejected() {
        let cov = DMatrix::identity(2, 2);
        let d_cov = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        let z = DVector::zeros(2);
        assert!(matches!(
            qfi_gaussian(&z, &cov, &z, &d_cov),
            Err(Error::PureState { .. })
        ));
        // only the first-moment term: fine
        assert!(qfi_gaussian(
            &z,
            &cov,
            &DVector::from_vec(vec![1.0, 0.0]),
            &DMatrix::zeros(2, 2)
        )
        .is_ok());
    }

    #[test]
    fn asymmetric_derivative_rejected() {
        let cov = DMatrix::identity(2, 2) * 2.0;
        let mut d_cov = DMatrix::zeros(2, 2);
        d_cov[(0, 1)] = 1e-3;
        let z = DVector::zeros(2);
        assert!(matches!(
            qfi_gaussian(&z, &cov, &z, &d_cov),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn exact_zero_numerator_on_pure_modes_is_skipped() {
        // mode 0 thermal and moving, mode 1 vacuum and untouched
        let mut d_cov = DMatrix::zeros(4, 4);
        d_cov[(0, 0)] = 1.0;
        d_cov[(1, 1)] = -1.0;
        let w = Williamson::from_parts(
            vec![2.0, 0.0],
            DMatrix::identity(4, 4),
            DMatrix::identity(4, 4),
        )
        .unwrap();
        let q = williamson_covariance_term(&w, &d_cov).unwrap();
        // c_Z = 1 on the (0,0) block: 1/(ν² + 1)
        assert_relative_eq!(q, 1.0 / 10.0, max_relative = 1e-14);
        d_cov[(2, 2)] = 1e-3;
        d_cov[(3, 3)] = 1e-3;
        assert!(williamson_covariance_term(&w, &d_cov).is_err());
    }

    proptest::proptest! {
        #[test]
        fn invariant_under_passive_symplectic(seed in 0u64..500, n in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (cov, d_cov) = random_mixed(n, &mut rng);
            let dim = 2 * n;
            let dm = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
            // passive transform: exp(ΩH) with H commuting with Ω is orthogonal and symplectic
            let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let (ha, hb) = (&a + a.transpose(), &b - b.transpose());
            let mut h = DMatrix::zeros(dim, dim);
            for i in 0..n {
                for j in 0..n {
                    h[(2 * i, 2 * j)] = ha[(i, j)];
                    h[(2 * i + 1, 2 * j + 1)] = ha[(i, j)];
                    h[(2 * i, 2 * j + 1)] = hb[(i, j)];
                    h[(2 * i + 1, 2 * j)] = -hb[(i, j)];
                }
            }
            let s = (omega(n) * h).exp();
            proptest::prop_assert!((&s * s.transpose() - DMatrix::identity(dim, dim)).amax() < 1e-10);
            let z = DVector::zeros(dim);
            let q0 = qfi_gaussian(&z, &cov, &dm, &d_cov).unwrap();
            let cov2 = &s * &cov * s.transpose();
            let dcov2 = &s * &d_cov * s.transpose();
            let q1 = qfi_gaussian(&z, &super::super::symmetrized(&cov2), &(&s * &dm), &super::super::symmetrized(&dcov2)).unwrap();
            proptest::prop_assert!(((q1 - q0) / q0).abs() < 1e-8);
        }
    }
}
