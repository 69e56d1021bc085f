use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use super::{omega, GaussianState, PHYSICALITY_TOL};
use crate::error::{invalid, Error, Result};

/// Uhlmann (root) fidelity `Tr√(√ρ_a ρ_b √ρ_a)` of two Gaussian states.
pub fn gaussian_fidelity(a: &GaussianState, b: &GaussianState) -> Result<f64> {
    gaussian_log_fidelity(a, b).map(f64::exp)
}

/// Natural log of [`gaussian_fidelity`]; use `-expm1` of it for `1 − F`.
///
/// Auxiliary-matrix form: with `V = σ/2`, `V_s = V_a + V_b` and
/// `V_aux = Ωᵀ V_s⁻¹ (Ω/4 + V_b Ω V_a)`,
/// `F⁴ = det[2(√(1 + (V_aux Ω)⁻²/4) + 1) V_aux] / det V_s · exp(−dᵀ(σ_a+σ_b)⁻¹d)²`.
pub fn gaussian_log_fidelity(a: &GaussianState, b: &GaussianState) -> Result<f64> {
    if a.layout() != b.layout() {
        return Err(invalid("fidelity needs states on the same layout"));
    }
    for (s, name) in [(a, "first"), (b, "second")] {
        let margin = s.physicality_margin();
        if margin < -PHYSICALITY_TOL {
            return Err(invalid(format!(
                "{name} state is unphysical (margin {margin:.3e})"
            )));
        }
    }
    let dim = a.dim();
    let n = dim / 2;
    let om = omega(n);
    let va = a.cov() * 0.5;
    let vb = b.cov() * 0.5;
    let vs = &va + &vb;

    let lu = vs.clone().lu();
    let log_det_vs = log_abs_det(&lu.u());
    let rhs = &om * 0.25 + &vb * &om * &va;
    let inner = lu
        .solve(&rhs)
        .ok_or_else(|| invalid("σ_a + σ_b is singular"))?;
    let v_aux = om.transpose() * inner;

    let log_det_aux = log_abs_det(&v_aux.clone().lu().u());
    let lambda = eigenvalues(&v_aux * &om)?;
    let one = Complex64::new(1.0, 0.0);
    let log_sum: f64 = lambda
        .iter()
        .map(|l| {
            let w = one / (*l * *l * 4.0);
            ((one + w).sqrt() + one).ln().re
        })
        .sum();
    let log_det_f = dim as f64 * std::f64::consts::LN_2 + log_sum + log_det_aux;

    let d = b.mean() - a.mean();
    let disp = if d.iter().all(|&x| x == 0.0) {
        0.0
    } else {
        // (σ_a + σ_b)⁻¹ = V_s⁻¹ / 2
        0.25 * d.dot(
            &lu.solve(&d)
                .ok_or_else(|| invalid("σ_a + σ_b is singular"))?,
        )
    };
    Ok(0.25 * (log_det_f - log_det_vs) - disp)
}

/// Eigenvalues of a general real matrix. The shifted QR iteration can stall on
/// the sparse, degenerate matrices met here; a fixed dense orthogonal
/// similarity breaks the structure without changing the spectrum.
fn eigenvalues(m: DMatrix<f64>) -> Result<Vec<Complex64>> {
    const MAX_ITER: usize = 20_000;
    let n = m.nrows();
    if let Some(schur) = Schur::try_new(m.clone(), f64::EPSILON, MAX_ITER) {
        return Ok(schur.complex_eigenvalues().iter().copied().collect());
    }
    let g = DMatrix::from_fn(n, n, |i, j| {
        ((7 * i + 13 * j + 1) as f64 * 0.618_033_988_75).sin()
    });
    let q = g.qr().q();
    let rotated = q.transpose() * m * &q;
    Schur::try_new(rotated, f64::EPSILON, MAX_ITER)
        .map(|schur| schur.complex_eigenvalues().iter().copied().collect())
        .ok_or_else(|| Error::InternalConsistency("eigenvalue iteration did not converge".into()))
}

fn log_abs_det(u: &DMatrix<f64>) -> f64 {
    u.diagonal().iter().map(|x| x.abs().ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{apply_channel, GaussianChannel, ModeLayout};
    use approx::assert_relative_eq;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn state(n: usize, mean: Vec<f64>, cov: DMatrix<f64>) -> GaussianState {
        GaussianState::new(ModeLayout::aux(n).unwrap(), DVector::from_vec(mean), cov).unwrap()
    }

    fn random_state(n: usize, rng: &mut ChaCha8Rng, min_nu: f64) -> GaussianState {
        let dim = 2 * n;
        let h = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-0.3..0.3));
        let s = (omega(n) * (&h + h.transpose())).exp();
        let d = DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                min_nu + (i / 2) as f64 * 0.4
            } else {
                0.0
            }
        });
        let cov = &s * d * s.transpose();
        let cov = (&cov + cov.transpose()) * 0.5;
        let mean = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        state(n, mean, cov)
    }

    #[test]
    fn identical_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..5 {
            let s = random_state(n, &mut rng, 1.3);
            assert!((gaussian_fidelity(&s, &s).unwrap() - 1.0).abs() < 1e-10);
        }
        let v = GaussianState::vacuum(ModeLayout::aux(2).unwrap());
        assert!((gaussian_fidelity(&v, &v).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_states() {
        let d = [0.3, -1.1, 0.7, 0.2];
        let a = state(2, vec![0.0; 4], DMatrix::identity(4, 4));
        let b = state(2, d.to_vec(), DMatrix::identity(4, 4));
        let d2: f64 = d.iter().map(|x| x * x).sum();
        assert_relative_eq!(
            gaussian_fidelity(&a, &b).unwrap(),
            (-d2 / 4.0).exp(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn vacuum_versus_thermal() {
        for nb in [0.1, 1.0, 7.5] {
            let v = GaussianState::vacuum(ModeLayout::aux(1).unwrap());
            let t = GaussianState::thermal(ModeLayout::aux(1).unwrap(), nb).unwrap();
            let f = gaussian_fidelity(&v, &t).unwrap();
            assert_relative_eq!(f, 1.0 / (nb + 1.0).sqrt(), max_relative = 1e-12);
        }
    }

    #[test]
    fn thermal_versus_thermal() {
        // single-mode closed form with ν = 2N + 1
        let (n1, n2) = (0.4_f64, 2.2_f64);
        let a = GaussianState::thermal(ModeLayout::aux(1).unwrap(), n1).unwrap();
        let b = GaussianState::thermal(ModeLayout::aux(1).unwrap(), n2).unwrap();
        let expected = 1.0 / (((n1 + 1.0) * (n2 + 1.0)).sqrt() - (n1 * n2).sqrt());
        assert_relative_eq!(
            gaussian_fidelity(&a, &b).unwrap(),
            expected,
            max_relative = 1e-11
        );
    }

    #[test]
    fn pure_state_overlap() {
        // pure states: F = (Tr ρ_a ρ_b)^{1/2} = (2ⁿ/√det(σ_a+σ_b))^{1/2} e^{−dᵀ(σ_a+σ_b)⁻¹d/2}
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..4 {
            let dim = 2 * n;
            let mut pure = || {
                let h = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-0.3..0.3));
                let s = (omega(n) * (&h + h.transpose())).exp();
                let cov = &s * s.transpose();
                let mean = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                state(n, mean, (&cov + cov.transpose()) * 0.5)
            };
            let (a, b) = (pure(), pure());
            let sum = a.cov() + b.cov();
            let d = b.mean() - a.mean();
            let quad = d.dot(&sum.clone().lu().solve(&d).unwrap());
            let tr = 2f64.powi(n as i32) / sum.determinant().sqrt() * (-quad).exp();
            // pure inputs sit on the branch point of √(1 + w): only ~√eps accuracy
            assert_relative_eq!(
                gaussian_fidelity(&a, &b).unwrap(),
                tr.sqrt(),
                max_relative = 1e-7
            );
        }
    }

    #[test]
    fn symmetric_bounded_and_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let a1 = random_state(1, &mut rng, 1.2);
            let b1 = random_state(1, &mut rng, 1.5);
            let a2 = random_state(2, &mut rng, 1.1);
            let b2 = random_state(2, &mut rng, 1.4);
            let fab = gaussian_fidelity(&a1, &b1).unwrap();
            let fba = gaussian_fidelity(&b1, &a1).unwrap();
            assert!((fab - fba).abs() < 1e-12);
            assert!(fab <= 1.0 + 1e-12);
            // product states factorize
            let join = |x: &GaussianState, y: &GaussianState| {
                let mut cov = DMatrix::zeros(6, 6);
                cov.view_mut((0, 0), (2, 2)).copy_from(x.cov());
                cov.view_mut((2, 2), (4, 4)).copy_from(y.cov());
                let mean: Vec<f64> = x.mean().iter().chain(y.mean().iter()).copied().collect();
                state(3, mean, cov)
            };
            let f12 = gaussian_fidelity(&join(&a1, &a2), &join(&b1, &b2)).unwrap();
            let f2 = gaussian_fidelity(&a2, &b2).unwrap();
            assert_relative_eq!(f12, fab * f2, max_relative = 1e-10);
        }
    }

    #[test]
    fn invariant_under_common_symplectic() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random_state(3, &mut rng, 1.2);
        let b = random_state(3, &mut rng, 1.6);
        let h = DMatrix::from_fn(6, 6, |_, _| rng.gen_range(-0.3..0.3));
        let s = (omega(3) * (&h + h.transpose())).exp();
        let f0 = gaussian_fidelity(&a, &b).unwrap();
        let f1 =
            gaussian_fidelity(&a.transformed(&s).unwrap(), &b.transformed(&s).unwrap()).unwrap();
        assert_relative_eq!(f0, f1, max_relative = 1e-10);
    }

    #[test]
    fn data_processing_under_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_state(2, &mut rng, 1.1);
        let b = random_state(2, &mut rng, 1.3);
        let ch = GaussianChannel::thermal_loss(2, 0.6, 0.5).unwrap();
        let f0 = gaussian_fidelity(&a, &b).unwrap();
        let f1 = gaussian_fidelity(
            &apply_channel(&a, &ch).unwrap(),
            &apply_channel(&b, &ch).unwrap(),
        )
        .unwrap();
        assert!(f1 >= f0 - 1e-12);
    }
}
