use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{checked_symmetric, omega};
use crate::error::{invalid, Error, Result};

/// Williamson normal form `cov = S · diag(ν₁, ν₁, ν₂, ν₂, …) · Sᵀ`.
///
/// `excess[j] = ν_j − 1` is stored separately so that callers which know it
/// analytically can keep full relative precision near pure modes.
#[derive(Debug, Clone)]
pub struct Williamson {
    excess: Vec<f64>,
    s: DMatrix<f64>,
    s_inv: DMatrix<f64>,
}

impl Williamson {
    /// Assembles a decomposition from known parts.
    ///
    /// `s` must be symplectic and `s_inv` its inverse; only shapes are checked.
    pub fn from_parts(excess: Vec<f64>, s: DMatrix<f64>, s_inv: DMatrix<f64>) -> Result<Self> {
        let dim = 2 * excess.len();
        if dim == 0 || s.shape() != (dim, dim) || s_inv.shape() != (dim, dim) {
            return Err(invalid("Williamson parts have inconsistent dimensions"));
        }
        if excess.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
            return Err(invalid("symplectic eigenvalues must be >= 1"));
        }
        Ok(Self { excess, s, s_inv })
    }

    /// Numerical decomposition of a positive-definite covariance matrix.
    pub fn decompose(cov: &DMatrix<f64>) -> Result<Self> {
        let cov = checked_symmetric(cov, "covariance")?;
        let dim = cov.nrows();
        if dim == 0 || dim % 2 != 0 {
            return Err(invalid("covariance dimension must be even and nonzero"));
        }
        let n = dim / 2;
        let (sqrt, isqrt) = sqrt_and_inverse_sqrt(&cov)?;

        // K = σ^{1/2} Ω σ^{1/2} is antisymmetric; KᵀK has eigenvalues ν², each twice.
        let k = &sqrt * omega(n) * &sqrt;
        let eig = SymmetricEigen::new(k.transpose() * &k);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(dim);
        let mut nus: Vec<f64> = Vec::with_capacity(n);
        let mut start = 0;
        while start < dim && nus.len() < n {
            // group of (numerically) degenerate eigenvalues
            let lead = eig.eigenvalues[order[start]];
            let mut end = start + 1;
            while end < dim && (lead - eig.eigenvalues[order[end]]).abs() <= 1e-9 * lead.abs() {
                end += 1;
            }
            let mut pool: Vec<DVector<f64>> = order[start..end]
                .iter()
                .map(|&i| eig.eigenvectors.column(i).into_owned())
                .collect();
            loop {
                // greedy: the candidate with the largest component outside the chosen span
                let best = pool
                    .iter()
                    .map(|v| project_out(v, &basis))
                    .enumerate()
                    .map(|(i, r)| (i, r.norm(), r))
                    .max_by(|a, b| a.1.total_cmp(&b.1));
                let Some((i, norm, r)) = best else { break };
                if norm < 0.5 || nus.len() == n {
                    break;
                }
                pool.swap_remove(i);
                let u = project_out(&(r / norm), &basis).normalize();
                let ku = &k * &u;
                let nu = ku.norm();
                let w = project_out(&(ku / nu), &basis);
                let w = (&w - &u * u.dot(&w)).normalize();
                basis.push(w);
                basis.push(u);
                nus.push(nu);
            }
            start = end;
        }
        if nus.len() != n {
            return Err(Error::InternalConsistency(format!(
                "Williamson basis construction found {} of {n} modes",
                nus.len()
            )));
        }

        let o = DMatrix::from_columns(&basis);
        let mut s = &sqrt * &o;
        let mut s_inv = o.transpose() * &isqrt;
        for (j, nu) in nus.iter().enumerate() {
            let f = nu.sqrt();
            for c in [2 * j, 2 * j + 1] {
                s.column_mut(c).scale_mut(1.0 / f);
                s_inv.row_mut(c).scale_mut(f);
            }
        }
        let excess = nus.iter().map(|nu| (nu - 1.0).max(0.0)).collect();
        Ok(Self { excess, s, s_inv })
    }

    pub fn mode_count(&self) -> usize {
        self.excess.len()
    }

    /// Symplectic eigenvalues in storage order.
    pub fn nu(&self) -> Vec<f64> {
        self.excess.iter().map(|e| 1.0 + e).collect()
    }

    pub fn excess(&self) -> &[f64] {
        &self.excess
    }

    pub fn symplectic(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn symplectic_inverse(&self) -> &DMatrix<f64> {
        &self.s_inv
    }

    /// `S⁻¹ · a · S⁻ᵀ`: a symmetric matrix expressed in the normal-mode frame.
    pub fn to_normal_frame(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        &self.s_inv * a * self.s_inv.transpose()
    }

    /// Rebuilds `S · diag(ν) · Sᵀ`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let mut sd = self.s.clone();
        for (j, e) in self.excess.iter().enumerate() {
            sd.column_mut(2 * j).scale_mut(1.0 + e);
            sd.column_mut(2 * j + 1).scale_mut(1.0 + e);
        }
        sd * self.s.transpose()
    }
}

fn project_out(v: &DVector<f64>, basis: &[DVector<f64>]) -> DVector<f64> {
    let mut r = v.clone();
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(&r);
            r.axpy(-c, b, 1.0);
        }
    }
    r
}

fn sqrt_and_inverse_sqrt(cov: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let eig = SymmetricEigen::new(cov.clone());
    let min = eig.eigenvalues.min();
    if !(min > 0.0) {
        return Err(invalid(format!(
            "covariance is not positive definite (min eigenvalue {min:.3e})"
        )));
    }
    let q = &eig.eigenvectors;
    let sq = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let isq = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Ok((q * sq * q.transpose(), q * isq * q.transpose()))
}

/// Symplectic eigenvalues of `cov`, descending, one per mode.
pub fn symplectic_eigenvalues(cov: &DMatrix<f64>) -> Result<Vec<f64>> {
    let cov = checked_symmetric(cov, "covariance")?;
    let dim = cov.nrows();
    if dim == 0 || dim % 2 != 0 {
        return Err(invalid("covariance dimension must be even and nonzero"));
    }
    let (sqrt, _) = sqrt_and_inverse_sqrt(&cov)?;
    let k = &sqrt * omega(dim / 2) * &sqrt;
    let mut ev: Vec<f64> = SymmetricEigen::new(k.transpose() * &k)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev
        .chunks(2)
        .map(|p| (0.5 * (p[0] + p[1])).max(0.0).sqrt())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symplectic(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let dim = 2 * n;
        let h = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-0.4..0.4));
        let h = &h + h.transpose();
        (omega(n) * h).exp()
    }

    #[test]
    fn thermal_and_vacuum() {
        let nu = symplectic_eigenvalues(&(DMatrix::identity(4, 4) * 5.0)).unwrap();
        assert!(nu.iter().all(|v| (v - 5.0).abs() < 1e-12));
        let nu = symplectic_eigenvalues(&DMatrix::identity(6, 6)).unwrap();
        assert_eq!(nu.len(), 3);
        assert!(nu.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn two_mode_squeezed_vacuum_is_pure() {
        let r = 0.8_f64;
        let cov = DMatrix::from_row_slice(
            4,
            4,
            &[
                (2.0 * r).cosh(),
                0.0,
                (2.0 * r).sinh(),
                0.0,
                0.0,
                (2.0 * r).cosh(),
                0.0,
                -(2.0 * r).sinh(),
                (2.0 * r).sinh(),
                0.0,
                (2.0 * r).cosh(),
                0.0,
                0.0,
                -(2.0 * r).sinh(),
                0.0,
                (2.0 * r).cosh(),
            ],
        );
        let nu = symplectic_eigenvalues(&cov).unwrap();
        assert!(nu.iter().all(|v| (v - 1.0).abs() < 1e-10), "{nu:?}");
    }

    #[test]
    fn decomposition_reconstructs_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=5 {
            let s = random_symplectic(n, &mut rng);
            let mut nus: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..4.0)).collect();
            if n > 2 {
                nus[1] = nus[0]; // exercise a degenerate pair
            }
            let d = DMatrix::from_fn(2 * n, 2 * n, |i, j| if i == j { nus[i / 2] } else { 0.0 });
            let cov = &s * d * s.transpose();
            let w = Williamson::decompose(&cov).unwrap();
            assert!((w.covariance() - &cov).amax() < 1e-9 * cov.amax());
            let om = omega(n);
            let ws = w.symplectic();
            assert!((ws * &om * ws.transpose() - &om).amax() < 1e-9);
            assert!((ws * w.symplectic_inverse() - DMatrix::identity(2 * n, 2 * n)).amax() < 1e-9);
            let mut got = w.nu();
            got.sort_by(|a, b| b.total_cmp(a));
            nus.sort_by(|a, b| b.total_cmp(a));
            for (g, e) in got.iter().zip(&nus) {
                assert!((g - e).abs() < 1e-9);
            }
            let sym = symplectic_eigenvalues(&cov).unwrap();
            for (g, e) in sym.iter().zip(&nus) {
                assert!((g - e).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_asymmetric_and_indefinite() {
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = 0.1;
        assert!(symplectic_eigenvalues(&m).is_err());
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        assert!(Williamson::decompose(&m).is_err());
    }
}
