//! Finite-mode Gaussian states and channels.

mod fidelity;
mod qfi;
mod williamson;

pub use fidelity::{gaussian_fidelity, gaussian_log_fidelity};
pub use qfi::{qfi_gaussian, qfi_gaussian_with, williamson_covariance_term, QfiOptions};
pub use williamson::{symplectic_eigenvalues, Williamson};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Entrywise asymmetry accepted (and then symmetrized away) on input.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Lowest eigenvalue tolerated for `cov + iΩ` and the CP test matrix.
pub const PHYSICALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModeRole {
    Signal,
    Idler,
    Aux,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeLabel {
    pub role: ModeRole,
    pub index: usize,
}

impl ModeLabel {
    pub fn signal(index: usize) -> Self {
        Self {
            role: ModeRole::Signal,
            index,
        }
    }

    pub fn idler(index: usize) -> Self {
        Self {
            role: ModeRole::Idler,
            index,
        }
    }

    pub fn aux(index: usize) -> Self {
        Self {
            role: ModeRole::Aux,
            index,
        }
    }
}

/// Ordered, labelled list of modes. Quadratures are interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeLayout {
    labels: Vec<ModeLabel>,
}

impl ModeLayout {
    pub fn new(labels: Vec<ModeLabel>) -> Result<Self> {
        if labels.is_empty() {
            return Err(invalid("mode layout needs at least one mode"));
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(invalid(format!("duplicate mode label {a:?}")));
            }
        }
        Ok(Self { labels })
    }

    /// Canonical layout: signals `0..n_signal`, then idlers `0..n_idler`.
    pub fn signal_idler(n_signal: usize, n_idler: usize) -> Result<Self> {
        let labels = (0..n_signal)
            .map(ModeLabel::signal)
            .chain((0..n_idler).map(ModeLabel::idler))
            .collect();
        Self::new(labels)
    }

    /// Pairwise layout `s0, i0, s1, i1, ...`.
    pub fn interleaved_pairs(n_pairs: usize) -> Result<Self> {
        let labels = (0..n_pairs)
            .flat_map(|m| [ModeLabel::signal(m), ModeLabel::idler(m)])
            .collect();
        Self::new(labels)
    }

    /// `n` auxiliary modes.
    pub fn aux(n: usize) -> Result<Self> {
        Self::new((0..n).map(ModeLabel::aux).collect())
    }

    pub fn count(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.labels.len()
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }

    pub fn position(&self, label: ModeLabel) -> Option<usize> {
        self.labels.iter().position(|l| *l == label)
    }

    /// True when no signal mode follows an idler mode.
    pub fn is_signal_first(&self) -> bool {
        let first_idler = self.labels.iter().position(|l| l.role == ModeRole::Idler);
        match first_idler {
            None => true,
            Some(k) => self.labels[k..].iter().all(|l| l.role != ModeRole::Signal),
        }
    }

    /// `perm[i]` is the position in `self` of the i-th mode of `target`.
    pub fn permutation_to(&self, target: &ModeLayout) -> Result<Vec<usize>> {
        if target.count() != self.count() {
            return Err(invalid("layouts have different mode counts"));
        }
        target
            .labels
            .iter()
            .map(|l| {
                self.position(*l)
                    .ok_or_else(|| invalid(format!("mode {l:?} missing from source layout")))
            })
            .collect()
    }
}

/// Block-diagonal symplectic form `⊕ [[0, 1], [-1, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    matrix: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn mode_count(&self) -> usize {
        self.matrix.nrows() / 2
    }
}

pub fn make_symplectic_form(mode_count: usize) -> Result<SymplecticForm> {
    if mode_count == 0 {
        return Err(invalid("symplectic form needs at least one mode"));
    }
    Ok(SymplecticForm {
        matrix: omega(mode_count),
    })
}

/// Symplectic form `⊕ [[0, 1], [−1, 0]]` on interleaved quadratures.
pub fn omega(mode_count: usize) -> DMatrix<f64> {
    let n = 2 * mode_count;
    let mut m = DMatrix::zeros(n, n);
    for k in 0..mode_count {
        m[(2 * k, 2 * k + 1)] = 1.0;
        m[(2 * k + 1, 2 * k)] = -1.0;
    }
    m
}

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Checks asymmetry against [`SYMMETRY_TOL`] and returns `(m + mᵀ)/2`.
pub(crate) fn checked_symmetric(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(invalid(format!("{what} is not square")));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(invalid(format!("{what} has non-finite entries")));
    }
    let asym = max_asymmetry(m);
    if asym > SYMMETRY_TOL {
        return Err(invalid(format!(
            "{what} asymmetry {asym:.3e} exceeds {SYMMETRY_TOL:e}"
        )));
    }
    Ok(symmetrized(m))
}

/// Smallest eigenvalue of the Hermitian matrix `a + i b` (`b` antisymmetric).
pub(crate) fn min_eig_hermitian(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let h = DMatrix::from_fn(n, n, |i, j| Complex64::new(a[(i, j)], b[(i, j)]));
    let eig = nalgebra::SymmetricEigen::new(h);
    eig.eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Minimum eigenvalue of `cov + iΩ`; nonnegative (up to rounding) iff physical.
pub fn physicality_margin(cov: &DMatrix<f64>) -> f64 {
    min_eig_hermitian(cov, &omega(cov.nrows() / 2))
}

/// Gaussian state: first moments and covariance over a mode layout.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    layout: ModeLayout,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Validates dimensions, symmetry and `cov + iΩ ≥ 0`.
    pub fn new(layout: ModeLayout, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let state = Self::new_unchecked_physicality(layout, mean, cov)?;
        let margin = physicality_margin(&state.cov);
        if margin < -PHYSICALITY_TOL {
            return Err(invalid(format!(
                "covariance violates the uncertainty principle (min eig of cov + iΩ = {margin:.3e})"
            )));
        }
        Ok(state)
    }

    /// Like [`GaussianState::new`] but skips the dense physicality test.
    ///
    /// For callers that establish physicality structurally (e.g. block by block).
    pub fn new_unchecked_physicality(
        layout: ModeLayout,
        mean: DVector<f64>,
        cov: DMatrix<f64>,
    ) -> Result<Self> {
        let dim = layout.dim();
        if mean.len() != dim || cov.nrows() != dim || cov.ncols() != dim {
            return Err(invalid(format!(
                "layout has dimension {dim}, got mean {} and cov {}x{}",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().any(|x| !x.is_finite()) {
            return Err(invalid("mean has non-finite entries"));
        }
        let cov = checked_symmetric(&cov, "covariance")?;
        Ok(Self { layout, mean, cov })
    }

    pub fn vacuum(layout: ModeLayout) -> Self {
        let dim = layout.dim();
        Self {
            layout,
            mean: DVector::zeros(dim),
            cov: DMatrix::identity(dim, dim),
        }
    }

    pub fn thermal(layout: ModeLayout, n_th: f64) -> Result<Self> {
        if !(n_th >= 0.0) || !n_th.is_finite() {
            return Err(invalid(format!(
                "thermal occupation must be >= 0, got {n_th}"
            )));
        }
        let dim = layout.dim();
        let cov = DMatrix::identity(dim, dim) * (2.0 * n_th + 1.0);
        Ok(Self {
            layout,
            mean: DVector::zeros(dim),
            cov,
        })
    }

    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn physicality_margin(&self) -> f64 {
        physicality_margin(&self.cov)
    }

    /// Same state with its modes listed in the order of `target`.
    pub fn reordered(&self, target: &ModeLayout) -> Result<Self> {
        let perm = self.layout.permutation_to(target)?;
        let idx: Vec<usize> = perm.iter().flat_map(|&p| [2 * p, 2 * p + 1]).collect();
        let dim = idx.len();
        let mean = DVector::from_fn(dim, |i, _| self.mean[idx[i]]);
        let cov = DMatrix::from_fn(dim, dim, |i, j| self.cov[(idx[i], idx[j])]);
        Ok(Self {
            layout: target.clone(),
            mean,
            cov,
        })
    }

    /// Applies a fixed symplectic matrix: mean ↦ S·mean, cov ↦ S·cov·Sᵀ.
    pub fn transformed(&self, s: &DMatrix<f64>) -> Result<Self> {
        if s.nrows() != self.dim() || s.ncols() != self.dim() {
            return Err(invalid("transform dimension mismatch"));
        }
        let cov = s * &self.cov * s.transpose();
        Ok(Self {
            layout: self.layout.clone(),
            mean: s * &self.mean,
            cov: symmetrized(&cov),
        })
    }
}

/// Gaussian channel `(X, Y)`: mean ↦ X·mean, cov ↦ X·cov·Xᵀ + Y.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChannel {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
}

impl GaussianChannel {
    /// Validates shapes, symmetry of `Y` and complete positivity.
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        let dim = x.nrows();
        if !x.is_square() || dim % 2 != 0 || dim == 0 {
            return Err(invalid("X must be square with even, nonzero dimension"));
        }
        if y.nrows() != dim || y.ncols() != dim {
            return Err(invalid("X and Y dimensions differ"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(invalid("X has non-finite entries"));
        }
        let y = checked_symmetric(&y, "Y")?;
        let channel = Self { x, y };
        let margin = channel.cp_margin();
        if margin < -PHYSICALITY_TOL {
            return Err(Error::InvalidChannel { min_eig: margin });
        }
        Ok(channel)
    }

    pub fn identity(mode_count: usize) -> Self {
        let dim = 2 * mode_count;
        Self {
            x: DMatrix::identity(dim, dim),
            y: DMatrix::zeros(dim, dim),
        }
    }

    /// Loss with transmissivity `eta` mixing in thermal light with `n_b` photons.
    ///
    /// `Y = (1 - eta)(2 n_b + 1)`: the environment occupation is `n_b`.
    pub fn thermal_loss(mode_count: usize, eta: f64, n_b: f64) -> Result<Self> {
        check_loss(eta, n_b)?;
        let dim = 2 * mode_count;
        Self::new(
            DMatrix::identity(dim, dim) * eta.sqrt(),
            DMatrix::identity(dim, dim) * ((1.0 - eta) * (2.0 * n_b + 1.0)),
        )
    }

    /// Loss whose output noise floor is `2 n_b + 1` regardless of `eta`:
    /// `Y = (2 n_b + 1 - eta)`.
    pub fn thermal_loss_rescaled(mode_count: usize, eta: f64, n_b: f64) -> Result<Self> {
        check_loss(eta, n_b)?;
        let dim = 2 * mode_count;
        Self::new(
            DMatrix::identity(dim, dim) * eta.sqrt(),
            DMatrix::identity(dim, dim) * (2.0 * n_b + 1.0 - eta),
        )
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn dim(&self) -> usize {
        self.x.nrows()
    }

    /// Minimum eigenvalue of `Y + iΩ − iXΩXᵀ`.
    pub fn cp_margin(&self) -> f64 {
        let om = omega(self.dim() / 2);
        let b = &om - &self.x * &om * self.x.transpose();
        min_eig_hermitian(&self.y, &b)
    }

    /// `Y = 0` and `XΩXᵀ = Ω` within 1e-10.
    pub fn is_unitary(&self) -> bool {
        let om = omega(self.dim() / 2);
        let y_zero = self.y.iter().all(|v| v.abs() <= 1e-10);
        let dev = (&self.x * &om * self.x.transpose() - om).amax();
        y_zero && dev <= 1e-10
    }

    /// Channel acting as `self` on the first modes and as the identity
    /// on `extra_modes` further modes.
    pub fn extended(&self, extra_modes: usize) -> Self {
        let d = self.dim();
        let n = d + 2 * extra_modes;
        let mut x = DMatrix::identity(n, n);
        let mut y = DMatrix::zeros(n, n);
        x.view_mut((0, 0), (d, d)).copy_from(&self.x);
        y.view_mut((0, 0), (d, d)).copy_from(&self.y);
        Self { x, y }
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &GaussianChannel) -> Result<Self> {
        if other.dim() != self.dim() {
            return Err(invalid("cannot compose channels of different dimension"));
        }
        let x = &other.x * &self.x;
        let y = &other.x * &self.y * other.x.transpose() + &other.y;
        Ok(Self {
            x,
            y: symmetrized(&y),
        })
    }
}

fn check_loss(eta: f64, n_b: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(invalid(format!(
            "transmissivity must lie in (0, 1], got {eta}"
        )));
    }
    if !(n_b >= 0.0) || !n_b.is_finite() {
        return Err(invalid(format!(
            "thermal occupation must be >= 0, got {n_b}"
        )));
    }
    Ok(())
}

pub fn apply_channel(state: &GaussianState, channel: &GaussianChannel) -> Result<GaussianState> {
    if state.dim() != channel.dim() {
        return Err(invalid(format!(
            "state dimension {} does not match channel dimension {}",
            state.dim(),
            channel.dim()
        )));
    }
    let mean = &channel.x * &state.mean;
    let cov = &channel.x * &state.cov * channel.x.transpose() + &channel.y;
    GaussianState::new(state.layout.clone(), mean, symmetrized(&cov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_mode_form() {
        let om = make_symplectic_form(1).unwrap();
        assert_eq!(
            om.matrix(),
            &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
        );
        assert!(make_symplectic_form(0).is_err());
    }

    #[test]
    fn form_is_orthogonal_and_squares_to_minus_one() {
        for m in 1..6 {
            let om = make_symplectic_form(m).unwrap().matrix().clone();
            let id = DMatrix::<f64>::identity(2 * m, 2 * m);
            assert_eq!(&om * om.transpose(), id);
            assert_eq!(&om * &om, -id);
            assert_eq!(om.transpose(), -&om);
        }
    }

    #[test]
    fn two_mode_form_is_direct_sum() {
        let om = make_symplectic_form(2).unwrap();
        let m = om.matrix();
        assert_eq!(m[(0, 1)], 1.0);
        assert_eq!(m[(2, 3)], 1.0);
        assert_eq!(m[(3, 2)], -1.0);
        assert_eq!(m[(0, 3)], 0.0);
        assert_eq!(m[(1, 2)], 0.0);
    }

    #[test]
    fn layout_rejects_duplicates() {
        let l = vec![ModeLabel::signal(0), ModeLabel::signal(0)];
        assert!(ModeLayout::new(l).is_err());
        let ok = ModeLayout::signal_idler(3, 2).unwrap();
        assert_eq!(ok.dim(), 10);
        assert!(ok.is_signal_first());
        assert!(!ModeLayout::interleaved_pairs(2).unwrap().is_signal_first());
    }

    #[test]
    fn reorder_round_trip() {
        let a = ModeLayout::signal_idler(2, 2).unwrap();
        let b = ModeLayout::interleaved_pairs(2).unwrap();
        let cov = DMatrix::from_fn(8, 8, |i, j| if i == j { 3.0 } else { 0.1 * (i + j) as f64 });
        let mean = DVector::from_fn(8, |i, _| i as f64);
        let s = GaussianState::new(a.clone(), mean, cov).unwrap();
        let t = s.reordered(&b).unwrap();
        // s1 sits at position 1 in `a`, position 2 in `b`
        assert_eq!(t.mean()[4], s.mean()[2]);
        assert_eq!(t.reordered(&a).unwrap(), s);
    }

    #[test]
    fn identity_channel_leaves_state() {
        let l = ModeLayout::aux(2).unwrap();
        let s = GaussianState::thermal(l, 0.7).unwrap();
        let out = apply_channel(&s, &GaussianChannel::identity(2)).unwrap();
        assert_eq!(out, s);
        assert!(GaussianChannel::identity(2).is_unitary());
    }

    #[test]
    fn thermal_loss_on_vacuum() {
        let (eta, nb) = (0.3, 2.5);
        let vac = GaussianState::vacuum(ModeLayout::aux(1).unwrap());
        let out = apply_channel(&vac, &GaussianChannel::thermal_loss(1, eta, nb).unwrap()).unwrap();
        let expected = eta + (1.0 - eta) * (2.0 * nb + 1.0);
        assert_abs_diff_eq!(out.cov()[(0, 0)], expected, epsilon = 1e-14);
        assert_abs_diff_eq!(out.cov()[(1, 1)], expected, epsilon = 1e-14);
        assert_abs_diff_eq!(out.cov()[(0, 1)], 0.0);

        let ch = GaussianChannel::thermal_loss_rescaled(1, eta, nb).unwrap();
        let out = apply_channel(&vac, &ch).unwrap();
        assert_abs_diff_eq!(out.cov()[(0, 0)], 2.0 * nb + 1.0, epsilon = 1e-14);
        assert!(!ch.is_unitary());
    }

    #[test]
    fn amplifier_without_noise_is_not_cp() {
        let x = DMatrix::identity(2, 2) * 1.5;
        let y = DMatrix::zeros(2, 2);
        assert!(matches!(
            GaussianChannel::new(x, y),
            Err(Error::InvalidChannel { .. })
        ));
    }

    #[test]
    fn unphysical_state_rejected() {
        let cov = DMatrix::identity(2, 2) * 0.5;
        let r = GaussianState::new(ModeLayout::aux(1).unwrap(), DVector::zeros(2), cov);
        assert!(r.is_err());
    }

    #[test]
    fn asymmetric_covariance_rejected() {
        let mut cov = DMatrix::identity(2, 2);
        cov[(0, 1)] = 1e-6;
        let r = GaussianState::new(ModeLayout::aux(1).unwrap(), DVector::zeros(2), cov);
        assert!(r.is_err());
    }

    #[test]
    fn channel_composition_matches_sequential_application() {
        let a = GaussianChannel::thermal_loss(1, 0.4, 1.0).unwrap();
        let b = GaussianChannel::thermal_loss_rescaled(1, 0.8, 0.2).unwrap();
        let s = GaussianState::thermal(ModeLayout::aux(1).unwrap(), 3.0).unwrap();
        let seq = apply_channel(&apply_channel(&s, &a).unwrap(), &b).unwrap();
        let comp = apply_channel(&s, &a.then(&b).unwrap()).unwrap();
        assert!((seq.cov() - comp.cov()).amax() < 1e-13);
    }
}
