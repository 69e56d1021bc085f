use nalgebra::{DMatrix, DVector};

use super::scenario::ScenarioParams;
use crate::error::{invalid, Error, Result};
use crate::spectral::{doppler_generator, HermiteGaussBasis, SchmidtSpectrum};
use crate::symplectic::{williamson_covariance_term, GaussianState, ModeLayout, Williamson};

/// Thermal signal modes appended above the Schmidt modes, so that the
/// next-nearest coupling of the generator does not leave the basis.
pub const SIGNAL_PADDING: usize = 2;

/// Which moment of the signal photon flux defines the pulse duration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DurationConvention {
    /// Variance of the normalized photon flux in time:
    /// `ΔT² = s²·Σ(n + ½)N_n / ΣN_n`.
    #[default]
    FluxVariance,
    /// `ΔT² = s²·Σ n·N_n / ΣN_n`; vanishes for a single Schmidt mode.
    ModeIndex,
}

impl DurationConvention {
    pub fn name(&self) -> &'static str {
        match self {
            Self::FluxVariance => "flux-variance",
            Self::ModeIndex => "mode-index",
        }
    }
}

impl std::str::FromStr for DurationConvention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "flux-variance" => Ok(Self::FluxVariance),
            "mode-index" => Ok(Self::ModeIndex),
            _ => Err(format!(
                "unknown duration convention '{s}' (expected flux-variance or mode-index)"
            )),
        }
    }
}

/// SPDC probe: Schmidt spectrum plus squeezing `ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct QdrProbe {
    spectrum: SchmidtSpectrum,
    xi: f64,
    photons: Vec<f64>,
}

impl QdrProbe {
    pub fn new(spectrum: SchmidtSpectrum, xi: f64) -> Result<Self> {
        if !(xi > 0.0 && xi.is_finite()) {
            return Err(invalid(format!(
                "squeezing parameter must be positive, got {xi}"
            )));
        }
        let photons = spectrum
            .weights()
            .iter()
            .map(|r| (xi * r).sinh().powi(2))
            .collect();
        Ok(Self {
            spectrum,
            xi,
            photons,
        })
    }

    pub fn spectrum(&self) -> &SchmidtSpectrum {
        &self.spectrum
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// Mean signal photons per Schmidt mode, `sinh²(ξ r_m)`.
    pub fn photons(&self) -> &[f64] {
        &self.photons
    }

    pub fn pairs(&self) -> usize {
        self.photons.len()
    }

    pub fn n_s(&self) -> f64 {
        self.photons.iter().sum()
    }

    pub fn duration(&self, convention: DurationConvention) -> Result<f64> {
        let offset = match convention {
            DurationConvention::FluxVariance => 0.5,
            DurationConvention::ModeIndex => 0.0,
        };
        let n_s = self.n_s();
        let weighted: f64 = self
            .photons
            .iter()
            .enumerate()
            .map(|(n, p)| (n as f64 + offset) * p)
            .sum();
        if !(n_s > 0.0) || !(weighted > 0.0) {
            return Err(Error::DegenerateDuration(format!(
                "pulse duration vanishes under the {} convention (K = {})",
                convention.name(),
                self.spectrum.schmidt_number()
            )));
        }
        Ok(self.spectrum.basis_scale() * (weighted / n_s).sqrt())
    }

    /// Transmitted pure state over `M+1` signal and `M+1` idler modes (signal first).
    pub fn spdc_state(&self) -> Result<GaussianState> {
        let n = self.pairs();
        let layout = ModeLayout::signal_idler(n, n)?;
        let mut cov = DMatrix::identity(4 * n, 4 * n);
        for (m, &p) in self.photons.iter().enumerate() {
            let (s, i) = (2 * m, 2 * (n + m));
            let var = 2.0 * p + 1.0;
            let c = 2.0 * (p * (p + 1.0)).sqrt();
            set_pair(&mut cov, s, i, var, var, c);
        }
        GaussianState::new_unchecked_physicality(layout, DVector::zeros(4 * n), cov)
    }
}

fn set_pair(cov: &mut DMatrix<f64>, s: usize, i: usize, a: f64, b: f64, c: f64) {
    cov[(s, s)] = a;
    cov[(s + 1, s + 1)] = a;
    cov[(i, i)] = b;
    cov[(i + 1, i + 1)] = b;
    cov[(s, i)] = c;
    cov[(i, s)] = c;
    cov[(s + 1, i + 1)] = -c;
    cov[(i + 1, s + 1)] = -c;
}

/// Received QDR state at `μ = 1` with its derivative and normal form.
#[derive(Debug, Clone)]
pub struct ReceivedQdr {
    state: GaussianState,
    d_cov: DMatrix<f64>,
    williamson: Williamson,
    pairs: usize,
}

impl ReceivedQdr {
    pub fn state(&self) -> &GaussianState {
        &self.state
    }

    /// `∂σ_r/∂μ` at `μ = 1`.
    pub fn d_cov(&self) -> &DMatrix<f64> {
        &self.d_cov
    }

    pub fn williamson(&self) -> &Williamson {
        &self.williamson
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    pub fn signal_modes(&self) -> usize {
        self.pairs + SIGNAL_PADDING
    }

    /// QFI at `μ = 1` (zero first moments, covariance term only).
    pub fn qfi_unit(&self) -> Result<f64> {
        williamson_covariance_term(&self.williamson, &self.d_cov)
    }

    /// Minimum eigenvalue of `σ + iΩ`, computed pair block by pair block.
    pub fn physicality_margin(&self) -> f64 {
        let cov = self.state.cov();
        let ns = self.signal_modes();
        let mut worst = f64::INFINITY;
        for m in 0..self.pairs {
            let idx = [2 * m, 2 * m + 1, 2 * (ns + m), 2 * (ns + m) + 1];
            let block = DMatrix::from_fn(4, 4, |a, b| cov[(idx[a], idx[b])]);
            worst = worst.min(crate::symplectic::physicality_margin(&block));
        }
        for m in self.pairs..ns {
            let block = cov.view((2 * m, 2 * m), (2, 2)).into_owned();
            worst = worst.min(crate::symplectic::physicality_margin(&block));
        }
        worst
    }
}

/// Basis of the received signal: Schmidt modes plus padding, centered at `ω_c`.
pub fn signal_basis(probe: &QdrProbe, scenario: &ScenarioParams) -> Result<HermiteGaussBasis> {
    probe
        .spectrum()
        .basis(scenario.omega_c(), probe.pairs() - 1 + SIGNAL_PADDING)
}

/// Received covariance after Doppler reshuffling and thermal loss, plus
/// `∂σ_r/∂μ = Gσ_r + σ_rGᵀ` with `G = D ⊗ I₂` on the signal block.
pub fn build_qdr_received(probe: &QdrProbe, scenario: &ScenarioParams) -> Result<ReceivedQdr> {
    let pairs = probe.pairs();
    let ns = pairs + SIGNAL_PADDING;
    let dim = 2 * (ns + pairs);
    let (eta, n_b) = (scenario.eta(), scenario.n_b());
    let floor = 2.0 * n_b + 1.0;

    let generator = doppler_generator(&signal_basis(probe, scenario)?);
    generator.validate()?;
    let d = generator.matrix();

    let mut cov = DMatrix::identity(dim, dim);
    let mut s = DMatrix::identity(dim, dim);
    let mut s_inv = DMatrix::identity(dim, dim);
    let mut excess = vec![0.0; ns + pairs];
    for (m, &p) in probe.photons().iter().enumerate() {
        let a = 2.0 * eta * p + floor;
        let b = 2.0 * p + 1.0;
        let c = eta.sqrt() * 2.0 * (p * (p + 1.0)).sqrt();
        let (si, ii) = (2 * m, 2 * (ns + m));
        set_pair(&mut cov, si, ii, a, b, c);

        let pair = pair_normal_form(p, eta, n_b, a, b, c);
        excess[m] = pair.excess_signal;
        excess[ns + m] = pair.excess_idler;
        for (mat, sign) in [(&mut s, 1.0), (&mut s_inv, -1.0)] {
            set_pair_symplectic(mat, si, ii, pair.cosh, sign * pair.sinh);
        }
    }
    for m in pairs..ns {
        cov[(2 * m, 2 * m)] = floor;
        cov[(2 * m + 1, 2 * m + 1)] = floor;
        excess[m] = 2.0 * n_b;
    }

    let d_cov = covariance_derivative(d, &cov, ns);
    let layout = ModeLayout::signal_idler(ns, pairs)?;
    let state = GaussianState::new_unchecked_physicality(layout, DVector::zeros(dim), cov)?;
    let williamson = Williamson::from_parts(excess, s, s_inv)?;
    Ok(ReceivedQdr {
        state,
        d_cov,
        williamson,
        pairs,
    })
}

/// `Gσ + σGᵀ` for `G = D ⊗ I₂` acting on the first `ns` modes.
fn covariance_derivative(d: &DMatrix<f64>, cov: &DMatrix<f64>, ns: usize) -> DMatrix<f64> {
    let dim = cov.nrows();
    let mut gs = DMatrix::zeros(dim, dim);
    for k in 0..ns {
        for j in k.saturating_sub(2)..(k + 3).min(ns) {
            let g = d[(k, j)];
            if g == 0.0 {
                continue;
            }
            for q in 0..2 {
                for c in 0..dim {
                    gs[(2 * k + q, c)] += g * cov[(2 * j + q, c)];
                }
            }
        }
    }
    &gs + gs.transpose()
}

struct PairNormalForm {
    excess_signal: f64,
    excess_idler: f64,
    cosh: f64,
    sinh: f64,
}

/// Williamson form of `[[aI, cZ], [cZ, bI]]` with cancellation-free excesses.
///
/// `ν_s − ν_i = a − b`, `ν_s + ν_i = √((a+b)² − 4c²)`, and the two squeezing
/// products `(ν_s−1)(…)`, `(ν_i−1)(…)` are known in closed form from the
/// channel parameters: `ν_i − 1 ∝ N(1 − η + N_B)`, `ν_s − 1 ∝ N_B(N + 1)`.
fn pair_normal_form(p: f64, eta: f64, n_b: f64, a: f64, b: f64, c: f64) -> PairNormalForm {
    let gap = 16.0 * p * (1.0 - eta + n_b);
    let bi = 2.0 + a - b;
    let root = (bi * bi + gap).sqrt();
    let excess_idler = if bi >= 0.0 {
        gap / (2.0 * (root + bi))
    } else {
        0.5 * (root - bi)
    };
    let gap_s = 16.0 * n_b * (p + 1.0);
    let bs = 2.0 - (a - b);
    let root_s = (bs * bs + gap_s).sqrt();
    let excess_signal = if bs >= 0.0 {
        gap_s / (2.0 * (root_s + bs))
    } else {
        0.5 * (root_s - bs)
    };

    let total = 2.0 + excess_idler + excess_signal;
    let cosh2 = (a + b) / total;
    let sinh2 = 2.0 * c / total;
    let cosh = (0.5 * (cosh2 + 1.0)).sqrt();
    let sinh = sinh2 / (2.0 * cosh);
    PairNormalForm {
        excess_signal,
        excess_idler,
        cosh,
        sinh,
    }
}

fn set_pair_symplectic(m: &mut DMatrix<f64>, s: usize, i: usize, ch: f64, sh: f64) {
    for q in 0..2 {
        let z = if q == 0 { 1.0 } else { -1.0 };
        m[(s + q, s + q)] = ch;
        m[(i + q, i + q)] = ch;
        m[(s + q, i + q)] = sh * z;
        m[(i + q, s + q)] = sh * z;
    }
}

/// `J_q(μ) = J_q(1)/μ²`.
///
/// A lossless, noiseless channel leaves the state pure and is rejected.
pub fn jq(probe: &QdrProbe, scenario: &ScenarioParams) -> Result<f64> {
    if scenario.eta() == 1.0 && scenario.n_b() == 0.0 {
        return Err(Error::PureState { excess: 0.0 });
    }
    let received = build_qdr_received(probe, scenario)?;
    Ok(received.qfi_unit()? / scenario.mu().powi(2))
}
