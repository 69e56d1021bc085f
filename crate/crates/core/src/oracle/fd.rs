use crate::error::{invalid, Error, Result};
use crate::symplectic::{gaussian_log_fidelity, symplectic_eigenvalues, GaussianState};

/// Finite-difference settings for the fidelity oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    /// Initial step in the parameter.
    pub step: f64,
    /// Most step halvings combined by Richardson extrapolation; fewer are used
    /// when the fidelity round-off would dominate the smaller steps.
    pub levels: usize,
    /// Relative disagreement allowed between the last two extrapolants.
    pub tolerance: f64,
    /// Rescale the step so that `1 − F ≈ target_infidelity` at the first level.
    pub auto_step: bool,
    pub target_infidelity: f64,
    /// Refuse states with a symplectic eigenvalue below `1 + mixedness_floor`.
    pub mixedness_floor: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            step: 1e-4,
            levels: 3,
            tolerance: 1e-6,
            auto_step: true,
            target_infidelity: 1e-3,
            mixedness_floor: 1e-6,
        }
    }
}

/// Extrapolated QFI with the spread of the extrapolation ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdEstimate {
    pub value: f64,
    pub error: f64,
    pub step: f64,
}

/// A parametrized family of Gaussian states.
///
/// `pair(a, b)` returns the states at `a` and `b` expressed on a common mode
/// basis; families whose natural basis depends on the parameter build it
/// around `a`.
pub trait StateFamily {
    fn pair(&self, a: f64, b: f64) -> Result<(GaussianState, GaussianState)>;

    /// Relative parameter change over which the state varies appreciably;
    /// steps are kept below half of it.
    fn step_scale(&self) -> Option<f64> {
        None
    }
}

impl<F> StateFamily for F
where
    F: Fn(f64) -> Result<GaussianState>,
{
    fn pair(&self, a: f64, b: f64) -> Result<(GaussianState, GaussianState)> {
        Ok((self(a)?, self(b)?))
    }
}

/// QFI at `mu0` from `J = 8(1 − F)/h²` with symmetric steps and Richardson
/// extrapolation in `h²`.
pub fn qfi_finite_difference(
    family: &impl StateFamily,
    mu0: f64,
    cfg: &FdConfig,
) -> Result<FdEstimate> {
    if !(cfg.step > 0.0 && cfg.step.is_finite()) || cfg.levels == 0 {
        return Err(invalid(
            "finite-difference step must be positive and levels >= 1",
        ));
    }
    let (center, _) = family.pair(mu0, mu0)?;
    let nu_min = symplectic_eigenvalues(center.cov())?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if nu_min < 1.0 + cfg.mixedness_floor {
        return Err(Error::OracleFailure(format!(
            "state too close to pure for a fidelity estimate (min symplectic eigenvalue 1 + {:.3e})",
            nu_min - 1.0
        )));
    }

    let mu_abs = mu0.abs().max(f64::MIN_POSITIVE);
    let max_step = family.step_scale().map_or(0.25, |sc| (0.5 * sc).min(0.25)) * mu_abs;
    let mut h = cfg.step.min(max_step);
    if cfg.auto_step {
        let rough = symmetric_estimate(family, mu0, h)?;
        h = if rough > 0.0 {
            (8.0 * cfg.target_infidelity / rough).sqrt().min(max_step)
        } else {
            max_step
        };
    }

    // |log F(ρ, ρ)| measures the round-off floor of the fidelity; levels whose
    // infidelity would sink below it carry no information
    let (sa, sb) = family.pair(mu0, mu0)?;
    let floor = gaussian_log_fidelity(&sa, &sb)?.abs() + f64::EPSILON;
    let curvature = symmetric_estimate(family, mu0, h)?;
    let usable = |level: usize| {
        let hk = h / f64::powi(2.0, level as i32);
        curvature * hk * hk / 8.0 * cfg.tolerance > floor
    };
    let Some(levels) = (1..=cfg.levels).take_while(|&l| usable(l)).last() else {
        // nothing resolvable even at the largest admissible step: the
        // information is zero to within the round-off bound
        let bound = 8.0 * floor / (h * h);
        if h >= max_step && curvature.abs() <= bound {
            return Ok(FdEstimate {
                value: 0.0,
                error: bound,
                step: h,
            });
        }
        return Err(Error::OracleFailure(format!(
            "fidelity round-off {floor:.1e} swamps the infidelity {:.1e} at step {h:.1e}",
            curvature * h * h / 8.0
        )));
    };

    let mut table: Vec<Vec<f64>> = Vec::with_capacity(levels + 1);
    for level in 0..=levels {
        let hk = h / f64::powi(2.0, level as i32);
        let mut row = vec![if level == 0 {
            curvature
        } else {
            symmetric_estimate(family, mu0, hk)?
        }];
        let mut factor = 4.0;
        for j in 0..level {
            let prev = &table[level - 1][j];
            row.push((factor * row[j] - prev) / (factor - 1.0));
            factor *= 4.0;
        }
        table.push(row);
    }
    let last = table[levels][levels];
    let prior = table[levels][levels - 1];
    let error = (last - prior).abs();
    let scale = last.abs().max(table[0][0].abs());
    if error > cfg.tolerance * scale + 1e-9 {
        return Err(Error::OracleFailure(format!(
            "Richardson ladder did not settle: {last:.10e} vs {prior:.10e}"
        )));
    }
    Ok(FdEstimate {
        value: last.max(0.0),
        error,
        step: h,
    })
}

fn infidelity(family: &impl StateFamily, a: f64, b: f64) -> Result<f64> {
    let (sa, sb) = family.pair(a, b)?;
    Ok(-gaussian_log_fidelity(&sa, &sb)?.exp_m1())
}

fn symmetric_estimate(family: &impl StateFamily, mu0: f64, h: f64) -> Result<f64> {
    let up = infidelity(family, mu0, mu0 + h)?;
    let dn = infidelity(family, mu0, mu0 - h)?;
    Ok(4.0 * (up + dn) / (h * h))
}
