use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::spectral::jsa_eval;

/// Minimum grid size accepted by [`schmidt_by_svd`].
pub const MIN_SVD_GRID: usize = 256;

/// Singular values of the JSA sampled on a uniform `grid_n × grid_n` grid.
///
/// The grid is centered at `ω_p/2` on both axes with half-width
/// `span · √((σ_p² + ε²)/8)` (the marginal standard deviation); the samples
/// are scaled by the cell size so the singular values estimate `|r_m|`.
pub fn schmidt_by_svd(
    sigma_p: f64,
    epsilon: f64,
    omega_p: f64,
    grid_n: usize,
    span: f64,
) -> Result<Vec<f64>> {
    if grid_n < MIN_SVD_GRID {
        return Err(Error::InvalidGrid(format!(
            "grid needs at least {MIN_SVD_GRID} points per axis, got {grid_n}"
        )));
    }
    if !(span > 0.0 && span.is_finite()) {
        return Err(invalid(format!("span must be positive, got {span}")));
    }
    if !(sigma_p > 0.0 && epsilon > 0.0 && omega_p > 0.0) {
        return Err(invalid("bandwidths and pump frequency must be positive"));
    }
    let half = span * ((sigma_p * sigma_p + epsilon * epsilon) / 8.0).sqrt();
    let h = 2.0 * half / (grid_n - 1) as f64;
    let center = 0.5 * omega_p;
    let grid: Vec<f64> = (0..grid_n).map(|i| center - half + i as f64 * h).collect();
    let f = DMatrix::from_fn(grid_n, grid_n, |i, j| {
        h * jsa_eval(sigma_p, epsilon, omega_p, grid[i], grid[j])
    });

    let last = grid_n - 1;
    let mut edge = 0.0;
    for i in 0..grid_n {
        for (a, b) in [(0, i), (last, i), (i, 0), (i, last)] {
            edge += f[(a, b)].powi(2);
        }
    }
    if edge > 1e-12 {
        return Err(Error::InvalidGrid(format!(
            "JSA mass {edge:.3e} on the grid boundary; increase the span"
        )));
    }

    let mut sv: Vec<f64> = f.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_grid_and_span() {
        assert!(matches!(
            schmidt_by_svd(1.0, 3.0, 100.0, 64, 8.0),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            schmidt_by_svd(1.0, 3.0, 100.0, 256, 2.0),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn separable_source() {
        let sv = schmidt_by_svd(1.0, 1.0, 100.0, 256, 9.0).unwrap();
        assert!((sv[0] - 1.0).abs() < 1e-8);
        assert!(sv[1] < 1e-8);
    }
}
