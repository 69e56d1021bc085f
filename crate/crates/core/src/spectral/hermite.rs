use nalgebra::{DMatrix, SymmetricEigen};

const PI_QUARTER_INV: f64 = 0.751_125_544_464_942_5; // π^{-1/4}

/// Normalized Hermite function `φ_n(y) = (2ⁿ n! √π)^{-1/2} H_n(y) e^{-y²/2}`.
pub fn hermite_gauss_eval(n: usize, y: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = PI_QUARTER_INV * (-0.5 * y * y).exp();
    for k in 0..n {
        let next =
            (2.0 / (k as f64 + 1.0)).sqrt() * y * cur - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `φ_0(y) … φ_n(y)` in one recurrence pass.
pub fn hermite_gauss_all(n: usize, y: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(PI_QUARTER_INV * (-0.5 * y * y).exp());
    for k in 0..n {
        let prev = if k == 0 { 0.0 } else { out[k - 1] };
        let next = (2.0 / (k as f64 + 1.0)).sqrt() * y * out[k]
            - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
        out.push(next);
    }
    out
}

/// `dφ_n/dy = √(2n) φ_{n-1}(y) − y φ_n(y)`.
pub fn hermite_gauss_derivative(n: usize, y: f64) -> f64 {
    let phi = hermite_gauss_all(n, y);
    let lower = if n == 0 {
        0.0
    } else {
        (2.0 * n as f64).sqrt() * phi[n - 1]
    };
    lower - y * phi[n]
}

/// Gauss–Hermite rule for `∫ g(y) dy` with `g ~ e^{-y²}·polynomial`.
///
/// Weights are stored pre-multiplied by `e^{y²}`, so
/// `∫ g ≈ Σ scaled_weights[i]·g(nodes[i])` without underflow at large order.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    scaled_weights: Vec<f64>,
}

impl GaussHermite {
    /// Golub–Welsch nodes, polished by Newton steps on `φ_n`.
    pub fn new(order: usize) -> Self {
        let n = order.max(1);
        let jacobi = DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        nodes.sort_by(f64::total_cmp);
        let mut scaled_weights = Vec::with_capacity(n);
        for x in nodes.iter_mut() {
            for _ in 0..2 {
                let phi = hermite_gauss_all(n, *x);
                let d = (2.0 * n as f64).sqrt() * phi[n - 1] - *x * phi[n];
                if d != 0.0 {
                    *x -= phi[n] / d;
                }
            }
            let phi = hermite_gauss_all(n - 1, *x);
            scaled_weights.push(1.0 / (n as f64 * phi[n - 1] * phi[n - 1]));
        }
        Self {
            nodes,
            scaled_weights,
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn scaled_weights(&self) -> &[f64] {
        &self.scaled_weights
    }

    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.scaled_weights)
            .map(|(&x, &w)| w * g(x))
            .sum()
    }
}
