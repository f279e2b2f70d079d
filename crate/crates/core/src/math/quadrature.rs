use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 200;

/// Gauss-Hermite rule for expectations under a standard normal.
///
/// Weights are normalized so that `Σ wₖ f(xₖ) ≈ E[f(Z)]`, `Z ~ N(0, 1)`.
/// Map to `N(μ, σ²)` with `x ↦ μ + σx`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// `E[f(X)]` for `X ~ N(mean, sd²)`.
    pub fn expect<F: Fn(f64) -> f64>(&self, mean: f64, sd: f64, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mean + sd * x))
            .sum()
    }
}

/// Builds the `order`-point rule by Golub-Welsch: the nodes are the
/// eigenvalues of the Jacobi matrix of the probabilists' Hermite
/// recurrence (zero diagonal, `√k` off-diagonal).
///
/// Weights come from the Christoffel function `1 / Σ_k ψ_k(x)²` of the
/// orthonormal polynomials rather than from squared eigenvector entries,
/// which lose all relative precision in the far tails.
pub fn gauss_hermite_rule(order: usize) -> Result<QuadratureRule> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::invalid(format!(
            "Gauss-Hermite order must be in 1..={MAX_ORDER}, got {order}"
        )));
    }
    let mut jacobi = DMatrix::<f64>::zeros(order, order);
    for k in 1..order {
        let b = (k as f64).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let mut raw: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    raw.sort_by(|a, b| a.total_cmp(b));

    // exact symmetry about zero
    let nodes: Vec<f64> = (0..order)
        .map(|k| 0.5 * (raw[k] - raw[order - 1 - k]))
        .collect();

    let christoffel = |x: f64| {
        let (mut prev, mut cur) = (0.0f64, 1.0f64);
        let mut sum = 1.0;
        for k in 1..order {
            let next = (x * cur - ((k - 1) as f64).sqrt() * prev) / (k as f64).sqrt();
            prev = cur;
            cur = next;
            sum += cur * cur;
        }
        1.0 / sum
    };
    let mut weights: Vec<f64> = nodes.iter().map(|&x| christoffel(x)).collect();
    for k in 0..order / 2 {
        let w = 0.5 * (weights[k] + weights[order - 1 - k]);
        weights[k] = w;
        weights[order - 1 - k] = w;
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let log_weights = weights.iter().map(|w| w.ln()).collect();

    Ok(QuadratureRule {
        nodes,
        weights,
        log_weights,
    })
}
