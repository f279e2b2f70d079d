use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand_distr::{Distribution, StandardNormal};

use super::RandomStream;
use crate::error::{Error, Result};

/// `ln(2π)`.
pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

const SYMMETRY_TOL: f64 = 1e-10;

/// Cholesky factorization of a symmetric positive-definite matrix.
pub fn cholesky(matrix: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if !matrix.is_square() {
        return Err(Error::NumericalDomain(format!(
            "covariance is {}x{}, not square",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let scale = matrix.amax().max(f64::MIN_POSITIVE);
    for i in 0..matrix.nrows() {
        for j in 0..i {
            if (matrix[(i, j)] - matrix[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::NumericalDomain(format!(
                    "covariance is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalDomain(
            "covariance has non-finite entries".into(),
        ));
    }
    let chol = Cholesky::new(matrix.clone())
        .ok_or_else(|| Error::NumericalDomain("covariance is not positive definite".into()))?;
    if chol
        .l_dirty()
        .diagonal()
        .iter()
        .any(|&p| p <= 0.0 || !p.is_finite())
    {
        return Err(Error::NumericalDomain(
            "covariance is not positive definite".into(),
        ));
    }
    Ok(chol)
}

/// `ln|Σ|` of a symmetric positive-definite matrix via its Cholesky pivots.
pub fn log_det_spd(matrix: &DMatrix<f64>) -> Result<f64> {
    let chol = cholesky(matrix)?;
    Ok(2.0
        * chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|p| p.ln())
            .sum::<f64>())
}

/// Multivariate normal density with a factorized covariance.
///
/// Diagonal covariances are detected at construction and evaluated without
/// a triangular solve; the estimators call `logpdf` millions of times on
/// the noise model.
#[derive(Debug, Clone)]
pub struct GaussianDensity {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    lower: DMatrix<f64>,
    log_det: f64,
    diagonal_inv_sd: Option<Vec<f64>>,
}

impl GaussianDensity {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        if covariance.nrows() != mean.len() {
            return Err(Error::invalid(format!(
                "mean has dimension {} but covariance is {}x{}",
                mean.len(),
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        let chol = cholesky(&covariance)?;
        let lower = chol.l();
        let log_det = 2.0 * lower.diagonal().iter().map(|p| p.ln()).sum::<f64>();
        let is_diagonal = (0..covariance.nrows())
            .all(|i| (0..covariance.ncols()).all(|j| i == j || covariance[(i, j)] == 0.0));
        let diagonal_inv_sd =
            is_diagonal.then(|| lower.diagonal().iter().map(|s| 1.0 / s).collect());
        Ok(Self {
            mean,
            covariance,
            lower,
            log_det,
            diagonal_inv_sd,
        })
    }

    /// Zero-mean density, the usual shape of an additive noise model.
    pub fn centered(covariance: DMatrix<f64>) -> Result<Self> {
        let n = covariance.nrows();
        Self::new(DVector::zeros(n), covariance)
    }

    pub fn isotropic(dim: usize, variance: f64) -> Result<Self> {
        Self::centered(DMatrix::from_diagonal_element(dim, dim, variance))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Lower Cholesky factor `L` with `LLᵀ = Σ`.
    pub fn cholesky_lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn logpdf(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::invalid(format!(
                "point has dimension {} but density has dimension {}",
                x.len(),
                self.dim()
            )));
        }
        let residual: Vec<f64> = x.iter().zip(self.mean.iter()).map(|(a, b)| a - b).collect();
        Ok(self.logpdf_residual(&residual))
    }

    /// Log-density at `mean + residual`. The caller guarantees the length.
    pub fn logpdf_residual(&self, residual: &[f64]) -> f64 {
        debug_assert_eq!(residual.len(), self.dim());
        let quad = match &self.diagonal_inv_sd {
            Some(inv_sd) => residual
                .iter()
                .zip(inv_sd)
                .map(|(r, s)| {
                    let z = r * s;
                    z * z
                })
                .sum::<f64>(),
            None => {
                let n = self.dim();
                let mut z = vec![0.0; n];
                for i in 0..n {
                    let mut acc = residual[i];
                    for (j, zj) in z.iter().enumerate().take(i) {
                        acc -= self.lower[(i, j)] * zj;
                    }
                    z[i] = acc / self.lower[(i, i)];
                }
                z.iter().map(|v| v * v).sum()
            }
        };
        -0.5 * (quad + self.log_det + self.dim() as f64 * LN_2PI)
    }

    pub fn sample(&self, stream: &mut RandomStream) -> Vec<f64> {
        let n = self.dim();
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(stream)).collect();
        (0..n)
            .map(|i| self.mean[i] + (0..=i).map(|j| self.lower[(i, j)] * z[j]).sum::<f64>())
            .collect()
    }
}
