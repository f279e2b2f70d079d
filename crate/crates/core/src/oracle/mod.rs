//! Closed-form reference quantities for `y = Aθ + ξ` with Gaussian prior and
//! noise. Every entropy is taken from one assembled joint covariance over
//! `(θ, y)` by block extraction.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::math::{log_det_spd, GaussianDensity, LN_2PI};
use crate::model::PriorSpec;

/// Columns `d, d², …, d^m`.
pub fn build_vandermonde(d_points: &[f64], m: usize) -> Result<DMatrix<f64>> {
    if m == 0 {
        return Err(Error::invalid("vandermonde needs m >= 1"));
    }
    Ok(DMatrix::from_fn(d_points.len(), m, |i, j| {
        d_points[i].powi(j as i32 + 1)
    }))
}

/// `n` points evenly spaced over `[lo, hi]` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Differential entropy of `N(·, Σ)` in nats.
pub fn gaussian_entropy(covariance: &DMatrix<f64>) -> Result<f64> {
    let n = covariance.nrows() as f64;
    Ok(0.5 * n * (LN_2PI + 1.0) + 0.5 * log_det_spd(covariance)?)
}

#[derive(Debug, Clone)]
pub struct LinearGaussianSpec {
    pub features: DMatrix<f64>,
    pub prior_mean: DVector<f64>,
    pub prior_covariance: DMatrix<f64>,
    pub noise_covariance: DMatrix<f64>,
}

impl LinearGaussianSpec {
    pub fn new(
        features: DMatrix<f64>,
        prior_mean: DVector<f64>,
        prior_covariance: DMatrix<f64>,
        noise_covariance: DMatrix<f64>,
    ) -> Result<Self> {
        let (n, m) = features.shape();
        if prior_mean.len() != m || prior_covariance.shape() != (m, m) {
            return Err(Error::invalid(format!(
                "prior dimensions do not match {m} feature columns"
            )));
        }
        if noise_covariance.shape() != (n, n) {
            return Err(Error::invalid(format!("noise covariance must be {n}x{n}")));
        }
        let spec = Self {
            features,
            prior_mean,
            prior_covariance,
            noise_covariance,
        };
        crate::math::cholesky(&spec.prior_covariance)?;
        crate::math::cholesky(&spec.evidence_covariance())?;
        Ok(spec)
    }

    /// Independent prior from a [`PriorSpec`] and `Γ = noise_variance · I`.
    pub fn from_prior(
        features: DMatrix<f64>,
        prior: &PriorSpec,
        noise_variance: f64,
    ) -> Result<Self> {
        let n = features.nrows();
        Self::new(
            features,
            DVector::from_column_slice(prior.means()),
            DMatrix::from_diagonal(&DVector::from_column_slice(prior.variances())),
            DMatrix::from_diagonal_element(n, n, noise_variance),
        )
    }

    /// The reference setup: `A` = vandermonde over `n` points in `[-1, 1]`,
    /// standard-normal priors, `Γ = 0.1 I`.
    pub fn reference(m: usize, n: usize) -> Self {
        let a = build_vandermonde(&linspace(-1.0, 1.0, n), m).expect("m >= 1");
        Self::new(
            a,
            DVector::zeros(m),
            DMatrix::identity(m, m),
            DMatrix::from_diagonal_element(n, n, 0.1),
        )
        .expect("reference spec is well-posed")
    }

    pub fn parameter_count(&self) -> usize {
        self.features.ncols()
    }

    pub fn output_count(&self) -> usize {
        self.features.nrows()
    }

    /// `Σ_Y = AΣ_ΘAᵀ + Γ`.
    pub fn evidence_covariance(&self) -> DMatrix<f64> {
        &self.features * &self.prior_covariance * self.features.transpose() + &self.noise_covariance
    }

    fn joint_covariance(&self) -> DMatrix<f64> {
        let (n, m) = self.features.shape();
        let cross = &self.features * &self.prior_covariance;
        let mut joint = DMatrix::zeros(m + n, m + n);
        joint
            .view_mut((0, 0), (m, m))
            .copy_from(&self.prior_covariance);
        joint.view_mut((m, 0), (n, m)).copy_from(&cross);
        joint.view_mut((0, m), (m, n)).copy_from(&cross.transpose());
        joint
            .view_mut((m, m), (n, n))
            .copy_from(&self.evidence_covariance());
        joint
    }

    /// Entropy of the joint marginal over the parameters in `params`,
    /// optionally together with `y`.
    fn block_entropy(&self, joint: &DMatrix<f64>, params: &[usize], with_y: bool) -> Result<f64> {
        let (n, m) = self.features.shape();
        let mut idx: Vec<usize> = params.to_vec();
        if with_y {
            idx.extend(m..m + n);
        }
        if idx.is_empty() {
            return Ok(0.0);
        }
        let block = DMatrix::from_fn(idx.len(), idx.len(), |r, c| joint[(idx[r], idx[c])]);
        gaussian_entropy(&block)
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.parameter_count() {
            return Err(Error::invalid(format!(
                "parameter index {i} out of range for m = {}",
                self.parameter_count()
            )));
        }
        Ok(())
    }
}

/// Joint Gaussian over the stacked vector `(θ, y)`.
pub fn lg_joint(spec: &LinearGaussianSpec) -> Result<GaussianDensity> {
    let mean_y = &spec.features * &spec.prior_mean;
    let mut mean = spec.prior_mean.as_slice().to_vec();
    mean.extend(mean_y.iter());
    GaussianDensity::new(DVector::from_vec(mean), spec.joint_covariance())
}

/// Posterior mean and covariance of θ given `y`, by conditioning the joint.
pub fn lg_posterior(spec: &LinearGaussianSpec, y: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if y.len() != spec.output_count() {
        return Err(Error::invalid(format!(
            "observation has {} entries, expected {}",
            y.len(),
            spec.output_count()
        )));
    }
    let sigma_y = spec.evidence_covariance();
    let chol = crate::math::cholesky(&sigma_y)?;
    let cross = &spec.prior_covariance * spec.features.transpose();
    let residual = DVector::from_column_slice(y) - &spec.features * &spec.prior_mean;
    let mean = &spec.prior_mean + &cross * chol.solve(&residual);
    let cov = &spec.prior_covariance - &cross * chol.solve(&cross.transpose());
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok((mean, cov))
}

/// `I(Θ_i; Y | Θ_~i) = H(Θ_i, Θ_~i) + H(Θ_~i, Y) − H(Θ_~i) − H(Θ, Y)`.
pub fn lg_information_gain_exact(spec: &LinearGaussianSpec, i: usize) -> Result<f64> {
    spec.check_index(i)?;
    let joint = spec.joint_covariance();
    let all: Vec<usize> = (0..spec.parameter_count()).collect();
    let rest: Vec<usize> = all.iter().copied().filter(|&k| k != i).collect();
    let value = spec.block_entropy(&joint, &all, false)?
        + spec.block_entropy(&joint, &rest, true)?
        - spec.block_entropy(&joint, &rest, false)?
        - spec.block_entropy(&joint, &all, true)?;
    Ok(value.max(0.0))
}

/// `I(Θ_i; Θ_j | Y, Θ_~ij) = H(Θ_i, R, Y) + H(Θ_j, R, Y) − H(R, Y) − H(Θ, Y)`
/// with `R = Θ_~ij`.
pub fn lg_pairwise_exact(spec: &LinearGaussianSpec, i: usize, j: usize) -> Result<f64> {
    spec.check_index(i)?;
    spec.check_index(j)?;
    if i == j {
        return Err(Error::invalid("pairwise dependence needs i != j"));
    }
    let joint = spec.joint_covariance();
    let all: Vec<usize> = (0..spec.parameter_count()).collect();
    let rest: Vec<usize> = all.iter().copied().filter(|&k| k != i && k != j).collect();
    let with = |extra: usize| {
        let mut v = rest.clone();
        v.push(extra);
        v
    };
    let value = spec.block_entropy(&joint, &with(i), true)?
        + spec.block_entropy(&joint, &with(j), true)?
        - spec.block_entropy(&joint, &rest, true)?
        - spec.block_entropy(&joint, &all, true)?;
    Ok(value.max(0.0))
}

/// First-order Sobol indices of `y = A θ` under an independent prior:
/// `S_i = a_oi² σ_i² / Σ_j a_oj² σ_j²`, averaged over outputs that vary.
pub fn lg_sobol_first_order(spec: &LinearGaussianSpec) -> Result<Vec<f64>> {
    let m = spec.parameter_count();
    let cov = &spec.prior_covariance;
    if (0..m).any(|i| (0..m).any(|j| i != j && cov[(i, j)] != 0.0)) {
        return Err(Error::invalid(
            "closed-form Sobol indices need a diagonal prior covariance",
        ));
    }
    let mut total = vec![0.0; m];
    let mut active = 0usize;
    for row in spec.features.row_iter() {
        let parts: Vec<f64> = (0..m).map(|i| row[i] * row[i] * cov[(i, i)]).collect();
        let v: f64 = parts.iter().sum();
        if v > 0.0 {
            active += 1;
            for (t, p) in total.iter_mut().zip(&parts) {
                *t += p / v;
            }
        }
    }
    if active == 0 {
        return Err(Error::DegenerateModel("every output is constant".into()));
    }
    Ok(total.into_iter().map(|t| t / active as f64).collect())
}
