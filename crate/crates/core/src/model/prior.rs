use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{RandomStream, LN_2PI};

/// Independent univariate Gaussian priors, one per named parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    names: Vec<String>,
    means: Vec<f64>,
    variances: Vec<f64>,
}

impl PriorSpec {
    pub fn new(names: Vec<String>, means: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        if names.len() != means.len() || names.len() != variances.len() {
            return Err(Error::invalid(format!(
                "prior has {} names, {} means, {} variances",
                names.len(),
                means.len(),
                variances.len()
            )));
        }
        if let Some((name, v)) = names
            .iter()
            .zip(&variances)
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::invalid(format!(
                "prior variance of '{name}' must be positive, got {v}"
            )));
        }
        if let Some((name, _)) = names.iter().zip(&means).find(|(_, m)| !m.is_finite()) {
            return Err(Error::invalid(format!(
                "prior mean of '{name}' is not finite"
            )));
        }
        Ok(Self {
            names,
            means,
            variances,
        })
    }

    /// Standard normal prior on every parameter.
    pub fn standard(names: Vec<String>) -> Self {
        let m = names.len();
        Self {
            names,
            means: vec![0.0; m],
            variances: vec![1.0; m],
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.means[i]
    }

    pub fn sd(&self, i: usize) -> f64 {
        self.variances[i].sqrt()
    }

    /// Marginal log-density of parameter `i`.
    pub fn log_density(&self, i: usize, x: f64) -> f64 {
        let z = x - self.means[i];
        -0.5 * (z * z / self.variances[i] + self.variances[i].ln() + LN_2PI)
    }

    /// Joint log-density (sum of marginals).
    pub fn log_density_joint(&self, theta: &[f64]) -> f64 {
        theta
            .iter()
            .enumerate()
            .map(|(i, &x)| self.log_density(i, x))
            .sum()
    }

    /// Component-wise independent draws.
    pub fn sample(&self, stream: &mut RandomStream) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.means[i] + self.sd(i) * stream.standard_normal())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn names(m: usize) -> Vec<String> {
        (1..=m).map(|i| format!("theta{i}")).collect()
    }

    #[test]
    fn validation() {
        assert!(PriorSpec::new(names(2), vec![0.0], vec![1.0, 1.0]).is_err());
        assert!(PriorSpec::new(names(1), vec![0.0], vec![0.0]).is_err());
        assert!(PriorSpec::new(names(1), vec![0.0], vec![-1.0]).is_err());
        assert!(PriorSpec::new(names(1), vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn tiny_variance_returns_means() {
        let p = PriorSpec::new(names(3), vec![18.0, -1.0, 2.5], vec![1e-30; 3]).unwrap();
        let draw = p.sample(&mut RandomStream::new(5, 0));
        for (d, m) in draw.iter().zip(p.means()) {
            assert_abs_diff_eq!(d, m, epsilon = 1e-12);
        }
    }

    #[test]
    fn reproducible_draws() {
        let p = PriorSpec::standard(names(4));
        let a = p.sample(&mut RandomStream::new(8, 8));
        let b = p.sample(&mut RandomStream::new(8, 8));
        assert_eq!(a, b);
    }

    #[test]
    fn empirical_covariance_is_diagonal() {
        let variances = vec![1.0, 4.0, 0.25];
        let p = PriorSpec::new(names(3), vec![1.0, 0.0, -2.0], variances.clone()).unwrap();
        let n = 100_000usize;
        let mut s = RandomStream::new(13, 0);
        let draws: Vec<Vec<f64>> = (0..n).map(|_| p.sample(&mut s)).collect();
        let mean: Vec<f64> = (0..3)
            .map(|c| draws.iter().map(|d| d[c]).sum::<f64>() / n as f64)
            .collect();
        for a in 0..3 {
            for b in 0..3 {
                let cov = draws
                    .iter()
                    .map(|d| (d[a] - mean[a]) * (d[b] - mean[b]))
                    .sum::<f64>()
                    / (n - 1) as f64;
                // sampling sd of a covariance entry: sqrt((σ_aσ_b)² + [a=b]σ_a²σ_b²) / √n
                let scale = (variances[a] * variances[b]).sqrt();
                let sd = scale * if a == b { 2f64.sqrt() } else { 1.0 } / (n as f64).sqrt();
                let target = if a == b { variances[a] } else { 0.0 };
                assert!((cov - target).abs() < 4.0 * sd, "({a},{b}): {cov}");
            }
        }
    }

    #[test]
    fn log_density_matches_closed_form() {
        let p = PriorSpec::new(names(1), vec![18.0], vec![1.0]).unwrap();
        assert_abs_diff_eq!(p.log_density(0, 18.0), -0.5 * LN_2PI, epsilon = 1e-14);
        assert_abs_diff_eq!(p.log_density(0, 19.0), -0.5 * LN_2PI - 0.5, epsilon = 1e-14);
    }
}
