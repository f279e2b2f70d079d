//! Statistical model `y = F(θ, d) + ξ`, `ξ ~ N(0, Γ)`, with independent
//! Gaussian priors on θ. The design inputs `d` are fixed per model instance.

mod linear;
mod prior;
mod registry;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

pub use linear::LinearModel;
pub use prior::PriorSpec;
pub use registry::{ModelFactory, ModelRegistry};

use crate::error::{Error, Result};
use crate::math::{GaussianDensity, RandomStream};

/// Deterministic forward map `θ ↦ F(θ, d)` with `d` baked into the instance.
///
/// Implementations must be reentrant: estimators call `evaluate`
/// concurrently from worker threads.
pub trait ForwardModel: Send + Sync + fmt::Debug {
    /// Registry name of the model family.
    fn name(&self) -> &str;

    fn parameter_names(&self) -> &[String];

    fn parameter_count(&self) -> usize {
        self.parameter_names().len()
    }

    fn output_count(&self) -> usize;

    fn evaluate(&self, theta: &[f64]) -> Result<Vec<f64>>;

    /// Feature matrix when the map is linear, `F(θ) = Aθ`.
    fn linear_features(&self) -> Option<&DMatrix<f64>> {
        None
    }
}

/// Forward model plus additive Gaussian noise.
#[derive(Debug, Clone)]
pub struct StatisticalModel {
    forward: Arc<dyn ForwardModel>,
    noise: GaussianDensity,
}

impl StatisticalModel {
    pub fn new(forward: Arc<dyn ForwardModel>, noise_covariance: DMatrix<f64>) -> Result<Self> {
        if noise_covariance.nrows() != forward.output_count() {
            return Err(Error::invalid(format!(
                "noise covariance is {}x{} but model '{}' has {} outputs",
                noise_covariance.nrows(),
                noise_covariance.ncols(),
                forward.name(),
                forward.output_count()
            )));
        }
        let noise = GaussianDensity::centered(noise_covariance)?;
        Ok(Self { forward, noise })
    }

    /// `Γ = variance · I`.
    pub fn with_isotropic_noise(forward: Arc<dyn ForwardModel>, variance: f64) -> Result<Self> {
        let n = forward.output_count();
        Self::new(forward, DMatrix::from_diagonal_element(n, n, variance))
    }

    pub fn forward(&self) -> &Arc<dyn ForwardModel> {
        &self.forward
    }

    pub fn noise(&self) -> &GaussianDensity {
        &self.noise
    }

    pub fn parameter_count(&self) -> usize {
        self.forward.parameter_count()
    }

    pub fn output_count(&self) -> usize {
        self.forward.output_count()
    }

    pub fn predict(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != self.parameter_count() {
            return Err(Error::invalid(format!(
                "theta has {} entries but model '{}' has {} parameters",
                theta.len(),
                self.forward.name(),
                self.parameter_count()
            )));
        }
        let out = self.forward.evaluate(theta)?;
        if out.len() != self.output_count() {
            return Err(Error::ModelEvaluation {
                theta: theta.to_vec(),
                reason: format!(
                    "returned {} outputs, expected {}",
                    out.len(),
                    self.output_count()
                ),
            });
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::ModelEvaluation {
                theta: theta.to_vec(),
                reason: "non-finite prediction".into(),
            });
        }
        Ok(out)
    }

    /// `log N(y; prediction, Γ)`.
    pub fn log_likelihood_of_prediction(&self, prediction: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(prediction.len(), y.len());
        let residual: Vec<f64> = y.iter().zip(prediction).map(|(a, b)| a - b).collect();
        self.noise.logpdf_residual(&residual)
    }

    /// `log N(y; F(θ, d), Γ)`.
    pub fn likelihood_logpdf(&self, theta: &[f64], y: &[f64]) -> Result<f64> {
        if y.len() != self.output_count() {
            return Err(Error::invalid(format!(
                "observation has {} entries, model has {} outputs",
                y.len(),
                self.output_count()
            )));
        }
        let prediction = self.predict(theta)?;
        Ok(self.log_likelihood_of_prediction(&prediction, y))
    }

    /// `F(θ, d) + ξ` with `ξ` drawn from `stream`.
    pub fn sample_observation(&self, theta: &[f64], stream: &mut RandomStream) -> Result<Vec<f64>> {
        let prediction = self.predict(theta)?;
        let noise = self.noise.sample(stream);
        Ok(prediction.iter().zip(&noise).map(|(f, e)| f + e).collect())
    }
}
