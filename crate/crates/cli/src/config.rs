use std::path::{Path, PathBuf};
use std::sync::Arc;

use identifiability::estimators::EstimatorConfig;
use identifiability::mcmc::ChainConfig;
use identifiability::model::{ForwardModel, ModelRegistry, PriorSpec, StatisticalModel};
use identifiability::oracle::LinearGaussianSpec;
use identifiability::sobol::DEFAULT_SAMPLES;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// Noise variances below this make the likelihood numerically singular.
pub const MIN_NOISE_VARIANCE: f64 = 1e-12;

/// One JSON document drives every command.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    /// One entry per model parameter.
    pub prior: Vec<PriorEntry>,
    /// Isotropic observation-noise variance Γ = σ²·I.
    pub noise_variance: f64,
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub sobol: SobolSection,
    #[serde(default)]
    pub convergence: ConvergenceSection,
    #[serde(default)]
    pub posterior: Option<PosteriorSection>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: String,
    #[serde(default)]
    pub settings: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorEntry {
    pub name: String,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SobolSection {
    pub n_samples: usize,
}

impl Default for SobolSection {
    fn default() -> Self {
        Self {
            n_samples: DEFAULT_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    pub replicates: usize,
    /// Variance sweep: these outer counts at `fixed_n_inner`.
    pub n_outer_values: Vec<usize>,
    pub fixed_n_inner: usize,
    /// Bias sweep: these inner counts at `fixed_n_outer`.
    pub n_inner_values: Vec<usize>,
    pub fixed_n_outer: usize,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        Self {
            replicates: 20,
            n_outer_values: vec![100, 1000, 10_000],
            fixed_n_inner: 50,
            n_inner_values: vec![2, 5, 10, 50],
            fixed_n_outer: 10_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosteriorSection {
    /// Parameters that generate synthetic data when `observations` is absent.
    #[serde(default)]
    pub true_theta: Option<Vec<f64>>,
    #[serde(default)]
    pub observations: Option<Vec<f64>>,
    /// Chain start; the prior means when absent.
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
    pub chain: ChainConfig,
    #[serde(default = "default_prediction_samples")]
    pub prediction_samples: usize,
}

fn default_prediction_samples() -> usize {
    identifiability::mcmc::MAX_PREDICTION_SAMPLES
}

/// A validated config with its model built.
pub struct Run {
    pub config: RunConfig,
    pub model: StatisticalModel,
    pub prior: PriorSpec,
}

impl std::fmt::Debug for Run {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Run")
            .field("model", &self.config.model.name)
            .finish()
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn build(self) -> Result<Run, CliError> {
        let cfg = |msg: String| CliError::Config(msg);
        let forward: Arc<dyn ForwardModel> = ModelRegistry::default()
            .build(&self.model.name, &self.model.settings)
            .map_err(|e| cfg(format!("model: {e}")))?;
        let names = forward.parameter_names();
        let mut entries = Vec::with_capacity(names.len());
        for name in names {
            let found: Vec<&PriorEntry> = self.prior.iter().filter(|p| &p.name == name).collect();
            match found.as_slice() {
                [one] => entries.push(*one),
                [] => return Err(cfg(format!("prior: no entry for model parameter '{name}'"))),
                _ => return Err(cfg(format!("prior: '{name}' listed more than once"))),
            }
        }
        if let Some(extra) = self.prior.iter().find(|p| !names.contains(&p.name)) {
            return Err(cfg(format!(
                "prior: '{}' is not a parameter of model '{}' (expected {names:?})",
                extra.name, self.model.name
            )));
        }
        let prior = PriorSpec::new(
            entries.iter().map(|p| p.name.clone()).collect(),
            entries.iter().map(|p| p.mean).collect(),
            entries.iter().map(|p| p.variance).collect(),
        )
        .map_err(|e| cfg(format!("prior: {e}")))?;
        if !(self.noise_variance.is_finite() && self.noise_variance >= MIN_NOISE_VARIANCE) {
            return Err(cfg(format!(
                "noise_variance: {} is below the minimum {MIN_NOISE_VARIANCE:e}",
                self.noise_variance
            )));
        }
        let model = StatisticalModel::with_isotropic_noise(forward, self.noise_variance)
            .map_err(|e| cfg(format!("noise_variance: {e}")))?;
        self.estimator
            .validate()
            .map_err(|e| cfg(format!("estimator: {e}")))?;
        if self.sobol.n_samples < 3 {
            return Err(cfg("sobol.n_samples must be at least 3".into()));
        }
        let c = &self.convergence;
        if c.replicates == 0
            || c.fixed_n_inner == 0
            || c.fixed_n_outer < 2
            || c.n_outer_values.iter().any(|&n| n < 2)
            || c.n_inner_values.contains(&0)
        {
            return Err(cfg(
                "convergence: replicates and sample counts must be positive (n_outer >= 2)".into(),
            ));
        }
        if let Some(p) = &self.posterior {
            let m = prior.len();
            let n = model.output_count();
            match (&p.true_theta, &p.observations) {
                (Some(t), None) if t.len() == m => {}
                (None, Some(y)) if y.len() == n => {}
                (Some(_), Some(_)) => {
                    return Err(cfg(
                        "posterior: give true_theta or observations, not both".into()
                    ))
                }
                (None, None) => {
                    return Err(cfg(
                        "posterior: true_theta or observations is required".into()
                    ))
                }
                (Some(t), None) => {
                    return Err(cfg(format!(
                        "posterior.true_theta has {} entries, model has {m}",
                        t.len()
                    )))
                }
                (None, Some(y)) => {
                    return Err(cfg(format!(
                        "posterior.observations has {} entries, model has {n}",
                        y.len()
                    )))
                }
            }
            if p.initial.as_ref().is_some_and(|x| x.len() != m) {
                return Err(cfg(format!("posterior.initial must have {m} entries")));
            }
            if p.prediction_samples == 0 {
                return Err(cfg("posterior.prediction_samples must be positive".into()));
            }
            p.chain
                .validate(m)
                .map_err(|e| cfg(format!("posterior.chain: {e}")))?;
        }
        Ok(Run {
            config: self,
            model,
            prior,
        })
    }
}

impl Run {
    /// Closed-form reference, available for linear models only.
    pub fn oracle(&self) -> Result<LinearGaussianSpec, CliError> {
        let features = self.model.forward().linear_features().ok_or_else(|| {
            CliError::Config(format!(
                "model '{}' has no closed-form oracle; this command needs a linear model",
                self.config.model.name
            ))
        })?;
        LinearGaussianSpec::new(
            features.clone(),
            DVector::from_column_slice(self.prior.means()),
            DMatrix::from_diagonal(&DVector::from_column_slice(self.prior.variances())),
            self.model.noise().covariance().clone(),
        )
        .map_err(|e| CliError::Runtime(format!("oracle: {e}")))
    }
}
