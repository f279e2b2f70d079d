//! Adaptive Metropolis: Gaussian random walk whose covariance becomes
//! `(2.4²/m)(Cov(history) + εI)` after `adaptation_start` steps.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{cholesky, stream_id, RandomStream};
use crate::model::{ForwardModel, PriorSpec, StatisticalModel};

const CHAIN_TAG: u64 = 0x0063_6861_696e;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub n_steps: usize,
    /// Steps dropped from statistics; 20% of `n_steps` when absent.
    #[serde(default)]
    pub burn_in: Option<usize>,
    #[serde(default = "default_adaptation_start")]
    pub adaptation_start: usize,
    /// Proposal covariance before adaptation; `0.01·I` scaled by 2.4²/m when absent.
    #[serde(default)]
    pub initial_covariance: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
    /// Distinguishes concurrent chains sharing a seed.
    #[serde(default)]
    pub chain_index: u64,
}

fn default_adaptation_start() -> usize {
    1000
}

fn default_epsilon() -> f64 {
    1e-10
}

impl ChainConfig {
    pub fn new(n_steps: usize, seed: u64) -> Self {
        Self {
            n_steps,
            burn_in: None,
            adaptation_start: default_adaptation_start(),
            initial_covariance: None,
            epsilon: default_epsilon(),
            seed,
            chain_index: 0,
        }
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in.unwrap_or(self.n_steps / 5)
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if self.n_steps == 0 || self.burn_in() >= self.n_steps {
            return Err(Error::invalid(format!(
                "burn_in ({}) must be below n_steps ({})",
                self.burn_in(),
                self.n_steps
            )));
        }
        if self.adaptation_start < 10 {
            return Err(Error::invalid("adaptation_start must be >= 10"));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        if let Some(c) = &self.initial_covariance {
            if c.len() != m || c.iter().any(|r| r.len() != m) {
                return Err(Error::invalid(format!(
                    "initial_covariance must be {m}x{m}"
                )));
            }
        }
        Ok(())
    }

    fn initial(&self, m: usize) -> Result<DMatrix<f64>> {
        match &self.initial_covariance {
            Some(rows) => {
                let c = DMatrix::from_fn(m, m, |i, j| rows[i][j]);
                cholesky(&c)?;
                Ok(c)
            }
            None => Ok(DMatrix::from_diagonal_element(
                m,
                m,
                0.01 * 2.4 * 2.4 / m as f64,
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub parameter_names: Vec<String>,
    /// State after each step, `n_steps × m`.
    pub samples: Vec<Vec<f64>>,
    pub log_target: Vec<f64>,
    pub accepted: usize,
    pub burn_in: usize,
}

impl Chain {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.samples.len() as f64
    }

    pub fn retained(&self) -> &[Vec<f64>] {
        &self.samples[self.burn_in..]
    }

    pub fn mean(&self) -> Vec<f64> {
        let r = self.retained();
        let m = self.parameter_names.len();
        let mut mean = vec![0.0; m];
        for s in r {
            for (a, v) in mean.iter_mut().zip(s) {
                *a += v;
            }
        }
        mean.iter().map(|v| v / r.len() as f64).collect()
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let r = self.retained();
        let mean = self.mean();
        let m = mean.len();
        let mut c = DMatrix::zeros(m, m);
        for s in r {
            for i in 0..m {
                for j in 0..m {
                    c[(i, j)] += (s[i] - mean[i]) * (s[j] - mean[j]);
                }
            }
        }
        c / (r.len() as f64 - 1.0)
    }

    pub fn correlation(&self) -> DMatrix<f64> {
        let c = self.covariance();
        DMatrix::from_fn(c.nrows(), c.ncols(), |i, j| {
            c[(i, j)] / (c[(i, i)] * c[(j, j)]).sqrt()
        })
    }

    /// Retained samples as CSV, header = parameter names.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut out = std::io::BufWriter::new(out);
        writeln!(out, "{}", self.parameter_names.join(","))?;
        for s in self.retained() {
            let row: Vec<String> = s.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        out.flush()
    }
}

/// Running mean and scatter matrix of the chain history.
struct Moments {
    count: f64,
    mean: DVector<f64>,
    scatter: DMatrix<f64>,
}

impl Moments {
    fn new(m: usize) -> Self {
        Self {
            count: 0.0,
            mean: DVector::zeros(m),
            scatter: DMatrix::zeros(m, m),
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.count += 1.0;
        let x = DVector::from_column_slice(x);
        let delta = &x - &self.mean;
        self.mean += &delta / self.count;
        let delta2 = &x - &self.mean;
        self.scatter += &delta * delta2.transpose();
    }

    fn covariance(&self) -> DMatrix<f64> {
        &self.scatter / (self.count - 1.0)
    }
}

/// Samples `log_target` starting from `init`.
pub fn adaptive_metropolis<F>(
    log_target: F,
    init: &[f64],
    parameter_names: Vec<String>,
    config: &ChainConfig,
) -> Result<Chain>
where
    F: Fn(&[f64]) -> f64,
{
    let m = init.len();
    if m == 0 || parameter_names.len() != m {
        return Err(Error::invalid(
            "initial state and parameter names must have equal, non-zero length",
        ));
    }
    config.validate(m)?;
    let mut current = init.to_vec();
    let mut current_lp = log_target(&current);
    if !current_lp.is_finite() {
        return Err(Error::InvalidStart(format!(
            "log target is {current_lp} at {init:?}"
        )));
    }
    let sd = 2.4 * 2.4 / m as f64;
    let mut stream = RandomStream::new(config.seed, stream_id(CHAIN_TAG, &[config.chain_index]));
    let mut lower = cholesky(&config.initial(m)?)?.l();
    let mut moments = Moments::new(m);
    moments.push(&current);

    let mut samples = Vec::with_capacity(config.n_steps);
    let mut trace = Vec::with_capacity(config.n_steps);
    let mut accepted = 0usize;
    let mut z = vec![0.0; m];
    let mut proposal = vec![0.0; m];
    for step in 1..=config.n_steps {
        if step > config.adaptation_start {
            let cov = (moments.covariance() + DMatrix::identity(m, m) * config.epsilon) * sd;
            let cov = (&cov + cov.transpose()) * 0.5;
            if let Ok(ch) = cholesky(&cov) {
                lower = ch.l();
            }
        }
        for v in z.iter_mut() {
            *v = stream.standard_normal();
        }
        for i in 0..m {
            proposal[i] = current[i] + (0..=i).map(|j| lower[(i, j)] * z[j]).sum::<f64>();
        }
        let lp = log_target(&proposal);
        let u = stream.uniform();
        if lp.is_finite() && u.ln() < lp - current_lp {
            current.copy_from_slice(&proposal);
            current_lp = lp;
            accepted += 1;
        }
        moments.push(&current);
        samples.push(current.clone());
        trace.push(current_lp);
    }
    Ok(Chain {
        parameter_names,
        samples,
        log_target: trace,
        accepted,
        burn_in: config.burn_in(),
    })
}

/// `log p(θ) + log p(y|θ)`; failed model evaluations give −∞ (rejected).
pub fn log_posterior<'a>(
    model: &'a StatisticalModel,
    prior: &'a PriorSpec,
    y: &'a [f64],
) -> impl Fn(&[f64]) -> f64 + 'a {
    move |theta| match model.likelihood_logpdf(theta, y) {
        Ok(ll) => prior.log_density_joint(theta) + ll,
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Per-output mean and central 95% band of the model pushed through the
/// retained chain (thinned evenly to at most `max_samples`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionBand {
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub samples_used: usize,
}

pub const MAX_PREDICTION_SAMPLES: usize = 2000;

pub fn aggregate_prediction(
    model: &dyn ForwardModel,
    chain: &Chain,
    max_samples: usize,
    workers: usize,
) -> Result<PredictionBand> {
    let retained = chain.retained();
    if retained.is_empty() || max_samples == 0 {
        return Err(Error::invalid("no retained samples to push forward"));
    }
    let stride = retained.len().div_ceil(max_samples);
    let picks: Vec<&Vec<f64>> = retained.iter().step_by(stride).collect();
    let outputs =
        crate::estimators::map_samples(picks.len(), workers, |k| model.evaluate(picks[k]))?
            .into_iter()
            .enumerate()
            .map(|(k, r)| r.map_err(|e| e.at_sample(k)))
            .collect::<Result<Vec<_>>>()?;
    let n_out = model.output_count();
    let mut mean = vec![0.0; n_out];
    let mut lower = vec![0.0; n_out];
    let mut upper = vec![0.0; n_out];
    for o in 0..n_out {
        let mut column: Vec<f64> = outputs.iter().map(|v| v[o]).collect();
        mean[o] = column.iter().sum::<f64>() / column.len() as f64;
        column.sort_by(f64::total_cmp);
        lower[o] = quantile(&column, 0.025);
        upper[o] = quantile(&column, 0.975);
    }
    Ok(PredictionBand {
        mean,
        lower,
        upper,
        samples_used: outputs.len(),
    })
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}
