//! Nested Monte-Carlo estimators of per-parameter information gain
//! `I(Θ_i; Y | Θ_~i)` and pairwise dependence `I(Θ_i; Θ_j | Y, Θ_~ij)`.
//!
//! Outer sample `k` draws `(θ^k, y^k)` from the stream `(seed, k)` alone, so
//! every entry of a report sees the same outer samples and results do not
//! depend on the number of workers. Values are in nats.

mod evidence;
mod report;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use evidence::{
    conditional_evidence_log, EvidenceRule, EvidenceRuleRegistry, ImportanceQuadrature,
    LogEvidence, NodePlacement, PriorQuadrature,
};
pub use report::{full_report, EntryOutcome, IdentifiabilityReport};

use crate::error::{Error, Result};
use crate::math::{gauss_hermite_rule, stream_id, QuadratureRule, RandomStream};
use crate::model::{PriorSpec, StatisticalModel};
use evidence::Integrand;

const OUTER_TAG: u64 = 0x006f_7574_6572;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub n_outer: usize,
    /// Quadrature order for 1-D conditional evidences.
    pub n_inner: usize,
    /// Order per dimension of the 2-D tensor rule; `n_inner` when absent.
    #[serde(default)]
    pub n_inner_2d: Option<usize>,
    #[serde(default = "default_proposal_scale")]
    pub proposal_scale: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub use_importance_sampling: bool,
    /// Worker threads; 0 lets the pool pick.
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_proposal_scale() -> f64 {
    0.2
}

fn default_true() -> bool {
    true
}

fn default_workers() -> usize {
    1
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            n_outer: 10_000,
            n_inner: 50,
            n_inner_2d: None,
            proposal_scale: default_proposal_scale(),
            seed: 0,
            use_importance_sampling: true,
            workers: default_workers(),
        }
    }
}

impl EstimatorConfig {
    pub fn new(n_outer: usize, n_inner: usize, seed: u64) -> Self {
        Self {
            n_outer,
            n_inner,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_outer < 2 {
            return Err(Error::invalid(format!(
                "n_outer must be >= 2, got {}",
                self.n_outer
            )));
        }
        if self.n_inner < 1 || self.n_inner_2d == Some(0) {
            return Err(Error::invalid("n_inner must be >= 1"));
        }
        if !(self.proposal_scale.is_finite() && self.proposal_scale > 0.0) {
            return Err(Error::invalid(format!(
                "proposal_scale must be positive, got {}",
                self.proposal_scale
            )));
        }
        Ok(())
    }

    pub fn n_inner_2d(&self) -> usize {
        self.n_inner_2d.unwrap_or(self.n_inner)
    }

    pub fn evidence_rule_name(&self) -> &'static str {
        if self.use_importance_sampling {
            "importance"
        } else {
            "prior"
        }
    }

    pub fn evidence_rule(&self) -> Result<std::sync::Arc<dyn EvidenceRule>> {
        EvidenceRuleRegistry::default().get(self.evidence_rule_name())
    }

    fn rules(&self) -> Result<(QuadratureRule, QuadratureRule)> {
        Ok((
            gauss_hermite_rule(self.n_inner)?,
            gauss_hermite_rule(self.n_inner_2d())?,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub value: f64,
    pub std_error: f64,
    pub n_outer_used: usize,
    /// Inner evaluations that hit the log-density floor.
    pub clamped: usize,
}

impl EstimateResult {
    /// Mean and `sd / √n` of per-sample terms, summed in index order.
    pub fn from_terms(terms: &[f64], clamped: usize) -> Result<Self> {
        let n = terms.len();
        if n < 2 {
            return Err(Error::invalid("standard error needs at least 2 samples"));
        }
        let mean = terms.iter().sum::<f64>() / n as f64;
        let ss = terms.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>();
        let sd = (ss / (n - 1) as f64).sqrt();
        Ok(Self {
            value: mean,
            std_error: sd / (n as f64).sqrt(),
            n_outer_used: n,
            clamped,
        })
    }
}

/// Joint prior-predictive draw for outer sample `k`.
#[derive(Debug, Clone)]
pub(crate) struct OuterSample {
    pub theta: Vec<f64>,
    pub y: Vec<f64>,
    pub log_likelihood: LogEvidence,
}

pub(crate) fn outer_sample(
    model: &StatisticalModel,
    prior: &PriorSpec,
    seed: u64,
    k: usize,
) -> Result<OuterSample> {
    let mut stream = RandomStream::new(seed, stream_id(OUTER_TAG, &[k as u64]));
    let theta = prior.sample(&mut stream);
    let prediction = model.predict(&theta)?;
    let noise = model.noise().sample(&mut stream);
    let y: Vec<f64> = prediction.iter().zip(&noise).map(|(f, e)| f + e).collect();
    let ll = model.log_likelihood_of_prediction(&prediction, &y);
    Ok(OuterSample {
        theta,
        y,
        log_likelihood: LogEvidence::floored(ll),
    })
}

/// Shared per-call context for the inner integrals of one outer sample.
pub(crate) struct InnerContext<'a> {
    pub model: &'a StatisticalModel,
    pub prior: &'a PriorSpec,
    pub config: &'a EstimatorConfig,
    pub strategy: std::sync::Arc<dyn EvidenceRule>,
    pub rule_1d: QuadratureRule,
    pub rule_2d: QuadratureRule,
}

impl<'a> InnerContext<'a> {
    pub fn new(
        model: &'a StatisticalModel,
        prior: &'a PriorSpec,
        config: &'a EstimatorConfig,
    ) -> Result<Self> {
        config.validate()?;
        check_prior(model, prior)?;
        let (rule_1d, rule_2d) = config.rules()?;
        Ok(Self {
            model,
            prior,
            config,
            strategy: config.evidence_rule()?,
            rule_1d,
            rule_2d,
        })
    }

    /// `log p̂(y | θ_~free)` with proposals centered at the sampled values.
    pub fn evidence(&self, sample: &OuterSample, free: &[usize]) -> Result<LogEvidence> {
        let rule = if free.len() == 2 {
            &self.rule_2d
        } else {
            &self.rule_1d
        };
        let placements: Vec<NodePlacement> = free
            .iter()
            .map(|&f| {
                self.strategy.place(
                    self.prior,
                    f,
                    sample.theta[f],
                    self.config.proposal_scale,
                    rule,
                )
            })
            .collect();
        Integrand::new(self.model, &sample.y, &sample.theta, free)?.evidence(&placements)
    }
}

fn check_prior(model: &StatisticalModel, prior: &PriorSpec) -> Result<()> {
    if prior.len() != model.parameter_count() {
        return Err(Error::invalid(format!(
            "prior has {} parameters, model '{}' has {}",
            prior.len(),
            model.forward().name(),
            model.parameter_count()
        )));
    }
    Ok(())
}

/// Runs `f(k)` for `k in 0..n` on `workers` threads, results in index order.
pub(crate) fn map_samples<T, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if workers == 1 {
        return Ok((0..n).map(f).collect());
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

fn collect_terms(results: Vec<Result<(f64, usize)>>) -> Result<EstimateResult> {
    let mut terms = Vec::with_capacity(results.len());
    let mut clamped = 0;
    for (k, r) in results.into_iter().enumerate() {
        let (t, c) = r.map_err(|e| e.at_sample(k))?;
        terms.push(t);
        clamped += c;
    }
    EstimateResult::from_terms(&terms, clamped)
}

fn count(flags: &[LogEvidence]) -> usize {
    flags.iter().filter(|e| e.clamped).count()
}

/// `mean_k [log p(y^k | θ^k) − log p̂(y^k | θ_~i^k)]`.
pub fn information_gain(
    model: &StatisticalModel,
    prior: &PriorSpec,
    i: usize,
    config: &EstimatorConfig,
) -> Result<EstimateResult> {
    let ctx = InnerContext::new(model, prior, config)?;
    if i >= model.parameter_count() {
        return Err(Error::invalid(format!("parameter index {i} out of range")));
    }
    let results = map_samples(config.n_outer, config.workers, |k| {
        let s = outer_sample(model, prior, config.seed, k)?;
        let ev = ctx.evidence(&s, &[i])?;
        Ok((
            s.log_likelihood.value - ev.value,
            count(&[s.log_likelihood, ev]),
        ))
    })?;
    collect_terms(results)
}

/// `mean_k [log p(y|θ) + log p̂(y|θ_~ij) − log p̂(y|θ_i, θ_~ij) − log p̂(y|θ_j, θ_~ij)]`.
pub fn pairwise_dependence(
    model: &StatisticalModel,
    prior: &PriorSpec,
    i: usize,
    j: usize,
    config: &EstimatorConfig,
) -> Result<EstimateResult> {
    let ctx = InnerContext::new(model, prior, config)?;
    let m = model.parameter_count();
    if i >= m || j >= m || i == j {
        return Err(Error::invalid(format!("invalid parameter pair ({i}, {j})")));
    }
    let results = map_samples(config.n_outer, config.workers, |k| {
        let s = outer_sample(model, prior, config.seed, k)?;
        let both = ctx.evidence(&s, &[i, j])?;
        let free_j = ctx.evidence(&s, &[j])?;
        let free_i = ctx.evidence(&s, &[i])?;
        let t = s.log_likelihood.value + both.value - free_j.value - free_i.value;
        Ok((t, count(&[s.log_likelihood, both, free_i, free_j])))
    })?;
    collect_terms(results)
}

/// Wall-clock helper used by the report.
pub(crate) fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}
