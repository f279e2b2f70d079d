use serde::{Deserialize, Serialize};

use super::{
    count, map_samples, outer_sample, timed, EstimateResult, EstimatorConfig, InnerContext,
    LogEvidence,
};
use crate::error::{Error, Result};
use crate::model::{PriorSpec, StatisticalModel};

/// One report entry: an estimate or the error that stopped it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryOutcome {
    pub estimate: Option<EstimateResult>,
    pub error: Option<String>,
    /// Compute time attributed to this entry, summed over outer samples.
    pub seconds: f64,
}

impl EntryOutcome {
    fn from_parts(terms: Vec<Result<(f64, usize)>>, seconds: f64) -> Self {
        let mut values = Vec::with_capacity(terms.len());
        let mut clamped = 0;
        for (k, t) in terms.into_iter().enumerate() {
            match t {
                Ok((v, c)) => {
                    values.push(v);
                    clamped += c;
                }
                Err(e) => {
                    return Self {
                        estimate: None,
                        error: Some(e.at_sample(k).to_string()),
                        seconds,
                    }
                }
            }
        }
        match EstimateResult::from_terms(&values, clamped) {
            Ok(est) => Self {
                estimate: Some(est),
                error: None,
                seconds,
            },
            Err(e) => Self {
                estimate: None,
                error: Some(e.to_string()),
                seconds,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifiabilityReport {
    pub parameter_names: Vec<String>,
    pub config: EstimatorConfig,
    pub information_gain: Vec<EntryOutcome>,
    /// Symmetric `m × m`; the diagonal is `None`.
    pub dependence: Vec<Vec<Option<EntryOutcome>>>,
}

impl IdentifiabilityReport {
    pub fn gain(&self, i: usize) -> Option<&EstimateResult> {
        self.information_gain.get(i)?.estimate.as_ref()
    }

    pub fn pair(&self, i: usize, j: usize) -> Option<&EstimateResult> {
        self.dependence.get(i)?.get(j)?.as_ref()?.estimate.as_ref()
    }
}

struct SampleOutcome {
    gains: Vec<Result<(f64, usize)>>,
    pairs: Vec<Result<(f64, usize)>>,
    gain_seconds: Vec<f64>,
    pair_seconds: Vec<f64>,
}

/// Every gain and every unordered pair in one pass over the outer samples.
///
/// The 1-D evidences `p̂(y | θ_~i)` are shared between the gain of `i` and
/// each pair containing `i`. A failure in one entry leaves the others intact.
pub fn full_report(
    model: &StatisticalModel,
    prior: &PriorSpec,
    config: &EstimatorConfig,
) -> Result<IdentifiabilityReport> {
    let ctx = InnerContext::new(model, prior, config)?;
    let m = model.parameter_count();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| ((i + 1)..m).map(move |j| (i, j)))
        .collect();

    let per_sample = map_samples(config.n_outer, config.workers, |k| {
        let shared = |e: &Error| -> Result<(f64, usize)> { Err(e.clone()) };
        let (sample, base_seconds) = timed(|| outer_sample(model, prior, config.seed, k));
        let sample = match sample {
            Ok(s) => s,
            Err(e) => {
                return SampleOutcome {
                    gains: (0..m).map(|_| shared(&e)).collect(),
                    pairs: pairs.iter().map(|_| shared(&e)).collect(),
                    gain_seconds: vec![base_seconds; m],
                    pair_seconds: vec![0.0; pairs.len()],
                }
            }
        };
        let mut one_d: Vec<Result<LogEvidence>> = Vec::with_capacity(m);
        let mut gain_seconds = Vec::with_capacity(m);
        for i in 0..m {
            let (ev, s) = timed(|| ctx.evidence(&sample, &[i]));
            one_d.push(ev);
            gain_seconds.push(base_seconds + s);
        }
        let ll = sample.log_likelihood;
        let gains = one_d
            .iter()
            .map(|ev| match ev {
                Ok(ev) => Ok((ll.value - ev.value, count(&[ll, *ev]))),
                Err(e) => shared(e),
            })
            .collect();
        let mut pair_terms = Vec::with_capacity(pairs.len());
        let mut pair_seconds = Vec::with_capacity(pairs.len());
        for &(i, j) in &pairs {
            let (both, s) = timed(|| ctx.evidence(&sample, &[i, j]));
            pair_seconds.push(s);
            let term = match (&both, &one_d[i], &one_d[j]) {
                (Ok(b), Ok(ei), Ok(ej)) => Ok((
                    ll.value + b.value - ej.value - ei.value,
                    count(&[ll, *b, *ei, *ej]),
                )),
                (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => shared(e),
            };
            pair_terms.push(term);
        }
        SampleOutcome {
            gains,
            pairs: pair_terms,
            gain_seconds,
            pair_seconds,
        }
    })?;

    let mut gain_terms: Vec<Vec<Result<(f64, usize)>>> = (0..m).map(|_| Vec::new()).collect();
    let mut pair_terms: Vec<Vec<Result<(f64, usize)>>> = pairs.iter().map(|_| Vec::new()).collect();
    let mut gain_seconds = vec![0.0; m];
    let mut pair_seconds = vec![0.0; pairs.len()];
    for outcome in per_sample {
        for (i, t) in outcome.gains.into_iter().enumerate() {
            gain_terms[i].push(t);
            gain_seconds[i] += outcome.gain_seconds[i];
        }
        for (p, t) in outcome.pairs.into_iter().enumerate() {
            pair_terms[p].push(t);
            pair_seconds[p] += outcome.pair_seconds[p];
        }
    }

    let information_gain = gain_terms
        .into_iter()
        .zip(gain_seconds)
        .map(|(t, s)| EntryOutcome::from_parts(t, s))
        .collect();
    let mut dependence: Vec<Vec<Option<EntryOutcome>>> = vec![vec![None; m]; m];
    for ((&(i, j), t), s) in pairs.iter().zip(pair_terms).zip(pair_seconds) {
        let entry = EntryOutcome::from_parts(t, s);
        dependence[j][i] = Some(entry.clone());
        dependence[i][j] = Some(entry);
    }
    Ok(IdentifiabilityReport {
        parameter_names: model.forward().parameter_names().to_vec(),
        config: config.clone(),
        information_gain,
        dependence,
    })
}
