//! First-order Sobol indices by pick-freeze sampling.
//!
//! Per output, `V_i = V − (1/2N) Σ_k (f(B_k) − f(A_B^i_k))²` (Jansen), with
//! `A_B^i` the matrix `A` whose column `i` is taken from `B`, and `V` the
//! variance of the pooled `f(A)`, `f(B)` values. `S_i = V_i / V` is averaged
//! uniformly over outputs with non-zero variance. Standard errors are
//! delete-one jackknife over sample rows of the averaged index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::map_samples;
use crate::math::{stream_id, RandomStream};
use crate::model::{ForwardModel, PriorSpec};

const TAG_A: u64 = 0x736f_626f_6c41;
const TAG_B: u64 = 0x736f_626f_6c42;

/// Default number of base rows.
pub const DEFAULT_SAMPLES: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolResult {
    pub parameter_names: Vec<String>,
    pub indices: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Base rows `N`; the model is evaluated `N (m + 2)` times.
    pub n_samples: usize,
    /// Outputs with zero variance, excluded from the average.
    pub constant_outputs: usize,
}

/// Runs pick-freeze estimation of the first-order indices of `model`
/// (without observation noise) under `prior`.
pub fn first_order_indices(
    model: &dyn ForwardModel,
    prior: &PriorSpec,
    n_samples: usize,
    seed: u64,
    workers: usize,
) -> Result<SobolResult> {
    let m = model.parameter_count();
    if prior.len() != m {
        return Err(Error::invalid(format!(
            "prior has {} parameters, model '{}' has {m}",
            prior.len(),
            model.name()
        )));
    }
    if n_samples < 3 {
        return Err(Error::invalid("Sobol estimation needs at least 3 samples"));
    }
    let n_out = model.output_count();
    let draw = |tag: u64, k: usize| {
        prior.sample(&mut RandomStream::new(seed, stream_id(tag, &[k as u64])))
    };

    // Row k: f(A_k), f(B_k), f(A_B^1_k), …, f(A_B^m_k)
    let rows = map_samples(n_samples, workers, |k| -> Result<Vec<Vec<f64>>> {
        let a = draw(TAG_A, k);
        let b = draw(TAG_B, k);
        let eval = |theta: &[f64]| -> Result<Vec<f64>> {
            let out = model.evaluate(theta)?;
            if out.len() != n_out || out.iter().any(|v| !v.is_finite()) {
                return Err(Error::ModelEvaluation {
                    theta: theta.to_vec(),
                    reason: "invalid model output".into(),
                });
            }
            Ok(out)
        };
        let mut evals = Vec::with_capacity(m + 2);
        evals.push(eval(&a)?);
        evals.push(eval(&b)?);
        for i in 0..m {
            let mut hybrid = a.clone();
            hybrid[i] = b[i];
            evals.push(eval(&hybrid)?);
        }
        Ok(evals)
    })?;
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(k, r)| r.map_err(|e| e.at_sample(k)))
        .collect::<Result<Vec<_>>>()?;

    let n = n_samples as f64;
    // Pooled moments per output.
    let mut sum = vec![0.0; n_out];
    let mut sum_sq = vec![0.0; n_out];
    for r in &rows {
        for o in 0..n_out {
            for v in [r[0][o], r[1][o]] {
                sum[o] += v;
                sum_sq[o] += v * v;
            }
        }
    }
    let variance = |s: f64, s2: f64, count: f64| (s2 - s * s / count) / (count - 1.0);
    // Relative test: a constant output leaves only roundoff in the variance.
    let active: Vec<usize> = (0..n_out)
        .filter(|&o| variance(sum[o], sum_sq[o], 2.0 * n) > 1e-12 * sum_sq[o] / (2.0 * n))
        .collect();
    if active.is_empty() {
        return Err(Error::DegenerateModel(format!(
            "model '{}' has zero output variance under the prior",
            model.name()
        )));
    }

    // Σ_k (f(B) − f(A_B^i))² per (i, output).
    let mut d2 = vec![vec![0.0; n_out]; m];
    for r in &rows {
        for i in 0..m {
            for &o in &active {
                let d = r[1][o] - r[2 + i][o];
                d2[i][o] += d * d;
            }
        }
    }

    let index = |i: usize, drop: Option<&Vec<Vec<f64>>>| -> f64 {
        let count = if drop.is_some() { n - 1.0 } else { n };
        active
            .iter()
            .map(|&o| {
                let (mut s, mut s2, mut dd) = (sum[o], sum_sq[o], d2[i][o]);
                if let Some(r) = drop {
                    s -= r[0][o] + r[1][o];
                    s2 -= r[0][o] * r[0][o] + r[1][o] * r[1][o];
                    let d = r[1][o] - r[2 + i][o];
                    dd -= d * d;
                }
                let v = variance(s, s2, 2.0 * count);
                1.0 - dd / (2.0 * count) / v
            })
            .sum::<f64>()
            / active.len() as f64
    };

    let mut indices = Vec::with_capacity(m);
    let mut std_errors = Vec::with_capacity(m);
    for i in 0..m {
        indices.push(index(i, None));
        let loo: Vec<f64> = rows.iter().map(|r| index(i, Some(r))).collect();
        let mean = loo.iter().sum::<f64>() / n;
        let ss = loo.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
        std_errors.push(((n - 1.0) / n * ss).sqrt());
    }
    Ok(SobolResult {
        parameter_names: model.parameter_names().to_vec(),
        indices,
        std_errors,
        n_samples,
        constant_outputs: n_out - active.len(),
    })
}
