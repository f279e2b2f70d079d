use crate::error::{Error, Result};

/// `log Σ exp(log_terms[k] + log_weights[k])`, shifted by the maximum so
/// that no term overflows and the largest never underflows.
pub fn log_sum_exp_weighted(log_terms: &[f64], log_weights: &[f64]) -> Result<f64> {
    if log_terms.is_empty() {
        return Err(Error::invalid("log_sum_exp_weighted: empty input"));
    }
    if log_terms.len() != log_weights.len() {
        return Err(Error::invalid(format!(
            "log_sum_exp_weighted: {} terms but {} weights",
            log_terms.len(),
            log_weights.len()
        )));
    }
    let max = log_terms
        .iter()
        .zip(log_weights)
        .map(|(t, w)| t + w)
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Ok(max);
    }
    let sum: f64 = log_terms
        .iter()
        .zip(log_weights)
        .map(|(t, w)| (t + w - max).exp())
        .sum();
    Ok(max + sum.ln())
}

/// Unweighted variant over an already combined slice. Returns `-inf` for
/// an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
