//! Two-step methane-air chemistry in an adiabatic constant-pressure reactor,
//! with the ignition delay as observable.

mod dopri;
mod ignition;
mod mechanism;
mod reactor;

use std::sync::Arc;

use serde::Deserialize;
use serde_json::Value;

pub use ignition::ignition_delay;
pub use mechanism::{Mechanism, Mixture, Nasa7, Order, Reaction, Species};
pub use reactor::{
    integrate_reactor, integrate_reactor_with, rates_into, reaction_rates, IntegratorOptions,
    KineticsInput, Reactor, ReactorState, Trajectory,
};

use crate::error::{Error, Result};
use crate::model::ForwardModel;

/// `log₁₀ A = θ₁ + tanh(θ₂ + θ₃ φ) · T₀ / 1000`.
#[allow(non_snake_case)]
pub fn preexponential_logA(theta: &[f64], t0: f64, phi: f64) -> f64 {
    theta[0] + (theta[1] + theta[2] * phi).tanh() * t0 / 1000.0
}

/// Default horizon for one ignition run, s. Runs stop shortly after ignition.
pub const DEFAULT_T_END: f64 = 10.0;

/// `θ ↦ (ln t_ign(θ; input))_input` with `A = 10^{log₁₀ A(θ, T₀, φ)}`.
#[derive(Debug, Clone)]
pub struct CombustionModel {
    inputs: Vec<KineticsInput>,
    names: Vec<String>,
    options: IntegratorOptions,
    t_end: f64,
}

impl CombustionModel {
    pub fn new(inputs: Vec<KineticsInput>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::invalid(
                "methane model needs at least one input condition",
            ));
        }
        for i in &inputs {
            i.validate()?;
        }
        Ok(Self {
            inputs,
            names: vec!["theta1".into(), "theta2".into(), "theta3".into()],
            options: IntegratorOptions {
                stop_after_ignition: true,
                ..IntegratorOptions::default()
            },
            t_end: DEFAULT_T_END,
        })
    }

    /// Calibration conditions `T₀ ∈ {1100, 1400, 1700, 2000} K`, `φ = 1`,
    /// `P₀ = 100 kPa`.
    pub fn reference() -> Self {
        let inputs = [1100.0, 1400.0, 1700.0, 2000.0]
            .iter()
            .map(|&t0| KineticsInput {
                t0,
                phi: 1.0,
                p0: 1.0e5,
            })
            .collect();
        Self::new(inputs).expect("reference inputs are valid")
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.options.rtol = rtol;
        self.options.atol = atol;
        self
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn inputs(&self) -> &[KineticsInput] {
        &self.inputs
    }

    /// Ignition delay (s) for one input at the given `log₁₀ A`.
    pub fn ignition_delay_at(&self, input: &KineticsInput, log10_a: f64) -> Result<f64> {
        let a = 10f64.powf(log10_a);
        let traj = integrate_reactor_with(
            Mechanism::methane_2step(),
            input,
            a,
            self.t_end,
            &self.options,
        )?;
        ignition_delay(&traj)
    }
}

/// Natural-log ignition delays of `theta` over `inputs`.
pub fn combustion_forward(theta: &[f64], model: &CombustionModel) -> Result<Vec<f64>> {
    if theta.len() != 3 {
        return Err(Error::invalid(format!(
            "methane model takes 3 parameters, got {}",
            theta.len()
        )));
    }
    model
        .inputs
        .iter()
        .map(|input| {
            let log_a = preexponential_logA(theta, input.t0, input.phi);
            model
                .ignition_delay_at(input, log_a)
                .map(f64::ln)
                .map_err(|e| Error::ModelEvaluation {
                    theta: theta.to_vec(),
                    reason: format!("T0 = {} K, phi = {}: {e}", input.t0, input.phi),
                })
        })
        .collect()
}

impl ForwardModel for CombustionModel {
    fn name(&self) -> &str {
        "methane_2step"
    }

    fn parameter_names(&self) -> &[String] {
        &self.names
    }

    fn output_count(&self) -> usize {
        self.inputs.len()
    }

    fn evaluate(&self, theta: &[f64]) -> Result<Vec<f64>> {
        combustion_forward(theta, self)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MethaneSettings {
    #[serde(default)]
    inputs: Option<Vec<KineticsInput>>,
    #[serde(default)]
    rtol: Option<f64>,
    #[serde(default)]
    atol: Option<f64>,
    #[serde(default)]
    t_end: Option<f64>,
}

pub(crate) fn methane_from_settings(settings: &Value) -> Result<Arc<dyn ForwardModel>> {
    let s: MethaneSettings = if settings.is_null() {
        MethaneSettings {
            inputs: None,
            rtol: None,
            atol: None,
            t_end: None,
        }
    } else {
        serde_json::from_value(settings.clone())
            .map_err(|e| Error::invalid(format!("methane_2step settings: {e}")))?
    };
    let mut model = match s.inputs {
        Some(inputs) => CombustionModel::new(inputs)?,
        None => CombustionModel::reference(),
    };
    let rtol = s.rtol.unwrap_or(model.options.rtol);
    let atol = s.atol.unwrap_or(model.options.atol);
    if !(rtol > 0.0 && atol > 0.0) {
        return Err(Error::invalid("methane_2step: tolerances must be positive"));
    }
    model = model.with_tolerances(rtol, atol);
    if let Some(t_end) = s.t_end {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::invalid("methane_2step: t_end must be positive"));
        }
        model = model.with_t_end(t_end);
    }
    Ok(Arc::new(model))
}
