use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Deserialize;
use serde_json::Value;

use super::{ForwardModel, LinearModel};
use crate::error::{Error, Result};
use crate::oracle::linspace;

/// Builds a forward model from model-specific JSON settings.
pub type ModelFactory = Arc<dyn Fn(&Value) -> Result<Arc<dyn ForwardModel>> + Send + Sync>;

/// Name → factory table so callers pick models at runtime.
#[derive(Clone)]
pub struct ModelRegistry {
    factories: BTreeMap<String, ModelFactory>,
}

impl std::fmt::Debug for ModelRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelRegistry")
            .field("models", &self.names())
            .finish()
    }
}

impl Default for ModelRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("linear_gaussian", Arc::new(linear_from_settings));
        r.register(
            "methane_2step",
            Arc::new(crate::kinetics::methane_from_settings),
        );
        r
    }
}

impl ModelRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    /// Registers (or replaces) a factory under `name`.
    pub fn register(&mut self, name: &str, factory: ModelFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn build(&self, name: &str, settings: &Value) -> Result<Arc<dyn ForwardModel>> {
        let factory = self.factories.get(name).ok_or_else(|| Error::Unknown {
            kind: "model",
            name: name.to_string(),
        })?;
        factory(settings)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearSettings {
    /// Explicit feature matrix, row-major.
    #[serde(default)]
    features: Option<Vec<Vec<f64>>>,
    /// Vandermonde columns `d, …, d^m` over these inputs.
    #[serde(default)]
    d_points: Option<Vec<f64>>,
    /// Vandermonde over `n_points` evenly spaced inputs in `d_range`.
    #[serde(default)]
    d_range: Option<[f64; 2]>,
    #[serde(default)]
    n_points: Option<usize>,
    #[serde(default)]
    m: Option<usize>,
    #[serde(default)]
    parameter_names: Option<Vec<String>>,
}

fn linear_from_settings(settings: &Value) -> Result<Arc<dyn ForwardModel>> {
    let s: LinearSettings = serde_json::from_value(settings.clone())
        .map_err(|e| Error::invalid(format!("linear_gaussian settings: {e}")))?;
    let features = match (&s.features, &s.d_points, &s.d_range) {
        (Some(rows), None, None) => {
            if s.m.is_some() || s.n_points.is_some() {
                return Err(Error::invalid(
                    "linear_gaussian: 'm'/'n_points' conflict with explicit 'features'",
                ));
            }
            let n = rows.len();
            let m = rows.first().map_or(0, Vec::len);
            if n == 0 || m == 0 || rows.iter().any(|r| r.len() != m) {
                return Err(Error::invalid(
                    "linear_gaussian: 'features' must be a non-empty rectangular matrix",
                ));
            }
            DMatrix::from_fn(n, m, |i, j| rows[i][j])
        }
        (None, Some(d), None) => {
            if s.n_points.is_some() {
                return Err(Error::invalid(
                    "linear_gaussian: 'n_points' conflicts with 'd_points'",
                ));
            }
            let m = s.m.ok_or_else(|| {
                Error::invalid("linear_gaussian: 'm' is required with 'd_points'")
            })?;
            crate::oracle::build_vandermonde(d, m)?
        }
        (None, None, Some([lo, hi])) => {
            let n = s.n_points.ok_or_else(|| {
                Error::invalid("linear_gaussian: 'n_points' is required with 'd_range'")
            })?;
            let m = s
                .m
                .ok_or_else(|| Error::invalid("linear_gaussian: 'm' is required with 'd_range'"))?;
            crate::oracle::build_vandermonde(&linspace(*lo, *hi, n), m)?
        }
        _ => {
            return Err(Error::invalid(
                "linear_gaussian: give exactly one of 'features', 'd_points', 'd_range'",
            ))
        }
    };
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("linear_gaussian: non-finite feature entry"));
    }
    let model = match s.parameter_names {
        Some(names) => LinearModel::with_names(features, names)?,
        None => LinearModel::new(features)?,
    };
    Ok(Arc::new(model))
}
