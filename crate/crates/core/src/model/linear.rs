use nalgebra::DMatrix;

use super::ForwardModel;
use crate::error::{Error, Result};

/// `F(θ) = Aθ` for a fixed feature matrix `A` (n × m).
#[derive(Debug, Clone)]
pub struct LinearModel {
    features: DMatrix<f64>,
    names: Vec<String>,
}

impl LinearModel {
    pub fn new(features: DMatrix<f64>) -> Result<Self> {
        let names = (1..=features.ncols())
            .map(|i| format!("theta{i}"))
            .collect();
        Self::with_names(features, names)
    }

    pub fn with_names(features: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        if features.ncols() == 0 || features.nrows() == 0 {
            return Err(Error::invalid("feature matrix must be non-empty"));
        }
        if names.len() != features.ncols() {
            return Err(Error::invalid(format!(
                "{} parameter names for {} feature columns",
                names.len(),
                features.ncols()
            )));
        }
        Ok(Self { features, names })
    }

    /// Vandermonde-style map with columns `d, d², …, d^m`.
    pub fn vandermonde(d_points: &[f64], m: usize) -> Result<Self> {
        Self::new(crate::oracle::build_vandermonde(d_points, m)?)
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }
}

impl ForwardModel for LinearModel {
    fn name(&self) -> &str {
        "linear_gaussian"
    }

    fn parameter_names(&self) -> &[String] {
        &self.names
    }

    fn output_count(&self) -> usize {
        self.features.nrows()
    }

    fn evaluate(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let (n, m) = self.features.shape();
        let mut out = vec![0.0; n];
        for (j, t) in theta.iter().enumerate().take(m) {
            let column = self.features.column(j);
            for (o, a) in out.iter_mut().zip(column.iter()) {
                *o += a * t;
            }
        }
        Ok(out)
    }

    fn linear_features(&self) -> Option<&DMatrix<f64>> {
        Some(&self.features)
    }
}
