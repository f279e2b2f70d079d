pub mod error;
pub mod estimators;
pub mod kinetics;
pub mod math;
pub mod mcmc;
pub mod model;
pub mod oracle;
pub mod sobol;

pub use error::{Error, Result};
