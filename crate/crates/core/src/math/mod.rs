//! Numerical primitives shared by every estimator: Gaussian densities,
//! Gauss-Hermite rules, log-domain accumulation and seeded random streams.

mod gaussian;
mod logsum;
mod quadrature;
mod rng;

pub use gaussian::{cholesky, log_det_spd, GaussianDensity, LN_2PI};
pub use logsum::{log_sum_exp, log_sum_exp_weighted};
pub use quadrature::{gauss_hermite_rule, QuadratureRule, MAX_ORDER};
pub use rng::{stream_id, RandomStream};

/// Log-density floor substituted for an evidence whose every inner term
/// underflowed.
pub const LOG_DENSITY_FLOOR: f64 = -1e8;
