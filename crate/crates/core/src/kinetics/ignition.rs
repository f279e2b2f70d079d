use super::dopri::IGNITION_RISE;
use super::reactor::Trajectory;
use crate::error::{Error, Result};

/// Time of the steepest temperature rise, refined by the vertex of the
/// parabola through the discrete maximum of dT/dt and its two neighbours.
pub fn ignition_delay(trajectory: &Trajectory) -> Result<f64> {
    let temps = &trajectory.temperature;
    let Some(&first) = temps.first() else {
        return Err(Error::NoIgnition { rise: 0.0 });
    };
    let rise = temps.iter().fold(f64::NEG_INFINITY, |m, &t| m.max(t)) - first;
    if rise.is_nan() || rise < IGNITION_RISE {
        return Err(Error::NoIgnition {
            rise: rise.max(0.0),
        });
    }
    let rates = &trajectory.temperature_rate;
    let times = &trajectory.time;
    let k = rates
        .iter()
        .enumerate()
        .fold(0, |best, (i, &r)| if r > rates[best] { i } else { best });
    if k == 0 || k + 1 >= rates.len() {
        return Ok(times[k]);
    }
    // Local coordinates around t_k keep the refinement shift-equivariant.
    let (u0, u2) = (times[k - 1] - times[k], times[k + 1] - times[k]);
    let (f0, f1, f2) = (rates[k - 1], rates[k], rates[k + 1]);
    let s01 = (f1 - f0) / -u0;
    let s12 = (f2 - f1) / u2;
    let curvature = (s12 - s01) / (u2 - u0);
    if curvature.is_nan() || curvature >= 0.0 {
        return Ok(times[k]);
    }
    // f(u) = f1 + s01 (u) + curvature u (u − u0)  ⇒  f'(u) = s01 + curvature (2u − u0)
    let vertex = (u0 - s01 / curvature) / 2.0;
    Ok(times[k] + vertex.clamp(u0, u2))
}
