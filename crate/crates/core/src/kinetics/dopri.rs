//! Dormand–Prince 5(4) with FSAL and standard step-size control.

use super::mechanism::MAX_SPECIES;
use super::reactor::{IntegratorOptions, Reactor, Trajectory};
use crate::error::{Error, Result};

const N: usize = MAX_SPECIES + 1;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Consecutive rejections tolerated before declaring the step collapsed.
const MAX_REJECTIONS: usize = 60;
/// Rise that counts as ignition, K.
pub(crate) const IGNITION_RISE: f64 = 50.0;
/// After ignition, stop once dT/dt has fallen below this fraction of its peak.
const STOP_FRACTION: f64 = 1e-2;

struct Tolerance<'a> {
    options: &'a IntegratorOptions,
    ns: usize,
}

impl Tolerance<'_> {
    fn scale(&self, i: usize, a: f64, b: f64) -> f64 {
        let atol = if i == self.ns {
            self.options.atol_temperature
        } else {
            self.options.atol
        };
        atol + self.options.rtol * a.abs().max(b.abs())
    }
}

fn record(reactor: &Reactor, traj: &mut Trajectory, t: f64, y: &[f64], dy: &[f64]) {
    let ns = reactor.dim() - 1;
    let mut c = vec![0.0; ns];
    reactor.concentrations(y, &mut c);
    traj.time.push(t);
    traj.temperature.push(y[ns]);
    traj.temperature_rate.push(dy[ns]);
    traj.concentrations.push(c);
}

pub(crate) fn integrate(
    reactor: &Reactor,
    t_end: f64,
    options: &IntegratorOptions,
    traj: &mut Trajectory,
) -> Result<()> {
    let n = reactor.dim();
    let ns = n - 1;
    let tol = Tolerance { options, ns };
    let mut y = [0.0; N];
    y[..n].copy_from_slice(reactor.initial_state());
    let t0_temperature = y[ns];
    let mut k1 = [0.0; N];
    reactor.derivative(&y[..n], &mut k1[..n]);
    let mut t = 0.0;
    record(reactor, traj, t, &y[..n], &k1[..n]);

    let mut h = initial_step(reactor, &y[..n], &k1[..n], &tol, t_end);
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        ([0.0; N], [0.0; N], [0.0; N], [0.0; N], [0.0; N], [0.0; N]);
    let mut stage = [0.0; N];
    let mut y_new = [0.0; N];
    let mut steps = 0usize;
    let mut rejections = 0usize;
    let mut peak_rate = f64::NEG_INFINITY;
    let mut since_peak = 0usize;

    while t < t_end {
        if steps >= options.max_steps {
            return Err(stiffness(h, t, &y[..n], ns));
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        for i in 0..n {
            stage[i] = y[i] + h * A21 * k1[i];
        }
        reactor.derivative(&stage[..n], &mut k2[..n]);
        for i in 0..n {
            stage[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        reactor.derivative(&stage[..n], &mut k3[..n]);
        for i in 0..n {
            stage[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        reactor.derivative(&stage[..n], &mut k4[..n]);
        for i in 0..n {
            stage[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        reactor.derivative(&stage[..n], &mut k5[..n]);
        for i in 0..n {
            stage[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        reactor.derivative(&stage[..n], &mut k6[..n]);
        for i in 0..n {
            y_new[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        reactor.derivative(&y_new[..n], &mut k7[..n]);

        let mut err = 0.0;
        for i in 0..n {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let s = tol.scale(i, y[i], y_new[i]);
            err += (e / s) * (e / s);
        }
        let err = (err / n as f64).sqrt();
        let ok = err <= 1.0 && y_new[..n].iter().all(|v| v.is_finite());

        if ok {
            rejections = 0;
            steps += 1;
            t = if last { t_end } else { t + h };
            let mut clamped = false;
            for v in y_new[..ns].iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                    clamped = true;
                }
            }
            y = y_new;
            if clamped {
                reactor.derivative(&y[..n], &mut k1[..n]);
            } else {
                k1 = k7;
            }
            record(reactor, traj, t, &y[..n], &k1[..n]);

            if options.stop_after_ignition {
                let rate = k1[ns];
                if rate > peak_rate {
                    peak_rate = rate;
                    since_peak = 0;
                } else {
                    since_peak += 1;
                }
                let risen = y[ns] - t0_temperature >= IGNITION_RISE;
                if risen && since_peak >= 2 && rate < STOP_FRACTION * peak_rate {
                    break;
                }
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
        } else {
            rejections += 1;
            let factor = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h *= factor;
            if rejections > MAX_REJECTIONS || h <= 16.0 * f64::EPSILON * t.abs() || h == 0.0 {
                return Err(stiffness(h, t, &y[..n], ns));
            }
        }
    }
    Ok(())
}

fn stiffness(step: f64, time: f64, y: &[f64], ns: usize) -> Error {
    Error::Stiffness {
        step,
        time,
        temperature: y[ns],
        state: y.to_vec(),
    }
}

/// Starting step from the usual two-evaluation estimate of the local
/// scale of the solution.
fn initial_step(reactor: &Reactor, y: &[f64], f0: &[f64], tol: &Tolerance, t_end: f64) -> f64 {
    let n = y.len();
    let norm = |v: &dyn Fn(usize) -> f64| {
        ((0..n)
            .map(|i| {
                let x = v(i) / tol.scale(i, y[i], y[i]);
                x * x
            })
            .sum::<f64>()
            / n as f64)
            .sqrt()
    };
    let d0 = norm(&|i| y[i]);
    let d1 = norm(&|i| f0[i]);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6 * t_end
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(t_end);
    let mut y1 = [0.0; N];
    for i in 0..n {
        y1[i] = y[i] + h0 * f0[i];
    }
    let mut f1 = [0.0; N];
    reactor.derivative(&y1[..n], &mut f1[..n]);
    let d2 = norm(&|i| f1[i] - f0[i]) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6 * h0)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(t_end)
}
