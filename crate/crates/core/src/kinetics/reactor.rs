//! Adiabatic, constant-pressure, ideal-gas reactor.
//!
//! The state is `(z_1, …, z_S, T)` with `z_s` the moles of species `s` per
//! unit mass scaled by the initial density, so `z = c` at `t = 0` and
//! `c_s = z_s · T₀Σz₀ / (TΣz)` afterwards.

use serde::{Deserialize, Serialize};

use super::mechanism::{Mechanism, MAX_REACTIONS, MAX_SPECIES};
use crate::error::{Error, Result};

/// Design inputs of one ignition experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KineticsInput {
    /// Initial temperature, K.
    pub t0: f64,
    /// Equivalence ratio.
    pub phi: f64,
    /// Pressure, Pa.
    pub p0: f64,
}

impl KineticsInput {
    pub fn new(t0: f64, phi: f64, p0: f64) -> Result<Self> {
        let input = Self { t0, phi, p0 };
        input.validate()?;
        Ok(input)
    }

    pub fn validate(&self) -> Result<()> {
        if !(900.0..=2500.0).contains(&self.t0) {
            return Err(Error::invalid(format!(
                "T0 must be in [900, 2500] K, got {}",
                self.t0
            )));
        }
        if !(self.phi.is_finite() && self.phi > 0.0) {
            return Err(Error::invalid(format!(
                "phi must be positive, got {}",
                self.phi
            )));
        }
        if !(self.p0.is_finite() && self.p0 > 0.0) {
            return Err(Error::invalid(format!(
                "P0 must be positive, got {}",
                self.p0
            )));
        }
        Ok(())
    }
}

/// Concentrations (mol/cm³, mechanism species order), temperature and pressure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactorState {
    pub concentrations: Vec<f64>,
    pub temperature: f64,
    pub pressure: f64,
}

impl ReactorState {
    /// Unburnt `φ CH4 + 2 (O2 + 3.76 N2)` at `(T₀, P₀)`.
    pub fn initial(mech: &Mechanism, input: &KineticsInput) -> Result<Self> {
        input.validate()?;
        let mix = &mech.mixture;
        let mut moles = vec![0.0; mech.species_count()];
        moles[mix.fuel] = input.phi;
        moles[mix.oxidizer] = mix.stoich_o2_per_fuel;
        moles[mix.diluent] = mix.stoich_o2_per_fuel * mix.air_n2_per_o2;
        let total: f64 = moles.iter().sum();
        // mol/m³ → mol/cm³
        let c_total = input.p0 / (mech.r_joule * input.t0) * 1e-6;
        Ok(Self {
            concentrations: moles.iter().map(|n| n / total * c_total).collect(),
            temperature: input.t0,
            pressure: input.p0,
        })
    }
}

/// Rate-law values `k_r` (mol/cm³/s) at concentrations `c` and temperature `t`.
///
/// A reaction whose listed reactant is exhausted (`c ≤ 0`) has rate zero;
/// otherwise negative/fractional orders read `max(c, c_min)`.
pub fn rates_into(mech: &Mechanism, c: &[f64], t: f64, a: f64, out: &mut [f64]) {
    let mut ln_c = [0.0; MAX_SPECIES];
    for (l, &ci) in ln_c.iter_mut().zip(c) {
        *l = ci.max(mech.c_min).ln();
    }
    let inv_rt = 1.0 / (mech.r_cal * t);
    for (r, k) in mech.reactions.iter().zip(out.iter_mut()) {
        let pre = if r.parameterized {
            a
        } else {
            r.pre_exponential
        };
        if pre <= 0.0 || r.reactants.iter().any(|&s| c[s] <= 0.0) {
            *k = 0.0;
            continue;
        }
        let mut log_part = pre.ln() - r.activation_energy * inv_rt;
        let mut product = 1.0;
        for o in &r.orders {
            if o.floored {
                log_part += o.exponent * ln_c[o.species];
            } else {
                product *= c[o.species].max(0.0).powi(o.exponent as i32);
            }
        }
        *k = product * log_part.exp();
    }
}

/// `(k₁, k₂f, k₂b)` for the bundled mechanism with `k₁`'s pre-exponential `a`.
pub fn reaction_rates(state: &ReactorState, a: f64) -> (f64, f64, f64) {
    let mech = Mechanism::methane_2step();
    let mut k = [0.0; MAX_REACTIONS];
    rates_into(mech, &state.concentrations, state.temperature, a, &mut k);
    (k[0], k[1], k[2])
}

/// Right-hand side of the reactor equations for one `(mechanism, input, A)`.
#[derive(Debug, Clone)]
pub struct Reactor<'m> {
    mech: &'m Mechanism,
    a: f64,
    pressure: f64,
    /// `T₀ Σz₀`.
    reference: f64,
    initial: Vec<f64>,
}

impl<'m> Reactor<'m> {
    pub fn new(mech: &'m Mechanism, input: &KineticsInput, a: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::invalid(format!(
                "pre-exponential factor must be finite and >= 0, got {a}"
            )));
        }
        let state = ReactorState::initial(mech, input)?;
        let mut initial = state.concentrations.clone();
        let sum: f64 = initial.iter().sum();
        initial.push(input.t0);
        Ok(Self {
            mech,
            a,
            pressure: input.p0,
            reference: input.t0 * sum,
            initial,
        })
    }

    pub fn mechanism(&self) -> &Mechanism {
        self.mech
    }

    /// State length: species then temperature.
    pub fn dim(&self) -> usize {
        self.mech.species_count() + 1
    }

    pub fn initial_state(&self) -> &[f64] {
        &self.initial
    }

    /// Concentrations (mol/cm³) of a state vector.
    pub fn concentrations(&self, y: &[f64], out: &mut [f64]) {
        let ns = self.mech.species_count();
        let t = y[ns];
        let sum: f64 = y[..ns].iter().map(|z| z.max(0.0)).sum();
        let scale = self.reference / (t * sum);
        for (o, z) in out.iter_mut().zip(&y[..ns]) {
            *o = z.max(0.0) * scale;
        }
    }

    /// `dy/dt`.
    pub fn derivative(&self, y: &[f64], dy: &mut [f64]) {
        let mech = self.mech;
        let ns = mech.species_count();
        let t = y[ns];
        let mut c = [0.0; MAX_SPECIES];
        self.concentrations(y, &mut c[..ns]);
        let mut k = [0.0; MAX_REACTIONS];
        rates_into(mech, &c[..ns], t, self.a, &mut k);
        let mut wdot = [0.0; MAX_SPECIES];
        for (r, &kr) in mech.reactions.iter().zip(&k) {
            for &(s, nu) in &r.stoich {
                wdot[s] += nu * kr;
            }
        }
        let mut heat = 0.0;
        let mut capacity = 0.0;
        for (s, sp) in mech.species.iter().enumerate() {
            heat += sp.thermo.h_over_rt(t) * wdot[s];
            capacity += sp.thermo.cp_over_r(t) * c[s];
        }
        // −Σ h ω̇ / Σ c cp with the R's cancelling: h = (h/RT)·R·T, cp = (cp/R)·R.
        let dtdt = if capacity > 0.0 {
            -heat * t / capacity
        } else {
            0.0
        };
        let to_state = t * y[..ns].iter().map(|z| z.max(0.0)).sum::<f64>() / self.reference;
        for (d, w) in dy[..ns].iter_mut().zip(&wdot) {
            *d = w * to_state;
        }
        dy[ns] = dtdt;
    }

    pub fn pressure(&self) -> f64 {
        self.pressure
    }
}

/// Time series of one reactor run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub species: Vec<String>,
    /// s, strictly increasing.
    pub time: Vec<f64>,
    /// K.
    pub temperature: Vec<f64>,
    /// dT/dt at each time point, K/s.
    pub temperature_rate: Vec<f64>,
    /// mol/cm³ per time point, mechanism species order.
    pub concentrations: Vec<Vec<f64>>,
    /// Pa.
    pub pressure: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    /// C, H, O atoms per N atom at point `k`; constant along an exact
    /// trajectory since N₂ is inert.
    pub fn element_ratios(&self, mech: &Mechanism, k: usize) -> [f64; 3] {
        let mut atoms = [0.0; 4];
        for (s, c) in self.concentrations[k].iter().enumerate() {
            for (e, a) in atoms.iter_mut().enumerate() {
                *a += c * mech.species[s].atoms[e];
            }
        }
        [
            atoms[0] / atoms[3],
            atoms[1] / atoms[3],
            atoms[2] / atoms[3],
        ]
    }

    pub fn shifted(&self, dt: f64) -> Self {
        Self {
            time: self.time.iter().map(|t| t + dt).collect(),
            ..self.clone()
        }
    }
}

/// Error control and stopping for [`integrate_reactor_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    /// Absolute tolerance on concentrations, mol/cm³.
    pub atol: f64,
    /// Absolute tolerance on temperature, K.
    pub atol_temperature: f64,
    pub max_steps: usize,
    /// Stop once the temperature rate has peaked and fallen back (after a
    /// rise of at least 50 K) instead of running to `t_end`.
    pub stop_after_ignition: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-14,
            atol_temperature: 1e-8,
            max_steps: 2_000_000,
            stop_after_ignition: false,
        }
    }
}

/// Integrates the bundled mechanism from unburnt mixture to `t_end`.
pub fn integrate_reactor(input: &KineticsInput, a: f64, t_end: f64) -> Result<Trajectory> {
    integrate_reactor_with(
        Mechanism::methane_2step(),
        input,
        a,
        t_end,
        &IntegratorOptions::default(),
    )
}

pub fn integrate_reactor_with(
    mech: &Mechanism,
    input: &KineticsInput,
    a: f64,
    t_end: f64,
    options: &IntegratorOptions,
) -> Result<Trajectory> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::invalid(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    let reactor = Reactor::new(mech, input, a)?;
    let mut traj = Trajectory {
        species: mech.species_names(),
        time: Vec::new(),
        temperature: Vec::new(),
        temperature_rate: Vec::new(),
        concentrations: Vec::new(),
        pressure: input.p0,
    };
    super::dopri::integrate(&reactor, t_end, options, &mut traj)?;
    Ok(traj)
}
