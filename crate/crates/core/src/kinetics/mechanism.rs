use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Upper bound on species and reactions; keeps the right-hand side free of
/// heap allocation.
pub const MAX_SPECIES: usize = 8;
pub const MAX_REACTIONS: usize = 4;

const METHANE_2STEP: &str = include_str!("../../data/methane_2step.toml");

/// NASA 7-coefficient polynomial pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Nasa7 {
    pub t_mid: f64,
    pub low: [f64; 7],
    pub high: [f64; 7],
}

impl Nasa7 {
    fn coeffs(&self, t: f64) -> &[f64; 7] {
        if t < self.t_mid {
            &self.low
        } else {
            &self.high
        }
    }

    /// `cp / R`.
    pub fn cp_over_r(&self, t: f64) -> f64 {
        let a = self.coeffs(t);
        a[0] + t * (a[1] + t * (a[2] + t * (a[3] + t * a[4])))
    }

    /// `h / (R T)`.
    pub fn h_over_rt(&self, t: f64) -> f64 {
        let a = self.coeffs(t);
        a[0] + t * (a[1] / 2.0 + t * (a[2] / 3.0 + t * (a[3] / 4.0 + t * a[4] / 5.0))) + a[5] / t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Species {
    pub name: String,
    /// C, H, O, N atom counts.
    pub atoms: [f64; 4],
    pub thermo: Nasa7,
}

/// Concentration exponent of one species in a rate law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Order {
    pub species: usize,
    pub exponent: f64,
    /// Negative or fractional exponents read the floored concentration.
    pub floored: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    pub name: String,
    pub pre_exponential: f64,
    /// cal/mol.
    pub activation_energy: f64,
    pub stoich: Vec<(usize, f64)>,
    pub orders: Vec<Order>,
    pub reactants: Vec<usize>,
    /// Whether the model parameterization replaces `pre_exponential`.
    pub parameterized: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub fuel: usize,
    pub oxidizer: usize,
    pub diluent: usize,
    pub stoich_o2_per_fuel: f64,
    pub air_n2_per_o2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    pub version: u32,
    pub r_cal: f64,
    pub r_joule: f64,
    pub c_min: f64,
    pub species: Vec<Species>,
    pub reactions: Vec<Reaction>,
    pub mixture: Mixture,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMechanism {
    version: u32,
    r_cal: f64,
    r_joule: f64,
    c_min: f64,
    species: Vec<RawSpecies>,
    reactions: Vec<RawReaction>,
    mixture: RawMixture,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpecies {
    name: String,
    atoms: BTreeMap<String, f64>,
    t_mid: f64,
    low: [f64; 7],
    high: [f64; 7],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReaction {
    name: String,
    pre_exponential: f64,
    activation_energy: f64,
    stoich: BTreeMap<String, f64>,
    orders: BTreeMap<String, f64>,
    reactants: Vec<String>,
    #[serde(default)]
    parameterized: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMixture {
    fuel: String,
    oxidizer: String,
    diluent: String,
    stoich_o2_per_fuel: f64,
    air_n2_per_o2: f64,
}

impl Mechanism {
    /// The bundled two-step methane mechanism.
    pub fn methane_2step() -> &'static Mechanism {
        static MECH: OnceLock<Mechanism> = OnceLock::new();
        MECH.get_or_init(|| Self::from_toml(METHANE_2STEP).expect("bundled mechanism parses"))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawMechanism =
            toml::from_str(text).map_err(|e| Error::invalid(format!("mechanism file: {e}")))?;
        if raw.species.is_empty() || raw.species.len() > MAX_SPECIES {
            return Err(Error::invalid(format!(
                "mechanism needs 1..={MAX_SPECIES} species"
            )));
        }
        if raw.reactions.len() > MAX_REACTIONS {
            return Err(Error::invalid(format!(
                "mechanism allows at most {MAX_REACTIONS} reactions"
            )));
        }
        let names: Vec<String> = raw.species.iter().map(|s| s.name.clone()).collect();
        let index = |name: &str| -> Result<usize> {
            names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::invalid(format!("mechanism: unknown species '{name}'")))
        };
        let species = raw
            .species
            .into_iter()
            .map(|s| {
                let mut atoms = [0.0; 4];
                for (el, count) in &s.atoms {
                    let slot = match el.as_str() {
                        "C" => 0,
                        "H" => 1,
                        "O" => 2,
                        "N" => 3,
                        other => {
                            return Err(Error::invalid(format!(
                                "mechanism: unknown element '{other}'"
                            )))
                        }
                    };
                    atoms[slot] = *count;
                }
                Ok(Species {
                    name: s.name,
                    atoms,
                    thermo: Nasa7 {
                        t_mid: s.t_mid,
                        low: s.low,
                        high: s.high,
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let reactions = raw
            .reactions
            .into_iter()
            .map(|r| {
                let stoich = r
                    .stoich
                    .iter()
                    .map(|(s, v)| Ok((index(s)?, *v)))
                    .collect::<Result<Vec<_>>>()?;
                let orders = r
                    .orders
                    .iter()
                    .map(|(s, &e)| {
                        Ok(Order {
                            species: index(s)?,
                            exponent: e,
                            floored: e < 0.0 || e.fract() != 0.0,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let reactants = r
                    .reactants
                    .iter()
                    .map(|s| index(s))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Reaction {
                    name: r.name,
                    pre_exponential: r.pre_exponential,
                    activation_energy: r.activation_energy,
                    stoich,
                    orders,
                    reactants,
                    parameterized: r.parameterized,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mixture = Mixture {
            fuel: index(&raw.mixture.fuel)?,
            oxidizer: index(&raw.mixture.oxidizer)?,
            diluent: index(&raw.mixture.diluent)?,
            stoich_o2_per_fuel: raw.mixture.stoich_o2_per_fuel,
            air_n2_per_o2: raw.mixture.air_n2_per_o2,
        };
        let mech = Self {
            version: raw.version,
            r_cal: raw.r_cal,
            r_joule: raw.r_joule,
            c_min: raw.c_min,
            species,
            reactions,
            mixture,
        };
        mech.check_element_balance()?;
        Ok(mech)
    }

    fn check_element_balance(&self) -> Result<()> {
        for r in &self.reactions {
            for el in 0..4 {
                let net: f64 = r
                    .stoich
                    .iter()
                    .map(|&(s, v)| v * self.species[s].atoms[el])
                    .sum();
                if net.abs() > 1e-12 {
                    return Err(Error::invalid(format!(
                        "mechanism: reaction {} does not balance element {el}",
                        r.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn species_count(&self) -> usize {
        self.species.len()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    pub fn species_names(&self) -> Vec<String> {
        self.species.iter().map(|s| s.name.clone()).collect()
    }
}
