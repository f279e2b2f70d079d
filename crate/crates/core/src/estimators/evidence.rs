//! Conditional evidence `p̂(y | θ_fixed)`: quadrature over one or two free
//! parameters, accumulated in the log domain.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::EstimatorConfig;
use crate::error::{Error, Result};
use crate::math::{log_sum_exp_weighted, QuadratureRule, LOG_DENSITY_FLOOR};
use crate::model::{PriorSpec, StatisticalModel};

/// Where the nodes of one free dimension go and what they weigh.
#[derive(Debug, Clone, PartialEq)]
pub struct NodePlacement {
    pub nodes: Vec<f64>,
    /// `ln(w(x) γ)` per node, with `w` the prior/proposal ratio.
    pub log_weights: Vec<f64>,
}

/// Strategy for laying a 1-D rule over the free parameter `index`.
pub trait EvidenceRule: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn place(
        &self,
        prior: &PriorSpec,
        index: usize,
        center: f64,
        proposal_scale: f64,
        rule: &QuadratureRule,
    ) -> NodePlacement;
}

/// Nodes under the prior, `μ + σx`, weights `γ`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PriorQuadrature;

impl EvidenceRule for PriorQuadrature {
    fn name(&self) -> &str {
        "prior"
    }

    fn place(
        &self,
        prior: &PriorSpec,
        index: usize,
        _center: f64,
        _proposal_scale: f64,
        rule: &QuadratureRule,
    ) -> NodePlacement {
        let (mu, sd) = (prior.mean(index), prior.sd(index));
        NodePlacement {
            nodes: rule.nodes().iter().map(|x| mu + sd * x).collect(),
            log_weights: rule.log_weights().to_vec(),
        }
    }
}

/// Nodes under `q = N(center, (s σ_prior)²)`, weights `p(x)/q(x) · γ`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ImportanceQuadrature;

impl EvidenceRule for ImportanceQuadrature {
    fn name(&self) -> &str {
        "importance"
    }

    fn place(
        &self,
        prior: &PriorSpec,
        index: usize,
        center: f64,
        proposal_scale: f64,
        rule: &QuadratureRule,
    ) -> NodePlacement {
        let sd_q = proposal_scale * prior.sd(index);
        let mut nodes = Vec::with_capacity(rule.order());
        let mut log_weights = Vec::with_capacity(rule.order());
        for (&x, &lw) in rule.nodes().iter().zip(rule.log_weights()) {
            let node = center + sd_q * x;
            // ln q(node) = −½x² − ln(sd_q) − ½ln2π; the 2π terms cancel.
            let log_p = prior.log_density(index, node);
            let log_q = -0.5 * x * x - sd_q.ln() - 0.5 * crate::math::LN_2PI;
            nodes.push(node);
            log_weights.push(lw + log_p - log_q);
        }
        NodePlacement { nodes, log_weights }
    }
}

/// Name → evidence-rule table.
#[derive(Debug, Clone)]
pub struct EvidenceRuleRegistry {
    rules: BTreeMap<String, Arc<dyn EvidenceRule>>,
}

impl Default for EvidenceRuleRegistry {
    fn default() -> Self {
        let mut r = Self {
            rules: BTreeMap::new(),
        };
        r.register(Arc::new(PriorQuadrature));
        r.register(Arc::new(ImportanceQuadrature));
        r
    }
}

impl EvidenceRuleRegistry {
    pub fn register(&mut self, rule: Arc<dyn EvidenceRule>) {
        self.rules.insert(rule.name().to_string(), rule);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn EvidenceRule>> {
        self.rules.get(name).cloned().ok_or_else(|| Error::Unknown {
            kind: "evidence rule",
            name: name.to_string(),
        })
    }

    pub fn names(&self) -> Vec<&str> {
        self.rules.keys().map(String::as_str).collect()
    }
}

/// Log evidence plus whether the floor was applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEvidence {
    pub value: f64,
    pub clamped: bool,
}

impl LogEvidence {
    pub(crate) fn floored(value: f64) -> Self {
        if value.is_finite() && value >= LOG_DENSITY_FLOOR {
            Self {
                value,
                clamped: false,
            }
        } else {
            Self {
                value: LOG_DENSITY_FLOOR,
                clamped: true,
            }
        }
    }
}

/// `log Σ_ζ p(y | θ_free^ζ, θ_fixed) w(θ_free^ζ) γ^ζ` over the tensor grid of
/// the free parameters.
///
/// `theta` holds the fixed values; its entries at `free` are ignored except
/// as the default proposal center when `proposal_center` is empty.
#[allow(clippy::too_many_arguments)]
pub fn conditional_evidence_log(
    model: &StatisticalModel,
    prior: &PriorSpec,
    y: &[f64],
    theta: &[f64],
    free: &[usize],
    rule: &QuadratureRule,
    proposal_center: &[f64],
    config: &EstimatorConfig,
) -> Result<LogEvidence> {
    let strategy = config.evidence_rule()?;
    validate_free(model, prior, y, theta, free)?;
    let center: Vec<f64> = if proposal_center.is_empty() {
        free.iter().map(|&f| theta[f]).collect()
    } else if proposal_center.len() == free.len() {
        proposal_center.to_vec()
    } else {
        return Err(Error::invalid(format!(
            "{} proposal centers for {} free parameters",
            proposal_center.len(),
            free.len()
        )));
    };
    let placements: Vec<NodePlacement> = free
        .iter()
        .zip(&center)
        .map(|(&f, &c)| strategy.place(prior, f, c, config.proposal_scale, rule))
        .collect();
    Integrand::new(model, y, theta, free)?.evidence(&placements)
}

fn validate_free(
    model: &StatisticalModel,
    prior: &PriorSpec,
    y: &[f64],
    theta: &[f64],
    free: &[usize],
) -> Result<()> {
    let m = model.parameter_count();
    if prior.len() != m || theta.len() != m {
        return Err(Error::invalid(format!(
            "model has {m} parameters, prior {}, theta {}",
            prior.len(),
            theta.len()
        )));
    }
    if y.len() != model.output_count() {
        return Err(Error::invalid("observation dimension mismatch"));
    }
    if free.is_empty() || free.len() > 2 {
        return Err(Error::invalid(
            "conditional evidence integrates over 1 or 2 parameters",
        ));
    }
    if free.iter().any(|&f| f >= m) || (free.len() == 2 && free[0] == free[1]) {
        return Err(Error::invalid(format!(
            "invalid free parameter set {free:?}"
        )));
    }
    Ok(())
}

/// Likelihood of `y` as a function of the free coordinates only.
///
/// Linear models take a shortcut: the residual at a node is the residual at
/// `theta` minus the free columns scaled by the node offsets, so no forward
/// evaluation is needed per node.
pub(crate) struct Integrand<'a> {
    model: &'a StatisticalModel,
    y: &'a [f64],
    theta: &'a [f64],
    free: &'a [usize],
    linear: Option<(&'a DMatrix<f64>, Vec<f64>)>,
}

impl<'a> Integrand<'a> {
    pub(crate) fn new(
        model: &'a StatisticalModel,
        y: &'a [f64],
        theta: &'a [f64],
        free: &'a [usize],
    ) -> Result<Self> {
        let linear = match model.forward().linear_features() {
            Some(a) => {
                let pred = model.predict(theta)?;
                let r: Vec<f64> = y.iter().zip(&pred).map(|(a, b)| a - b).collect();
                Some((a, r))
            }
            None => None,
        };
        Ok(Self {
            model,
            y,
            theta,
            free,
            linear,
        })
    }

    pub(crate) fn evidence(&self, placements: &[NodePlacement]) -> Result<LogEvidence> {
        let (terms, weights) = match placements {
            [p] => self.grid_1d(p)?,
            [p, q] => self.grid_2d(p, q)?,
            _ => return Err(Error::invalid("evidence grid must be 1-D or 2-D")),
        };
        Ok(LogEvidence::floored(log_sum_exp_weighted(
            &terms, &weights,
        )?))
    }

    fn grid_1d(&self, p: &NodePlacement) -> Result<(Vec<f64>, Vec<f64>)> {
        let f = self.free[0];
        let mut terms = Vec::with_capacity(p.nodes.len());
        match &self.linear {
            Some((a, r0)) => {
                let col = a.column(f);
                let mut r = vec![0.0; r0.len()];
                for &x in &p.nodes {
                    let dx = x - self.theta[f];
                    for ((ri, r0i), ai) in r.iter_mut().zip(r0).zip(col.iter()) {
                        *ri = r0i - ai * dx;
                    }
                    terms.push(self.model.noise().logpdf_residual(&r));
                }
            }
            None => {
                let mut th = self.theta.to_vec();
                for &x in &p.nodes {
                    th[f] = x;
                    terms.push(self.generic(&th)?);
                }
            }
        }
        Ok((terms, p.log_weights.clone()))
    }

    fn grid_2d(&self, p: &NodePlacement, q: &NodePlacement) -> Result<(Vec<f64>, Vec<f64>)> {
        let (f, g) = (self.free[0], self.free[1]);
        let size = p.nodes.len() * q.nodes.len();
        let mut terms = Vec::with_capacity(size);
        let mut weights = Vec::with_capacity(size);
        match &self.linear {
            Some((a, r0)) => {
                let (cf, cg) = (a.column(f), a.column(g));
                let mut u = vec![0.0; r0.len()];
                let mut r = vec![0.0; r0.len()];
                for (&x, &wx) in p.nodes.iter().zip(&p.log_weights) {
                    let dx = x - self.theta[f];
                    for ((ui, r0i), ai) in u.iter_mut().zip(r0).zip(cf.iter()) {
                        *ui = r0i - ai * dx;
                    }
                    for (&z, &wz) in q.nodes.iter().zip(&q.log_weights) {
                        let dz = z - self.theta[g];
                        for ((ri, ui), ai) in r.iter_mut().zip(&u).zip(cg.iter()) {
                            *ri = ui - ai * dz;
                        }
                        terms.push(self.model.noise().logpdf_residual(&r));
                        weights.push(wx + wz);
                    }
                }
            }
            None => {
                let mut th = self.theta.to_vec();
                for (&x, &wx) in p.nodes.iter().zip(&p.log_weights) {
                    th[f] = x;
                    for (&z, &wz) in q.nodes.iter().zip(&q.log_weights) {
                        th[g] = z;
                        terms.push(self.generic(&th)?);
                        weights.push(wx + wz);
                    }
                }
            }
        }
        Ok((terms, weights))
    }

    fn generic(&self, th: &[f64]) -> Result<f64> {
        let pred = self.model.predict(th)?;
        Ok(self.model.log_likelihood_of_prediction(&pred, self.y))
    }
}
