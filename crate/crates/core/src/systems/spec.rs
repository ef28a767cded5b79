use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genenet::{GeneNetwork, HillKind};

use super::{Component, CyclicSystem, Nonlinearity, UnidirectionalSystem};

/// System description as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Unidirectional {
        tau: f64,
        mu: Vec<f64>,
        g: Vec<Nonlinearity>,
    },
    /// Components `0..=N`; `g[i]` couples to the successor, `prev[i]` (if any)
    /// to the predecessor. `prev[0]` must be null.
    Cyclic {
        tau: f64,
        mu: Vec<f64>,
        g: Vec<Nonlinearity>,
        #[serde(default)]
        prev: Vec<Option<Nonlinearity>>,
    },
    Gene {
        a: Vec<f64>,
        b: Vec<f64>,
        beta: Vec<f64>,
        c: Vec<f64>,
        nu: Vec<f64>,
        f_kind: Vec<HillKind>,
        tau_p: Vec<f64>,
        tau_r: Vec<f64>,
    },
}

impl SystemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn from_unidirectional(sys: &UnidirectionalSystem) -> Self {
        SystemSpec::Unidirectional { tau: sys.tau, mu: sys.mu.clone(), g: sys.g.clone() }
    }

    pub fn from_gene(net: &GeneNetwork) -> Self {
        SystemSpec::Gene {
            a: net.a.clone(),
            b: net.b.clone(),
            beta: net.beta.clone(),
            c: net.c.clone(),
            nu: net.nu.clone(),
            f_kind: net.f_kind.clone(),
            tau_p: net.tau_p.clone(),
            tau_r: net.tau_r.clone(),
        }
    }

    pub fn unidirectional(&self) -> Result<UnidirectionalSystem> {
        match self {
            SystemSpec::Unidirectional { tau, mu, g } => UnidirectionalSystem::new(mu.clone(), g.clone(), *tau),
            _ => Err(Error::Unsupported("not a unidirectional system".into())),
        }
    }

    pub fn cyclic(&self) -> Result<CyclicSystem> {
        match self {
            SystemSpec::Unidirectional { .. } => Ok(self.unidirectional()?.to_cyclic()),
            SystemSpec::Cyclic { tau, mu, g, prev } => {
                if mu.len() != g.len() || (!prev.is_empty() && prev.len() != g.len()) {
                    return Err(Error::InvalidSystem("mu, g and prev must have equal length".into()));
                }
                let components = mu
                    .iter()
                    .zip(g)
                    .enumerate()
                    .map(|(i, (&decay, &next))| Component { decay, prev: prev.get(i).copied().flatten(), next })
                    .collect();
                CyclicSystem::new(components, *tau)
            }
            SystemSpec::Gene { .. } => Err(Error::Unsupported("gene networks are not in cyclic form".into())),
        }
    }

    pub fn gene(&self) -> Result<GeneNetwork> {
        match self {
            SystemSpec::Gene { a, b, beta, c, nu, f_kind, tau_p, tau_r } => {
                let net = GeneNetwork {
                    a: a.clone(),
                    b: b.clone(),
                    beta: beta.clone(),
                    c: c.clone(),
                    nu: nu.clone(),
                    f_kind: f_kind.clone(),
                    tau_p: tau_p.clone(),
                    tau_r: tau_r.clone(),
                };
                net.check()?;
                Ok(net)
            }
            _ => Err(Error::Unsupported("not a gene network".into())),
        }
    }
}
