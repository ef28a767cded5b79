//! Cyclic feedback systems, their couplings and the state space.

mod coefficients;
mod nonlinearity;
mod spec;
mod state;

pub use coefficients::{difference_coefficients, difference_coefficients_at, CoefficientTriple};
pub use nonlinearity::{hill_odd, hill_odd_derivative, Nonlinearity, NonlinearityKind};
pub use spec::SystemSpec;
pub use state::{finite_difference_derivative, SystemState};

use serde::Serialize;

use crate::error::{Error, Result};

/// One equation `x_i' = prev(x_{i-1}) - decay * x_i + next(x_{i+1})` of a cyclic system.
///
/// For the last component the `next` argument is the delayed value `x_0(t - tau)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub decay: f64,
    pub prev: Option<Nonlinearity>,
    pub next: Nonlinearity,
}

/// A cyclic system in standard feedback form with components `x_0 .. x_N`;
/// only `x_0` enters with a delay.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicSystem {
    pub components: Vec<Component>,
    pub tau: f64,
}

impl CyclicSystem {
    pub fn new(components: Vec<Component>, tau: f64) -> Result<Self> {
        let sys = Self { components, tau };
        sys.check()?;
        Ok(sys)
    }

    /// Index of the last component, `N`.
    pub fn n(&self) -> usize {
        self.components.len() - 1
    }

    /// Dimension of the instantaneous state, `N + 1`.
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn check(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidSystem("no components".into()));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidSystem(format!("delay must be positive and finite, got {}", self.tau)));
        }
        for (i, c) in self.components.iter().enumerate() {
            if !(c.decay.is_finite() && c.decay >= 0.0) {
                return Err(Error::InvalidSystem(format!("component {i}: decay {} must be finite and >= 0", c.decay)));
            }
            c.next.check().map_err(|e| Error::InvalidSystem(format!("component {i} next: {e}")))?;
            if let Some(p) = &c.prev {
                if i == 0 {
                    return Err(Error::InvalidSystem("component 0 has no predecessor coupling".into()));
                }
                p.check().map_err(|e| Error::InvalidSystem(format!("component {i} prev: {e}")))?;
            }
        }
        Ok(())
    }

    /// Right-hand side at instantaneous state `x` with delayed value `delayed = x_0(t - tau)`.
    pub fn rhs(&self, x: &[f64], delayed: f64, out: &mut [f64]) {
        let n = self.n();
        for (i, c) in self.components.iter().enumerate() {
            let next_arg = if i == n { delayed } else { x[i + 1] };
            let mut v = c.next.value(next_arg) - c.decay * x[i];
            if let Some(p) = &c.prev {
                v += p.value(x[i - 1]);
            }
            out[i] = v;
        }
    }

    /// True when zero is an equilibrium to within `tol`.
    pub fn zero_residual(&self) -> f64 {
        let x = vec![0.0; self.dim()];
        let mut out = vec![0.0; self.dim()];
        self.rhs(&x, 0.0, &mut out);
        out.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Constant coefficients `(a_i, c_i, b_i)` of the linearization at zero.
    pub fn linearization(&self) -> Vec<CoefficientTriple> {
        self.components
            .iter()
            .map(|c| CoefficientTriple {
                a: c.prev.map_or(0.0, |p| p.derivative(0.0)),
                c: -c.decay,
                b: c.next.derivative(0.0),
            })
            .collect()
    }
}

/// The unidirectional loop `x_j' = -mu_j x_j + g_j(x_{j+1})`, `j = 1..N`, closed by
/// `x_N' = -mu_N x_N + g_N(x_1(t - tau))`. Stored with zero-based indices.
#[derive(Debug, Clone, PartialEq)]
pub struct UnidirectionalSystem {
    pub mu: Vec<f64>,
    pub g: Vec<Nonlinearity>,
    pub tau: f64,
}

impl UnidirectionalSystem {
    pub fn new(mu: Vec<f64>, g: Vec<Nonlinearity>, tau: f64) -> Result<Self> {
        let sys = Self { mu, g, tau };
        sys.check()?;
        Ok(sys)
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn check(&self) -> Result<()> {
        if self.mu.is_empty() {
            return Err(Error::InvalidSystem("empty loop".into()));
        }
        if self.mu.len() != self.g.len() {
            return Err(Error::InvalidSystem(format!(
                "{} decay rates but {} nonlinearities",
                self.mu.len(),
                self.g.len()
            )));
        }
        self.to_cyclic_unchecked().check()
    }

    fn to_cyclic_unchecked(&self) -> CyclicSystem {
        CyclicSystem {
            components: self
                .mu
                .iter()
                .zip(&self.g)
                .map(|(&decay, &next)| Component { decay, prev: None, next })
                .collect(),
            tau: self.tau,
        }
    }

    /// The same loop written in standard form; uni component `j` becomes `x_{j-1}`.
    pub fn to_cyclic(&self) -> CyclicSystem {
        self.to_cyclic_unchecked()
    }

    /// `K = prod |g_j'(0)|`.
    pub fn loop_gain(&self) -> f64 {
        self.g.iter().map(|g| g.derivative(0.0).abs()).product()
    }

    /// Copy with the last nonlinearity's gain scaled so that the loop gain equals `k`.
    pub fn with_loop_gain(&self, k: f64) -> Result<Self> {
        let current = self.loop_gain();
        if !(current > 0.0) {
            return Err(Error::InvalidSystem("loop gain is zero".into()));
        }
        let mut out = self.clone();
        out.g.last_mut().unwrap().gain *= k / current;
        Ok(out)
    }

    pub fn is_zero_centered(&self, tol: f64) -> bool {
        self.g.iter().all(|g| g.value(0.0).abs() <= tol)
    }
}

/// Required sign of a partial derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Requirement {
    Positive,
    NonNegative,
    Negative,
    Unconstrained,
}

impl Requirement {
    fn holds(self, sign: f64) -> bool {
        match self {
            Requirement::Positive => sign > 0.0,
            Requirement::NonNegative => sign >= 0.0,
            Requirement::Negative => sign < 0.0,
            Requirement::Unconstrained => true,
        }
    }
}

/// A monotone coupling subject to a sign requirement.
#[derive(Debug, Clone)]
pub struct Coupling {
    pub component: usize,
    pub partial: String,
    pub map: Nonlinearity,
    pub requirement: Requirement,
}

/// Systems whose monotonicity conditions can be checked coupling by coupling.
pub trait Couplings {
    fn couplings(&self) -> Vec<Coupling>;
}

impl Couplings for CyclicSystem {
    fn couplings(&self) -> Vec<Coupling> {
        let n = self.n();
        let mut out = Vec::new();
        for (i, c) in self.components.iter().enumerate() {
            if let Some(p) = c.prev {
                let requirement = if i < n { Requirement::NonNegative } else { Requirement::Unconstrained };
                out.push(Coupling { component: i, partial: format!("d1 f{i}"), map: p, requirement });
            }
            let (partial, requirement) = if i == n {
                (format!("d3 f{i}"), Requirement::Negative)
            } else if i == 0 {
                ("d2 f0".to_string(), Requirement::Positive)
            } else {
                (format!("d3 f{i}"), Requirement::Positive)
            };
            out.push(Coupling { component: i, partial, map: c.next, requirement });
        }
        out
    }
}

impl Couplings for UnidirectionalSystem {
    fn couplings(&self) -> Vec<Coupling> {
        let n = self.n();
        self.g
            .iter()
            .enumerate()
            .map(|(j, &g)| Coupling {
                component: j + 1,
                partial: format!("g{}'", j + 1),
                map: g,
                requirement: if j + 1 == n { Requirement::Negative } else { Requirement::Positive },
            })
            .collect()
    }
}

/// Sample points for sign checks.
#[derive(Debug, Clone)]
pub struct SampleGrid {
    pub points: Vec<f64>,
}

impl SampleGrid {
    /// Zero plus `count` log-spaced magnitudes in `[lo, hi]` with both signs.
    pub fn log_symmetric(lo: f64, hi: f64, count: usize) -> Self {
        let mut points = vec![0.0];
        let (a, b) = (lo.ln(), hi.ln());
        for k in 0..count {
            let x = if count == 1 { lo } else { (a + (b - a) * k as f64 / (count - 1) as f64).exp() };
            points.push(x);
            points.push(-x);
        }
        points.sort_by(f64::total_cmp);
        Self { points }
    }
}

impl Default for SampleGrid {
    fn default() -> Self {
        Self::log_symmetric(1e-6, 1e6, 121)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SignEntry {
    pub component: usize,
    pub partial: String,
    pub requirement: Requirement,
    pub min: f64,
    pub max: f64,
    pub pass: bool,
    /// First grid point where the requirement fails.
    pub witness: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SignReport {
    pub entries: Vec<SignEntry>,
    pub pass: bool,
}

impl SignReport {
    pub fn failures(&self) -> impl Iterator<Item = &SignEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

/// Checks the monotonicity conditions coupling by coupling on `grid`.
pub fn validate_feedback(system: &impl Couplings, grid: &SampleGrid) -> Result<SignReport> {
    let mut entries = Vec::new();
    for c in system.couplings() {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut witness = None;
        for &x in &grid.points {
            let v = c.map.value(x);
            let d = c.map.derivative(x);
            if !v.is_finite() || !d.is_finite() {
                return Err(Error::NonFinite { component: c.component, point: x });
            }
            min = min.min(d);
            max = max.max(d);
            if witness.is_none() && !c.requirement.holds(c.map.slope_sign(x)) {
                witness = Some(x);
            }
        }
        entries.push(SignEntry {
            component: c.component,
            partial: c.partial,
            requirement: c.requirement,
            min,
            max,
            pass: witness.is_none(),
            witness,
        });
    }
    let pass = entries.iter().all(|e| e.pass);
    Ok(SignReport { entries, pass })
}
