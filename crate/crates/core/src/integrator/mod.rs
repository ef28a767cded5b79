//! Method-of-steps integration with dense Hermite output.

mod gene;
mod model;

pub use gene::{integrate_gene, GeneHistory};
pub use model::{model_system, ModelSolution};

use std::io::Write;

use crate::error::{Error, Result};
use crate::numeric::{hermite, hermite_derivative};
use crate::systems::{CyclicSystem, SystemState};

/// Any component exceeding this magnitude aborts the integration.
pub const DIVERGENCE_THRESHOLD: f64 = 1e150;

#[derive(Debug, Clone, PartialEq)]
pub enum TrajectoryKind {
    /// Components `x_0 .. x_N`; before `t = 0` only `x_0` is defined.
    Cyclic,
    /// Gene network variables ordered `r_1, p_1, ..., r_n, p_n`.
    Gene { n: usize },
}

/// A solution on a uniform time grid with value and derivative at every node.
#[derive(Debug, Clone)]
pub struct Trajectory {
    kind: TrajectoryKind,
    dim: usize,
    t_start: f64,
    h: f64,
    /// Index of the node at `t = 0`.
    origin: usize,
    /// The history length covered before `t = 0` (the delay for cyclic systems).
    delay: f64,
    values: Vec<f64>,
    derivs: Vec<f64>,
    /// Derivatives at `t = 0` from the left (initial data), which may differ
    /// from the right-hand side evaluated at the initial state.
    left_at_origin: Vec<f64>,
}

impl Trajectory {
    pub fn kind(&self) -> &TrajectoryKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    /// Steps per delay interval.
    pub fn steps_per_delay(&self) -> usize {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.node_time(self.len() - 1)
    }

    pub fn node_time(&self, k: usize) -> f64 {
        if k == self.origin {
            0.0
        } else {
            (k as f64 - self.origin as f64) * self.h
        }
    }

    /// Index of the node at `t = 0`.
    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn node_derivative(&self, k: usize) -> &[f64] {
        &self.derivs[k * self.dim..(k + 1) * self.dim]
    }

    fn defined(&self, k: usize, i: usize) -> bool {
        k >= self.origin || matches!(self.kind, TrajectoryKind::Gene { .. }) || i == 0
    }

    /// Derivative used at the right end of the interval `[k-1, k]`.
    fn left_derivative(&self, k: usize, i: usize) -> f64 {
        if k == self.origin {
            self.left_at_origin[i]
        } else {
            self.derivs[k * self.dim + i]
        }
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let n = self.len();
        let pos = (t - self.t_start) / self.h;
        let last = (n - 1) as f64;
        let slack = 1e-9;
        if !(pos >= -slack && pos <= last + slack) {
            return Err(Error::Domain { t, start: self.t_start, end: self.t_end() });
        }
        let pos = pos.clamp(0.0, last);
        let near = pos.round();
        if (pos - near).abs() < 1e-9 {
            let k = near as usize;
            return Ok((k, 0.0));
        }
        let k = (pos.floor() as usize).min(n - 2);
        Ok((k, pos - k as f64))
    }

    /// Value of component `i` at time `t`.
    pub fn value(&self, t: f64, i: usize) -> Result<f64> {
        let (k, s) = self.locate(t)?;
        let kk = if s == 0.0 { k } else { k + 1 };
        if !self.defined(k, i) || !self.defined(kk, i) {
            return Err(Error::Domain { t, start: 0.0, end: self.t_end() });
        }
        if s == 0.0 {
            return Ok(self.values[k * self.dim + i]);
        }
        let d = self.dim;
        Ok(hermite(
            self.values[k * d + i],
            self.derivs[k * d + i],
            self.values[(k + 1) * d + i],
            self.left_derivative(k + 1, i),
            self.h,
            s,
        ))
    }

    /// Derivative of component `i` at `t`; at nodes the right derivative.
    pub fn derivative(&self, t: f64, i: usize) -> Result<f64> {
        let (k, s) = self.locate(t)?;
        let kk = if s == 0.0 { k } else { k + 1 };
        if !self.defined(k, i) || !self.defined(kk, i) {
            return Err(Error::Domain { t, start: 0.0, end: self.t_end() });
        }
        if s == 0.0 {
            return Ok(self.derivs[k * self.dim + i]);
        }
        let d = self.dim;
        Ok(hermite_derivative(
            self.values[k * d + i],
            self.derivs[k * d + i],
            self.values[(k + 1) * d + i],
            self.left_derivative(k + 1, i),
            self.h,
            s,
        ))
    }

    /// All components at time `t`.
    pub fn point(&self, t: f64) -> Result<Vec<f64>> {
        (0..self.dim).map(|i| self.value(t, i)).collect()
    }

    /// State `x_t`: history of `x_0` on `[t - tau, t]` on the trajectory's own
    /// grid, tail `x_1(t) .. x_N(t)`.
    pub fn state_at(&self, t: f64) -> Result<SystemState> {
        if self.kind != TrajectoryKind::Cyclic {
            return Err(Error::Unsupported("state_at is defined for cyclic trajectories".into()));
        }
        let tau = self.delay;
        let m = self.origin;
        if !(t - tau >= self.t_start - 1e-9 * self.h && t <= self.t_end() + 1e-9 * self.h) {
            return Err(Error::Domain { t, start: self.t_start + tau, end: self.t_end() });
        }
        let pos = (t - self.t_start) / self.h;
        let aligned = (pos - pos.round()).abs() < 1e-9;
        let mut history = Vec::with_capacity(m + 1);
        let mut deriv = Vec::with_capacity(m + 1);
        if aligned {
            let end = pos.round() as usize;
            let first = end - m;
            for k in first..=end {
                history.push(self.values[k * self.dim]);
                deriv.push(if k == end { self.left_derivative(k, 0) } else { self.derivs[k * self.dim] });
            }
        } else {
            for k in 0..=m {
                let s = t - tau + k as f64 * self.h;
                history.push(self.value(s, 0)?);
                deriv.push(self.derivative(s, 0)?);
            }
        }
        let tail = (1..self.dim).map(|i| self.value(t, i)).collect::<Result<Vec<_>>>()?;
        SystemState::new(tau, history, deriv, tail)
    }

    /// CSV with one row per node at `t >= 0`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = match self.kind {
            TrajectoryKind::Cyclic => (0..self.dim).map(|i| format!("x{i}")).collect(),
            TrajectoryKind::Gene { n } => (1..=n).flat_map(|i| [format!("r{i}"), format!("p{i}")]).collect(),
        };
        writeln!(w, "t,{}", header.join(","))?;
        for k in self.origin..self.len() {
            write!(w, "{:.16e}", self.node_time(k))?;
            for v in self.node(k) {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    fn push(&mut self, x: &[f64], d: &[f64]) -> Result<()> {
        let t = (self.len() as f64 - self.origin as f64) * self.h;
        if x.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_THRESHOLD) {
            return Err(Error::Divergence { time: t });
        }
        self.values.extend_from_slice(x);
        self.derivs.extend_from_slice(d);
        Ok(())
    }

    /// Hermite midpoint of component `i` on the interval `[k, k+1]`.
    fn midpoint(&self, k: usize, i: usize) -> f64 {
        let d = self.dim;
        let (v0, d0) = (self.values[k * d + i], self.derivs[k * d + i]);
        let (v1, d1) = (self.values[(k + 1) * d + i], self.left_derivative(k + 1, i));
        0.5 * (v0 + v1) + self.h * (d0 - d1) / 8.0
    }

    /// Continues a cyclic trajectory with RK4 until `t_end`.
    pub fn extend(&mut self, system: &CyclicSystem, t_end: f64) -> Result<()> {
        if self.kind != TrajectoryKind::Cyclic || system.dim() != self.dim {
            return Err(Error::Argument("trajectory does not belong to this system".into()));
        }
        if ((system.tau - self.delay) / self.delay).abs() > 1e-12 {
            return Err(Error::Argument("system delay differs from trajectory delay".into()));
        }
        let target = ((t_end / self.h) - 1e-9).ceil().max(0.0) as usize + self.origin;
        let dim = self.dim;
        let m = self.origin;
        let h = self.h;
        let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
        let mut tmp = vec![0.0; dim];
        let mut next = vec![0.0; dim];
        let mut dnext = vec![0.0; dim];
        while self.len() <= target {
            let k = self.len() - 1;
            let j = k - m;
            let del0 = self.values[j * dim];
            let del_mid = self.midpoint(j, 0);
            let del1 = self.values[(j + 1) * dim];
            let x = &self.values[k * dim..(k + 1) * dim];
            system.rhs(x, del0, &mut k1);
            for i in 0..dim {
                tmp[i] = x[i] + 0.5 * h * k1[i];
            }
            system.rhs(&tmp, del_mid, &mut k2);
            for i in 0..dim {
                tmp[i] = x[i] + 0.5 * h * k2[i];
            }
            system.rhs(&tmp, del_mid, &mut k3);
            for i in 0..dim {
                tmp[i] = x[i] + h * k3[i];
            }
            system.rhs(&tmp, del1, &mut k4);
            for i in 0..dim {
                next[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            system.rhs(&next, del1, &mut dnext);
            self.push(&next, &dnext)?;
        }
        Ok(())
    }
}

/// Integrates a cyclic system from `initial` over `[0, t_end]` with `h = tau / m`.
///
/// The initial history is resampled to the integration grid when its
/// resolution differs from `m`.
pub fn integrate(system: &CyclicSystem, initial: &SystemState, t_end: f64, m: usize) -> Result<Trajectory> {
    system.check()?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Argument(format!("t_end must be positive, got {t_end}")));
    }
    if m < 8 {
        return Err(Error::Argument(format!("steps per delay must be at least 8, got {m}")));
    }
    if initial.n() != system.n() {
        return Err(Error::Argument(format!(
            "initial state has {} tail coordinates, system needs {}",
            initial.n(),
            system.n()
        )));
    }
    if ((initial.tau - system.tau) / system.tau).abs() > 1e-12 {
        return Err(Error::Argument("initial state delay differs from system delay".into()));
    }
    if initial.samples().any(|v| !v.is_finite()) || initial.history_deriv.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("initial state is not finite".into()));
    }
    let init = if initial.m() == m { initial.clone() } else { initial.resample(m)? };
    let dim = system.dim();
    let h = system.tau / m as f64;
    let mut values = Vec::with_capacity(dim * (m + 1 + (t_end / h) as usize + 2));
    let mut derivs = Vec::with_capacity(values.capacity());
    for k in 0..m {
        values.push(init.history[k]);
        derivs.push(init.history_deriv[k]);
        for _ in 1..dim {
            values.push(f64::NAN);
            derivs.push(f64::NAN);
        }
    }
    let mut x0 = vec![init.head()];
    x0.extend_from_slice(&init.tail);
    let mut d0 = vec![0.0; dim];
    system.rhs(&x0, init.history[0], &mut d0);
    values.extend_from_slice(&x0);
    derivs.extend_from_slice(&d0);
    let mut left = vec![f64::NAN; dim];
    left[0] = init.history_deriv[m];
    let mut traj = Trajectory {
        kind: TrajectoryKind::Cyclic,
        dim,
        t_start: -system.tau,
        h,
        origin: m,
        delay: system.tau,
        values,
        derivs,
        left_at_origin: left,
    };
    traj.extend(system, t_end)?;
    Ok(traj)
}
