//! The zero-counting Lyapunov functional on sampled states.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::systems::SystemState;

/// Default relative zero tolerance.
pub const ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VValue {
    pub sc: usize,
    pub v: usize,
    /// Every consecutive pair of samples alternates, so the true count may be larger.
    pub saturated: bool,
}

impl VValue {
    /// Ordering key; saturated values compare above all finite ones.
    fn rank(&self) -> (bool, usize) {
        (self.saturated, self.v)
    }
}

fn check(state: &SystemState) -> Result<f64> {
    if state.samples().any(|v| !v.is_finite()) {
        return Err(Error::Argument("state has non-finite entries".into()));
    }
    let norm = state.max_norm();
    if !norm.is_normal() {
        return Err(Error::UndefinedAtZero);
    }
    Ok(norm)
}

/// Sign alternations along the history samples followed by the tail,
/// skipping entries of magnitude at most `zero_tol` times the max-norm.
pub fn sign_changes(state: &SystemState, zero_tol: f64) -> Result<usize> {
    let cut = zero_tol * check(state)?;
    let mut last = 0.0f64;
    let mut count = 0;
    for v in state.samples() {
        if v.abs() <= cut {
            continue;
        }
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = v;
    }
    Ok(count)
}

pub fn v(state: &SystemState, zero_tol: f64) -> Result<VValue> {
    let sc = sign_changes(state, zero_tol)?;
    let v = if sc % 2 == 1 { sc } else { sc + 1 };
    Ok(VValue { sc, v, saturated: sc == state.m() + state.n() })
}

pub fn is_in_sigma(state: &SystemState, zero_tol: f64) -> Result<bool> {
    Ok(v(state, zero_tol)?.v == 1)
}

#[derive(Debug, Clone, Serialize)]
pub struct VSeries {
    pub points: Vec<(f64, VValue)>,
    /// Time at which the state came within the zero tolerance; the series stops there.
    pub truncated_at: Option<f64>,
    /// Number of samples where `v` exceeds its predecessor.
    pub violations: usize,
}

impl VSeries {
    pub fn nonincreasing(&self) -> bool {
        self.violations == 0
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,sc,v,saturated")?;
        for (t, val) in &self.points {
            writeln!(w, "{t:.16e},{},{},{}", val.sc, val.v, val.saturated)?;
        }
        Ok(())
    }
}

/// `V` along a cyclic trajectory at `t = tau, tau + dt, ...` (one delay
/// after the integration start, when the state is continuously differentiable).
pub fn v_series(traj: &Trajectory, sample_dt: f64, zero_tol: f64) -> Result<VSeries> {
    if !(sample_dt > 0.0) {
        return Err(Error::Argument("sample spacing must be positive".into()));
    }
    let tau = traj.delay();
    if traj.t_end() < tau * (1.0 - 1e-12) {
        return Err(Error::InsufficientData("trajectory shorter than one delay".into()));
    }
    let count = ((traj.t_end() - tau) / sample_dt + 1e-9).floor() as usize;
    let mut points = Vec::with_capacity(count + 1);
    let mut truncated_at = None;
    for k in 0..=count {
        let t = (tau + k as f64 * sample_dt).min(traj.t_end());
        match v(&traj.state_at(t)?, zero_tol) {
            Ok(val) => points.push((t, val)),
            Err(Error::UndefinedAtZero) => {
                truncated_at = Some(t);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let violations = points.windows(2).filter(|w| w[1].1.rank() > w[0].1.rank()).count();
    Ok(VSeries { points, truncated_at, violations })
}
