use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::hermite;

/// Element of the state space: a history segment of the delayed component on
/// `[-tau, 0]` and the current values of the remaining components.
///
/// The history lives on a uniform grid of `m + 1` nodes and carries node
/// derivatives, so that it can be evaluated anywhere by cubic Hermite
/// interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub tau: f64,
    pub history: Vec<f64>,
    pub history_deriv: Vec<f64>,
    pub tail: Vec<f64>,
}

impl SystemState {
    pub fn new(tau: f64, history: Vec<f64>, history_deriv: Vec<f64>, tail: Vec<f64>) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Argument(format!("delay must be positive, got {tau}")));
        }
        if history.len() < 2 {
            return Err(Error::Argument("history needs at least two nodes".into()));
        }
        if history.len() != history_deriv.len() {
            return Err(Error::Argument("history values and derivatives differ in length".into()));
        }
        Ok(Self { tau, history, history_deriv, tail })
    }

    /// Samples `f` (and its derivative `df`) on the grid of `m + 1` nodes.
    pub fn from_fn(
        tau: f64,
        m: usize,
        f: impl Fn(f64) -> f64,
        df: impl Fn(f64) -> f64,
        tail: Vec<f64>,
    ) -> Result<Self> {
        let h = tau / m as f64;
        let theta = |k: usize| -tau + k as f64 * h;
        let history = (0..=m).map(|k| f(theta(k))).collect();
        let deriv = (0..=m).map(|k| df(theta(k))).collect();
        Self::new(tau, history, deriv, tail)
    }

    /// Builds a state from history values alone; derivatives are estimated
    /// by fourth-order finite differences (second order when `m < 4`).
    pub fn from_values(tau: f64, history: Vec<f64>, tail: Vec<f64>) -> Result<Self> {
        let deriv = finite_difference_derivative(&history, tau / (history.len().max(2) - 1) as f64);
        Self::new(tau, history, deriv, tail)
    }

    pub fn constant(tau: f64, m: usize, value: f64, tail: Vec<f64>) -> Self {
        Self { tau, history: vec![value; m + 1], history_deriv: vec![0.0; m + 1], tail }
    }

    pub fn zero(tau: f64, m: usize, n: usize) -> Self {
        Self::constant(tau, m, 0.0, vec![0.0; n])
    }

    /// Grid resolution `m` (number of history intervals).
    pub fn m(&self) -> usize {
        self.history.len() - 1
    }

    /// Number of tail coordinates.
    pub fn n(&self) -> usize {
        self.tail.len()
    }

    pub fn step(&self) -> f64 {
        self.tau / self.m() as f64
    }

    /// History node abscissae `theta_k = -tau + k h`.
    pub fn theta(&self, k: usize) -> f64 {
        if k == self.m() {
            0.0
        } else {
            -self.tau + k as f64 * self.step()
        }
    }

    /// Current value of the delayed component, `x_0(0)`.
    pub fn head(&self) -> f64 {
        *self.history.last().unwrap()
    }

    /// Hermite interpolation of the history at `theta` in `[-tau, 0]`.
    pub fn history_at(&self, theta: f64) -> Result<f64> {
        let eps = 1e-12 * self.tau;
        if !(theta >= -self.tau - eps && theta <= eps) {
            return Err(Error::Domain { t: theta, start: -self.tau, end: 0.0 });
        }
        let h = self.step();
        let m = self.m();
        let pos = ((theta + self.tau) / h).clamp(0.0, m as f64);
        let k = (pos.floor() as usize).min(m - 1);
        let s = pos - k as f64;
        if s == 0.0 {
            return Ok(self.history[k]);
        }
        if s == 1.0 {
            return Ok(self.history[k + 1]);
        }
        Ok(hermite(
            self.history[k],
            self.history_deriv[k],
            self.history[k + 1],
            self.history_deriv[k + 1],
            h,
            s,
        ))
    }

    /// Max-norm over history nodes and tail.
    pub fn max_norm(&self) -> f64 {
        self.history.iter().chain(&self.tail).fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// History samples followed by the tail coordinates.
    pub fn samples(&self) -> impl Iterator<Item = f64> + '_ {
        self.history.iter().chain(&self.tail).copied()
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.history.len() != other.history.len() || self.tail.len() != other.tail.len() {
            return Err(Error::Argument("states live on different grids".into()));
        }
        if (self.tau - other.tau).abs() > 1e-12 * self.tau {
            return Err(Error::Argument("states have different delays".into()));
        }
        Ok(())
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        self.check_compatible(other)?;
        let zip = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect::<Vec<_>>();
        Ok(Self {
            tau: self.tau,
            history: zip(&self.history, &other.history),
            history_deriv: zip(&self.history_deriv, &other.history_deriv),
            tail: zip(&self.tail, &other.tail),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(1.0, other, -1.0)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        let s = |v: &[f64]| v.iter().map(|x| alpha * x).collect::<Vec<_>>();
        Self {
            tau: self.tau,
            history: s(&self.history),
            history_deriv: s(&self.history_deriv),
            tail: s(&self.tail),
        }
    }

    /// Re-samples the history on a grid of `m + 1` nodes by Hermite interpolation.
    pub fn resample(&self, m: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::Argument("resolution must be at least 1".into()));
        }
        let h_old = self.step();
        let h = self.tau / m as f64;
        let mut history = Vec::with_capacity(m + 1);
        let mut deriv = Vec::with_capacity(m + 1);
        for k in 0..=m {
            let theta = if k == m { 0.0 } else { -self.tau + k as f64 * h };
            let pos = ((theta + self.tau) / h_old).clamp(0.0, self.m() as f64);
            let j = (pos.floor() as usize).min(self.m() - 1);
            let s = pos - j as f64;
            let (v0, d0, v1, d1) =
                (self.history[j], self.history_deriv[j], self.history[j + 1], self.history_deriv[j + 1]);
            history.push(hermite(v0, d0, v1, d1, h_old, s));
            deriv.push(crate::numeric::hermite_derivative(v0, d0, v1, d1, h_old, s));
        }
        Ok(Self { tau: self.tau, history, history_deriv: deriv, tail: self.tail.clone() })
    }
}

/// Node derivatives of uniformly sampled values.
pub fn finite_difference_derivative(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    if n < 2 {
        return vec![0.0; n];
    }
    if n < 5 {
        return (0..n)
            .map(|k| {
                if k == 0 {
                    (v[1] - v[0]) / h
                } else if k == n - 1 {
                    (v[n - 1] - v[n - 2]) / h
                } else {
                    (v[k + 1] - v[k - 1]) / (2.0 * h)
                }
            })
            .collect();
    }
    (0..n)
        .map(|k| {
            if k >= 2 && k + 2 < n {
                (v[k - 2] - 8.0 * v[k - 1] + 8.0 * v[k + 1] - v[k + 2]) / (12.0 * h)
            } else if k < 2 {
                let b = k;
                // one-sided five-point stencils
                let c: [[f64; 5]; 2] = [[-25.0, 48.0, -36.0, 16.0, -3.0], [-3.0, -10.0, 18.0, -6.0, 1.0]];
                (0..5).map(|i| c[b][i] * v[i]).sum::<f64>() / (12.0 * h)
            } else {
                let b = n - 1 - k;
                let c: [[f64; 5]; 2] = [[25.0, -48.0, 36.0, -16.0, 3.0], [3.0, 10.0, -18.0, 6.0, -1.0]];
                (0..5).map(|i| c[b][i] * v[n - 1 - i]).sum::<f64>() / (12.0 * h)
            }
        })
        .collect()
}
