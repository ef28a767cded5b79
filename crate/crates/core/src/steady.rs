//! Equilibria and attractor-enclosing boxes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::genenet::{hill, GeneNetwork};
use crate::numeric::bisect;
use crate::systems::{SystemState, UnidirectionalSystem};

/// Per-component closed intervals, in the order of the unidirectional loop
/// (the delayed component first).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalBox {
    pub intervals: Vec<[f64; 2]>,
}

impl IntervalBox {
    /// Largest endpoint magnitude.
    pub fn radius(&self) -> f64 {
        self.intervals.iter().fold(0.0f64, |a, [lo, hi]| a.max(lo.abs()).max(hi.abs()))
    }

    pub fn contains_point(&self, x: &[f64], slack: f64) -> bool {
        x.len() == self.intervals.len()
            && x.iter().zip(&self.intervals).all(|(v, [lo, hi])| *v >= lo - slack && *v <= hi + slack)
    }

    /// History values lie in the first interval, tail coordinate `j` in interval `j + 1`.
    pub fn contains_state(&self, state: &SystemState, slack: f64) -> bool {
        if state.n() + 1 != self.intervals.len() {
            return false;
        }
        let [lo, hi] = self.intervals[0];
        state.history.iter().all(|v| *v >= lo - slack && *v <= hi + slack)
            && state.tail.iter().zip(&self.intervals[1..]).all(|(v, [lo, hi])| *v >= lo - slack && *v <= hi + slack)
    }
}

/// Returns the zero equilibrium and the right-hand-side residual at zero.
pub fn equilibrium_unidirectional(system: &UnidirectionalSystem) -> Result<(Vec<f64>, f64)> {
    let residual = system.to_cyclic().zero_residual();
    if !(residual <= 1e-14) {
        return Err(Error::NotZeroCentered { residual });
    }
    Ok((vec![0.0; system.n()], residual))
}

/// Equilibrium of a gene network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneEquilibrium {
    pub r: Vec<f64>,
    pub p: Vec<f64>,
    /// Max-norm of the right-hand side at the equilibrium.
    pub residual: f64,
}

/// Unique equilibrium, from the scalar fixed point of the loop map
/// `r_n -> F_n(... F_1(r_n))` by bisection followed by back-substitution.
pub fn equilibrium_gene(network: &GeneNetwork) -> Result<GeneEquilibrium> {
    network.check()?;
    let n = network.n();
    let step = |i: usize, r_prev: f64| -> f64 {
        let prev = (i + n - 1) % n;
        let p_prev = network.c[prev] / network.b[prev] * r_prev;
        network.beta[i] / network.a[i] * hill(p_prev, network.nu[i], network.f_kind[i]).unwrap_or(f64::NAN)
    };
    let loop_map = |x: f64| (0..n).fold(x, |r, i| step(i, r));
    let hi = loop_map(0.0);
    let rn = if hi <= 0.0 {
        0.0
    } else {
        bisect(|x| loop_map(x) - x, 0.0, hi, 0.0).ok_or_else(|| Error::InvalidSystem("no equilibrium bracket".into()))?
    };
    let mut r = vec![0.0; n];
    r[n - 1] = rn;
    let mut prev = rn;
    for (i, ri) in r.iter_mut().enumerate().take(n - 1) {
        *ri = step(i, prev);
        prev = *ri;
    }
    if n > 1 {
        r[n - 1] = step(n - 1, r[n - 2]);
    }
    let p: Vec<f64> = (0..n).map(|i| network.c[i] / network.b[i] * r[i]).collect();
    let mut residual = 0.0f64;
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let dr = -network.a[i] * r[i] + network.beta[i] * hill(p[prev], network.nu[i], network.f_kind[i])?;
        let dp = -network.b[i] * p[i] + network.c[i] * r[i];
        residual = residual.max(dr.abs()).max(dp.abs());
    }
    Ok(GeneEquilibrium { r, p, residual })
}

/// Invariant attracting box built from interval images of `G_j = g_j / mu_j`.
pub fn attractor_box(system: &UnidirectionalSystem) -> Result<IntervalBox> {
    let n = system.n();
    if system.mu.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::Unsupported("attractor box needs all decay rates positive".into()));
    }
    let last = &system.g[n - 1];
    if !last.is_bounded() {
        return Err(Error::Unsupported("last coupling is unbounded".into()));
    }
    let image = |j: usize, [lo, hi]: [f64; 2]| -> [f64; 2] {
        let (a, b) = system.g[j].image_scaled(lo, hi, system.mu[j]);
        [a, b]
    };
    // closure of G_1 o ... o G_N (R)
    let mut first = image(n - 1, [f64::NEG_INFINITY, f64::INFINITY]);
    for j in (0..n - 1).rev() {
        first = image(j, first);
    }
    let mut intervals = vec![[0.0; 2]; n];
    intervals[0] = first;
    if n > 1 {
        intervals[n - 1] = image(n - 1, first);
        for j in (1..n - 1).rev() {
            intervals[j] = image(j, intervals[j + 1]);
        }
    }
    if intervals.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Unsupported("attractor box is unbounded".into()));
    }
    Ok(IntervalBox { intervals })
}
