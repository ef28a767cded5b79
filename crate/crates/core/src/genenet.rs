//! Cyclic gene regulatory loops and their reduction to unidirectional form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{Trajectory, TrajectoryKind};
use crate::steady::{equilibrium_gene, GeneEquilibrium};
use crate::systems::{Nonlinearity, SystemState, UnidirectionalSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HillKind {
    Increasing,
    Decreasing,
}

impl HillKind {
    pub fn sign(self) -> f64 {
        match self {
            HillKind::Increasing => 1.0,
            HillKind::Decreasing => -1.0,
        }
    }
}

/// Hill function on `x >= 0`: `1 / (1 + x^nu)` or `x^nu / (1 + x^nu)`.
pub fn hill(x: f64, nu: f64, kind: HillKind) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain { t: x, start: 0.0, end: f64::INFINITY });
    }
    let up = crate::systems::hill_odd(x, nu);
    Ok(match kind {
        HillKind::Increasing => up,
        HillKind::Decreasing => 1.0 - up,
    })
}

pub fn hill_derivative(x: f64, nu: f64, kind: HillKind) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain { t: x, start: 0.0, end: f64::INFINITY });
    }
    Ok(kind.sign() * crate::systems::hill_odd_derivative(x, nu))
}

/// Same as [`hill`] but extended oddly to negative arguments; used inside
/// integrators where round-off may produce tiny negative values.
pub(crate) fn hill_total(x: f64, nu: f64, kind: HillKind) -> f64 {
    let up = crate::systems::hill_odd(x, nu);
    match kind {
        HillKind::Increasing => up,
        HillKind::Decreasing => 1.0 - up,
    }
}

/// `r_i' = -a_i r_i + beta_i f_i(p_{i-1}(t - tau_p[i]))`,
/// `p_i' = -b_i p_i + c_i r_i(t - tau_r[i])`, indices mod `n`.
///
/// `tau_p[i]` is the delay with which `p_{i-1}` acts on `r_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneNetwork {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub beta: Vec<f64>,
    pub c: Vec<f64>,
    pub nu: Vec<f64>,
    pub f_kind: Vec<HillKind>,
    pub tau_p: Vec<f64>,
    pub tau_r: Vec<f64>,
}

impl GeneNetwork {
    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn check(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::InvalidSystem("gene network needs at least one gene".into()));
        }
        let lens = [
            self.b.len(),
            self.beta.len(),
            self.c.len(),
            self.nu.len(),
            self.f_kind.len(),
            self.tau_p.len(),
            self.tau_r.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            return Err(Error::InvalidSystem("gene network parameter arrays differ in length".into()));
        }
        for (name, v) in [("a", &self.a), ("b", &self.b), ("beta", &self.beta), ("c", &self.c)] {
            if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(Error::InvalidSystem(format!("rates {name} must be positive")));
            }
        }
        if self.nu.iter().any(|x| !(x.is_finite() && *x >= 1.0)) {
            return Err(Error::InvalidSystem("Hill exponents must be >= 1".into()));
        }
        if self.tau_p.iter().chain(&self.tau_r).any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidSystem("delays must be nonnegative".into()));
        }
        if !(self.total_delay() > 0.0) {
            return Err(Error::InvalidSystem("total loop delay must be positive".into()));
        }
        if self.decreasing_count().is_multiple_of(2) {
            return Err(Error::InconsistentParity);
        }
        Ok(())
    }

    pub fn decreasing_count(&self) -> usize {
        self.f_kind.iter().filter(|k| **k == HillKind::Decreasing).count()
    }

    pub fn total_delay(&self) -> f64 {
        self.tau_p.iter().chain(&self.tau_r).sum()
    }

    pub fn max_delay(&self) -> f64 {
        self.tau_p.iter().chain(&self.tau_r).fold(0.0f64, |a, &b| a.max(b))
    }

    /// Right-hand side. `x` holds `r_1, p_1, ..., r_n, p_n`; `delayed[2i]`
    /// is `p_{i-1}(t - tau_p[i])` and `delayed[2i+1]` is `r_i(t - tau_r[i])`.
    pub fn rhs(&self, x: &[f64], delayed: &[f64], out: &mut [f64]) {
        for i in 0..self.n() {
            out[2 * i] = -self.a[i] * x[2 * i] + self.beta[i] * hill_total(delayed[2 * i], self.nu[i], self.f_kind[i]);
            out[2 * i + 1] = -self.b[i] * x[2 * i + 1] + self.c[i] * delayed[2 * i + 1];
        }
    }

    /// Upper corners of the forward invariant, attracting box, interleaved as
    /// `r_1, p_1, ...`: `r_i < beta_i / a_i` and `p_i < c_i beta_i / (a_i b_i)`.
    /// Hill values never exceed one, so `c_i / b_i` alone bounds `p_i` only when `beta_i <= a_i`.
    pub fn invariant_box(&self) -> Vec<f64> {
        (0..self.n())
            .flat_map(|i| {
                let r = self.beta[i] / self.a[i];
                [r, self.c[i] / self.b[i] * r]
            })
            .collect()
    }
}

/// Symmetric three-gene repression loop with unit rates except `beta`, its
/// total delay `t` split evenly over the six couplings.
pub fn repressilator_preset(t: f64, nu: f64, beta: f64) -> Result<GeneNetwork> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Argument(format!("total delay must be positive, got {t}")));
    }
    let net = GeneNetwork {
        a: vec![1.0; 3],
        b: vec![1.0; 3],
        beta: vec![beta; 3],
        c: vec![1.0; 3],
        nu: vec![nu; 3],
        f_kind: vec![HillKind::Decreasing; 3],
        tau_p: vec![t / 6.0; 3],
        tau_r: vec![t / 6.0; 3],
    };
    net.check()?;
    Ok(net)
}

/// A gene network rewritten as a zero-centered unidirectional loop with unit delay.
///
/// Loop variable `X_{2j-1}` (one-based) is protein `p_k` and `X_{2j}` is mRNA
/// `r_k` with `k = n + 1 - j`, each shifted in time by `offsets` so that the
/// whole loop delay sits in the last coupling; time is rescaled by the total
/// delay. The system variables are `z_j = signs_j X_j - shift_j`.
#[derive(Debug, Clone)]
pub struct GeneTransform {
    pub system: UnidirectionalSystem,
    /// Equilibrium of the loop variables after sign changes, `x*_j = signs_j X*_j`.
    pub shift: Vec<f64>,
    pub signs: Vec<f64>,
    /// Time shifts `D_j` in original time units.
    pub offsets: Vec<f64>,
    pub total_delay: f64,
    /// Loop gain at the equilibrium.
    pub k: f64,
    pub equilibrium: GeneEquilibrium,
}

impl GeneTransform {
    /// Gene index (zero-based) and whether loop variable `j` (zero-based) is a protein.
    fn source(&self, j: usize) -> (usize, bool) {
        let n = self.system.n() / 2;
        let k = n - 1 - j / 2;
        (k, j.is_multiple_of(2))
    }

    fn gene_slot(&self, j: usize) -> usize {
        let (k, protein) = self.source(j);
        2 * k + usize::from(protein)
    }

    /// State of the unidirectional system at rescaled time `u / T`, read from a
    /// gene trajectory that covers `[u - T, u]`.
    pub fn state_from_gene(&self, gene: &Trajectory, u: f64, m: usize) -> Result<SystemState> {
        if !matches!(gene.kind(), TrajectoryKind::Gene { .. }) {
            return Err(Error::Argument("expected a gene network trajectory".into()));
        }
        let t = self.total_delay;
        let slot0 = self.gene_slot(0);
        let s0 = self.signs[0];
        let x0 = self.shift[0];
        let h = 1.0 / m as f64;
        let mut hist = Vec::with_capacity(m + 1);
        let mut der = Vec::with_capacity(m + 1);
        for k in 0..=m {
            let theta = if k == m { 0.0 } else { -1.0 + k as f64 * h };
            let v = u + t * theta - self.offsets[0];
            hist.push(s0 * gene.value(v, slot0)? - x0);
            der.push(s0 * t * gene.derivative(v, slot0)?);
        }
        let tail = (1..self.system.n())
            .map(|j| Ok(self.signs[j] * gene.value(u - self.offsets[j], self.gene_slot(j))? - self.shift[j]))
            .collect::<Result<Vec<_>>>()?;
        SystemState::new(1.0, hist, der, tail)
    }

    /// Gene variables `r_1, p_1, ..., r_n, p_n` at original time `v` from a
    /// trajectory of the transformed system whose time zero is original time `u`
    /// (as produced by [`Self::state_from_gene`]).
    pub fn gene_point_from_loop(&self, traj: &Trajectory, u: f64, v: f64) -> Result<Vec<f64>> {
        let nn = self.system.n();
        let mut out = vec![0.0; nn];
        for j in 0..nn {
            let s = (v - u + self.offsets[j]) / self.total_delay;
            let z = traj.value(s, j)?;
            out[self.gene_slot(j)] = self.signs[j] * (z + self.shift[j]);
        }
        Ok(out)
    }

    /// Gene variables corresponding to a single state of the loop (all taken
    /// at the loop's current time, hence time-shifted against each other).
    pub fn gene_values_of_point(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; z.len()];
        for (j, zj) in z.iter().enumerate() {
            out[self.gene_slot(j)] = self.signs[j] * (zj + self.shift[j]);
        }
        out
    }
}

/// Rewrites the network as a unidirectional loop with unit delay and zero equilibrium.
pub fn to_unidirectional(network: &GeneNetwork) -> Result<GeneTransform> {
    network.check()?;
    let eq = equilibrium_gene(network)?;
    let n = network.n();
    let nn = 2 * n;
    let t = network.total_delay();
    let mut mu = Vec::with_capacity(nn);
    let mut g = Vec::with_capacity(nn);
    let mut signs = vec![1.0; nn + 1];
    let mut offsets = vec![0.0; nn + 1];
    let mut shift = vec![0.0; nn];
    for j in 0..n {
        let k = n - 1 - j;
        let prev = (k + n - 1) % n;
        let sk = network.f_kind[k].sign();
        // protein p_k driven by r_k
        mu.push(t * network.b[k]);
        g.push(Nonlinearity::linear(t * network.c[k]));
        signs[2 * j + 1] = signs[2 * j];
        offsets[2 * j + 1] = offsets[2 * j] + network.tau_r[k];
        // mRNA r_k driven by p_{k-1}
        mu.push(t * network.a[k]);
        offsets[2 * j + 2] = offsets[2 * j + 1] + network.tau_p[k];
        let sigma_arg = if j + 1 < n { signs[2 * j + 1] * sk } else { 1.0 };
        signs[2 * j + 2] = sigma_arg;
        g.push(Nonlinearity::shifted_hill(
            signs[2 * j + 1] * sk * t * network.beta[k],
            sigma_arg,
            network.nu[k],
            eq.p[prev],
        ));
        shift[2 * j] = signs[2 * j] * eq.p[k];
        shift[2 * j + 1] = signs[2 * j + 1] * eq.r[k];
    }
    if g[nn - 1].direction() >= 0.0 {
        return Err(Error::InconsistentParity);
    }
    let k_gain = t.powi(nn as i32)
        * (0..n)
            .map(|i| {
                let prev = (i + n - 1) % n;
                network.c[i] * network.beta[i] * hill_derivative(eq.p[prev], network.nu[i], network.f_kind[i]).map(f64::abs).unwrap_or(f64::NAN)
            })
            .product::<f64>();
    signs.truncate(nn);
    offsets.truncate(nn);
    let system = UnidirectionalSystem::new(mu, g, 1.0)?;
    Ok(GeneTransform { system, shift, signs, offsets, total_delay: t, k: k_gain, equilibrium: eq })
}
